"""Standard aggregate queries.

Ranges are half-open ``[low, up)`` and ``select`` is 0-based.  Each builder
returns a :class:`QueryDef`; pass it (or its name and arguments) to
``Handle.query``.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Callable

from .aggregate import AggregateSpec
from .backbone import Landing, QueryDef, QueryFailure, Stage


def _count(spec: AggregateSpec, agg) -> int:
    if spec.count is None:
        raise QueryFailure("unsupported", f"aggregate {spec.name!r} does not track an element count")
    return spec.count(agg)


def _below(k: int):
    return lambda up_to, node_key: k >= node_key


def _less_than(spec: AggregateSpec, k: int, out: Landing):
    if out.visible and out.leaf.key < k:
        return spec.combine(out.agg, out.leaf_agg)
    return out.agg


def _select_traversal(spec: AggregateSpec, i: int):
    count = spec.count
    if count is None:
        raise QueryFailure("unsupported", f"aggregate {spec.name!r} does not track an element count")
    return lambda up_to, node_key: i >= count(up_to)


def _check_range(low: int, up: int) -> None:
    if low > up:
        raise ValueError(f"empty range bounds: low {low} > up {up}")


# -- builders -----------------------------------------------------------------

def agg_less_than(k: int) -> QueryDef:
    return QueryDef("agg_less_than", (k,), [Stage(
        lambda spec, inp: [_below(inp[0])],
        lambda spec, inp, outs: _less_than(spec, inp[0], outs[0]),
    )])


def rank(k: int) -> QueryDef:
    return QueryDef("rank", (k,), [Stage(
        lambda spec, inp: [_below(inp[0])],
        lambda spec, inp, outs: _count(spec, _less_than(spec, inp[0], outs[0])),
    )])


def _select_answer(spec: AggregateSpec, i: int, out: Landing) -> int:
    if i < 0 or not out.visible or _count(spec, out.agg) != i:
        raise QueryFailure("index", f"select index {i} out of range")
    return out.leaf.key


def select(i: int) -> QueryDef:
    return QueryDef("select", (i,), [Stage(
        lambda spec, inp: [_select_traversal(spec, inp[0])],
        lambda spec, inp, outs: _select_answer(spec, inp[0], outs[0]),
    )])


def range_aggregate(low: int, up: int) -> QueryDef:
    _check_range(low, up)
    return QueryDef("range_aggregate", (low, up), [Stage(
        lambda spec, inp: [_below(inp[1]), _below(inp[0])],
        lambda spec, inp, outs: spec.subtract(
            _less_than(spec, inp[1], outs[0]), _less_than(spec, inp[0], outs[1])),
    )])


def _range_tuple(spec: AggregateSpec, inp, outs, width: int = 0):
    agg = spec.subtract(_less_than(spec, inp[1], outs[0]), _less_than(spec, inp[0], outs[1]))
    n = _count(spec, agg)
    if not isinstance(agg, tuple) or (width and len(agg) != width):
        raise QueryFailure("unsupported", f"aggregate {spec.name!r} has no value sums for this query")
    if n == 0:
        raise QueryFailure("empty", f"range [{inp[0]}, {inp[1]}) is empty")
    return agg, n


def _average(spec, inp, outs):
    agg, n = _range_tuple(spec, inp, outs)
    return Fraction(agg[0]) / n


def _variance(spec, inp, outs):
    agg, n = _range_tuple(spec, inp, outs, 3)
    mean = Fraction(agg[0]) / n
    return Fraction(agg[1]) / n - mean * mean


def average_in_range(low: int, up: int) -> QueryDef:
    _check_range(low, up)
    return QueryDef("average_in_range", (low, up), [Stage(
        lambda spec, inp: [_below(inp[1]), _below(inp[0])], _average,
    )])


def variance_in_range(low: int, up: int) -> QueryDef:
    _check_range(low, up)
    return QueryDef("variance_in_range", (low, up), [Stage(
        lambda spec, inp: [_below(inp[1]), _below(inp[0])], _variance,
    )])


def _median_index(spec, inp, outs) -> int:
    low, up = inp
    r_up = _count(spec, _less_than(spec, up, outs[0]))
    r_low = _count(spec, _less_than(spec, low, outs[1]))
    if r_up <= r_low:
        raise QueryFailure("empty", f"range [{low}, {up}) is empty")
    return r_low + (r_up - r_low) // 2


def median_key_in_range(low: int, up: int) -> QueryDef:
    _check_range(low, up)
    return QueryDef("median_key_in_range", (low, up), [
        Stage(lambda spec, inp: [_below(inp[1]), _below(inp[0])], _median_index),
        Stage(
            lambda spec, i: [_select_traversal(spec, i)],
            lambda spec, i, outs: _select_answer(spec, i, outs[0]),
        ),
    ])


QUERIES: dict[str, Callable[..., QueryDef]] = {
    "agg_less_than": agg_less_than,
    "rank": rank,
    "select": select,
    "range_aggregate": range_aggregate,
    "average_in_range": average_in_range,
    "variance_in_range": variance_in_range,
    "median_key_in_range": median_key_in_range,
}


def make_query(name: str, *args) -> QueryDef:
    try:
        builder = QUERIES[name]
    except KeyError:
        raise ValueError(f"unknown query {name!r}; choose from {', '.join(QUERIES)}") from None
    return builder(*(int(a) for a in args))

