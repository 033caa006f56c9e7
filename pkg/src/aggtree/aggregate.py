"""Subtractive aggregate functions used as node metadata.

An :class:`AggregateSpec` describes a function ``f`` over sets of
``(key, value)`` pairs that decomposes as ``f(X) = combine over a in X of
leaf_fn(a)``, where ``combine`` makes the carrier an abelian group.  The group
inverse (``subtract``) is what lets a deletion be folded into an ancestor's
metadata without recomputing it from the leaves.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Iterable, Optional

from .basetree import NEG_INF, POS_INF

AggValue = Any


@dataclass(frozen=True)
class AggregateSpec:
    """An abelian group ``(B, combine)`` plus the per-element base map.

    ``count`` extracts the element count from a carrier value when the spec
    tracks one (needed by rank/select/median).  ``exact`` is False for
    floating carriers, where comparisons use a relative tolerance.
    """

    name: str
    leaf_fn: Callable[[int, Any], AggValue]
    combine: Callable[[AggValue, AggValue], AggValue]
    subtract: Optional[Callable[[AggValue, AggValue], AggValue]]
    identity: AggValue
    count: Optional[Callable[[AggValue], int]] = None
    exact: bool = True
    doc: str = field(default="", compare=False)

    def __post_init__(self) -> None:
        if self.subtract is None:
            raise ValueError(
                f"aggregate {self.name!r} has no inverse operation; only "
                "subtractive (group) aggregates can be maintained under deletion"
            )

    def leaf_value(self, key: int, value: Any) -> AggValue:
        if key == NEG_INF or key == POS_INF:
            return self.identity
        return self.leaf_fn(key, value)

    def fold(self, items: Iterable[tuple[int, Any]]) -> AggValue:
        acc = self.identity
        for k, v in items:
            acc = self.combine(acc, self.leaf_value(k, v))
        return acc

    def close(self, a: AggValue, b: AggValue, rel: float = 1e-9) -> bool:
        """Equality on the carrier, with relative tolerance for inexact specs."""
        if self.exact:
            return a == b
        if isinstance(a, tuple):
            return len(a) == len(b) and all(_close(x, y, rel) for x, y in zip(a, b))
        return _close(a, b, rel)


def _close(x, y, rel: float) -> bool:
    return abs(x - y) <= rel * max(1.0, abs(x), abs(y))


def leaf_value(spec: AggregateSpec, key: int, value: Any) -> AggValue:
    return spec.leaf_value(key, value)


def combine(spec: AggregateSpec, a: AggValue, b: AggValue) -> AggValue:
    return spec.combine(a, b)


def subtract(spec: AggregateSpec, a: AggValue, b: AggValue) -> AggValue:
    return spec.subtract(a, b)


def fold(spec: AggregateSpec, items: Iterable[tuple[int, Any]]) -> AggValue:
    return spec.fold(items)


# -- built-in specs ---------------------------------------------------------

def _add(a, b):
    return a + b


def _sub(a, b):
    return a - b


def _mul(a, b):
    return a * b


def _div(a, b):
    if b == 0:
        raise ZeroDivisionError("product aggregate: zero has no multiplicative inverse")
    if isinstance(a, (int, Fraction)) and isinstance(b, (int, Fraction)):
        q = Fraction(a) / Fraction(b)
        return q.numerator if q.denominator == 1 else q
    return a / b


def _product_leaf(key, value):
    if value == 0:
        raise ValueError("product aggregate requires nonzero values")
    return value


def _tuple_add(a, b):
    return tuple(x + y for x, y in zip(a, b))


def _tuple_sub(a, b):
    return tuple(x - y for x, y in zip(a, b))


def _count_identity(v):
    return v


def _last(v):
    return v[-1]


COUNT = AggregateSpec(
    "count", lambda k, v: 1, _add, _sub, 0, count=_count_identity,
    doc="number of elements",
)
KEYSUM = AggregateSpec("keysum", lambda k, v: k, _add, _sub, 0, doc="sum of keys")
VALSUM = AggregateSpec("valsum", lambda k, v: v, _add, _sub, 0, doc="sum of values")
SUMSQ = AggregateSpec("sumsq", lambda k, v: v * v, _add, _sub, 0, doc="sum of squared values")
PRODUCT = AggregateSpec(
    "product", _product_leaf, _mul, _div, 1, doc="product of (nonzero) values",
)
SUMSIZE = AggregateSpec(
    "sumsize", lambda k, v: (v, 1), _tuple_add, _tuple_sub, (0, 0), count=_last,
    doc="<sum of values, count> for averages",
)
MOMENTS = AggregateSpec(
    "moments", lambda k, v: (v, v * v, 1), _tuple_add, _tuple_sub, (0, 0, 0), count=_last,
    doc="<sum, sum of squares, count> for variances",
)
DONATIONS = AggregateSpec(
    "donations", lambda k, v: k * len(v), _add, _sub, 0,
    doc="sum of key * len(value): total donated when value lists the donors",
)

BUILTIN_SPECS: dict[str, AggregateSpec] = {
    s.name: s for s in (COUNT, KEYSUM, VALSUM, SUMSQ, PRODUCT, SUMSIZE, MOMENTS, DONATIONS)
}


def get_spec(spec: "str | AggregateSpec") -> AggregateSpec:
    if isinstance(spec, AggregateSpec):
        return spec
    try:
        return BUILTIN_SPECS[spec]
    except KeyError:
        raise ValueError(
            f"unknown aggregate {spec!r}; choose from {', '.join(sorted(BUILTIN_SPECS))}"
        ) from None


def float_spec(spec: AggregateSpec) -> AggregateSpec:
    """Same algebra, flagged as an inexact (floating) carrier."""
    return AggregateSpec(
        spec.name, spec.leaf_fn, spec.combine, spec.subtract, spec.identity,
        count=spec.count, exact=False, doc=spec.doc,
    )
