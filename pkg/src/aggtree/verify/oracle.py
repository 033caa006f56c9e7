"""Sequential reference: a sorted map answering every query by brute force."""

from __future__ import annotations

import bisect
from fractions import Fraction
from typing import Any, Iterable

from ..aggregate import AggregateSpec, get_spec
from ..basetree import NOT_FOUND
from .history import QueryError


class Oracle:
    def __init__(self, spec: "AggregateSpec | str" = "count",
                 items: Iterable[tuple[int, Any]] = ()) -> None:
        self.spec = get_spec(spec)
        self.keys: list[int] = []
        self.vals: dict[int, Any] = {}
        for k, v in items:
            self.insert(k, v)

    def copy(self) -> "Oracle":
        o = Oracle(self.spec)
        o.keys = list(self.keys)
        o.vals = dict(self.vals)
        return o

    def items(self) -> list[tuple[int, Any]]:
        return [(k, self.vals[k]) for k in self.keys]

    def state_key(self):
        try:
            return tuple(self.items())
        except TypeError:
            return repr(self.items())

    # -- dictionary ---------------------------------------------------------------

    def insert(self, k: int, v: Any = None) -> bool:
        if k in self.vals:
            return False
        bisect.insort(self.keys, k)
        self.vals[k] = v
        return True

    def delete(self, k: int) -> Any:
        if k not in self.vals:
            return NOT_FOUND
        self.keys.pop(bisect.bisect_left(self.keys, k))
        return self.vals.pop(k)

    def contains(self, k: int) -> Any:
        return self.vals.get(k, NOT_FOUND)

    # -- queries ------------------------------------------------------------------

    def _in(self, low: int, up: int) -> list[int]:
        return self.keys[bisect.bisect_left(self.keys, low):bisect.bisect_left(self.keys, up)]

    def _fold(self, keys: list[int]):
        return self.spec.fold((k, self.vals[k]) for k in keys)

    def query(self, name: str, *args) -> Any:
        """Answer, or a :class:`QueryError` where the tree would raise."""
        spec = self.spec
        counted = spec.count is not None
        if name == "agg_less_than":
            return self._fold(self.keys[:bisect.bisect_left(self.keys, args[0])])
        if name == "rank":
            if not counted:
                return QueryError("unsupported")
            return bisect.bisect_left(self.keys, args[0])
        if name == "select":
            if not counted:
                return QueryError("unsupported")
            i = args[0]
            if 0 <= i < len(self.keys):
                return self.keys[i]
            return QueryError("index")
        low, up = args
        if low > up:
            raise ValueError(f"empty range bounds: low {low} > up {up}")
        keys = self._in(low, up)
        if name == "range_aggregate":
            return self._fold(keys)
        if name in ("average_in_range", "variance_in_range"):
            tup = isinstance(spec.identity, tuple)
            if not counted or not tup or (name == "variance_in_range" and len(spec.identity) != 3):
                return QueryError("unsupported")
            if not keys:
                return QueryError("empty")
            vals = [Fraction(self.vals[k]) for k in keys]
            mean = sum(vals) / len(vals)
            if name == "average_in_range":
                return mean
            return sum((v - mean) ** 2 for v in vals) / len(vals)
        if name == "median_key_in_range":
            if not counted:
                return QueryError("unsupported")
            if not keys:
                return QueryError("empty")
            return keys[len(keys) // 2]
        raise ValueError(f"unknown query {name!r}")

    def apply(self, op: str, args: tuple) -> Any:
        if op == "insert":
            return self.insert(args[0], args[1] if len(args) > 1 else None)
        if op == "delete":
            return self.delete(args[0])
        if op == "contains":
            return self.contains(args[0])
        if op == "query":
            return self.query(args[0], *args[1:])
        raise ValueError(f"unknown op {op!r}")


def oracle_apply(state: Oracle, op: str, args: tuple) -> tuple[Oracle, Any]:
    """Pure form: returns a new state and the operation's result."""
    nxt = state if op in ("contains", "query") else state.copy()
    return nxt, nxt.apply(op, args)
