"""Offline linearizability checking of recorded histories.

A Wing-Gong search with memoisation on (linearized set, abstract state).
Recorded timestamps constrain the search: effectual operations go in
timestamp order, and a query sits after every effectual operation with a
timestamp at most its own and before every one with a larger timestamp.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Any, Iterable

from ..aggregate import AggregateSpec
from .history import Event, History
from .oracle import Oracle

LINEARIZABLE = "linearizable"
NOT_LINEARIZABLE = "not_linearizable"
BUDGET_EXHAUSTED = "budget_exhausted"

EXHAUSTIVE_LIMIT = 8


@dataclass
class Verdict:
    status: str
    order: list[Event] = field(default_factory=list)
    explored: int = 0
    detail: str = ""

    @property
    def ok(self) -> bool:
        return self.status == LINEARIZABLE

    def __str__(self) -> str:
        if self.ok:
            return "linearizable: " + " ; ".join(e.describe() for e in self.order)
        return f"{self.status} after {self.explored} states: {self.detail}"


def _same(spec: AggregateSpec, got: Any, want: Any) -> bool:
    if got is want:
        return True
    if spec.exact:
        return got == want
    try:
        return spec.close(got, want)
    except TypeError:
        return got == want


class _Budget(Exception):
    pass


def check_linearizable(
    history: History | Iterable[Event],
    spec: AggregateSpec | str = "count",
    initial: Iterable[tuple[int, Any]] = (),
    *,
    use_timestamps: bool = True,
    budget: int = 200_000,
    restarts: int = 8,
    seed: int = 0,
) -> Verdict:
    """Search for a legal sequential order of the completed events.

    Up to ``EXHAUSTIVE_LIMIT`` operations the search is exhaustive with an
    unbounded budget.  Larger histories get ``restarts`` randomized searches
    of ``budget`` states each; running out is reported as
    ``budget_exhausted``, never as a violation.
    """
    events = [e for e in history if e.response >= 0]
    base = Oracle(spec, initial)
    n = len(events)
    if n == 0:
        return Verdict(LINEARIZABLE)
    # must_precede[i]: bitmask of events that completed before i was invoked
    must = [0] * n
    for i, a in enumerate(events):
        for j, b in enumerate(events):
            if b.response < a.invoke:
                must[i] |= 1 << j
    eff = [e.effectual and e.ts is not None for e in events]
    qry = [e.op == "query" and e.ts is not None for e in events]
    ts = [e.ts for e in events]

    def allowed(i: int, done: int) -> bool:
        if must[i] & ~done:
            return False
        if not use_timestamps:
            return True
        t = ts[i]
        if eff[i]:
            for j in range(n):
                if done >> j & 1:
                    continue
                if eff[j] and ts[j] < t:
                    return False
                if qry[j] and ts[j] < t:
                    return False
        elif qry[i]:
            for j in range(n):
                if not done >> j & 1 and eff[j] and ts[j] <= t:
                    return False
        return True

    full = (1 << n) - 1
    exhaustive = n <= EXHAUSTIVE_LIMIT
    rounds = 1 if exhaustive else max(1, restarts)
    total = 0
    deepest: list[int] = []
    for r in range(rounds):
        rng = random.Random(seed * 1_000_003 + r) if (r > 0 or not exhaustive) else None
        seen: set = set()
        count = 0
        best: list[int] = []

        def dfs(done: int, state: Oracle, order: list[int]) -> list[int] | None:
            nonlocal count, best
            if done == full:
                return order
            key = (done, state.state_key())
            if key in seen:
                return None
            seen.add(key)
            count += 1
            if not exhaustive and count > budget:
                raise _Budget
            if len(order) > len(best):
                best = list(order)
            cands = [i for i in range(n) if not done >> i & 1 and allowed(i, done)]
            if rng is not None:
                rng.shuffle(cands)
            for i in cands:
                e = events[i]
                nxt = state if e.op in ("contains", "query") else state.copy()
                res = nxt.apply(e.op, e.args)
                if not _same(base.spec, e.result, res):
                    continue
                got = dfs(done | 1 << i, nxt, order + [i])
                if got is not None:
                    return got
            return None

        try:
            found = dfs(0, base.copy(), [])
        except _Budget:
            total += count
            if len(best) > len(deepest):
                deepest = best
            continue
        total += count
        if found is not None:
            return Verdict(LINEARIZABLE, [events[i] for i in found], total)
        if len(best) > len(deepest):
            deepest = best
        stuck = [events[i].describe() for i in range(n) if i not in set(deepest)]
        return Verdict(
            NOT_LINEARIZABLE, [events[i] for i in deepest], total,
            "no legal order; longest prefix stalls before: " + " | ".join(stuck),
        )
    return Verdict(BUDGET_EXHAUSTED, [events[i] for i in deepest], total,
                   f"gave up after {rounds} searches of {budget} states")
