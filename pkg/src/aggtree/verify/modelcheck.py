"""Exhaustive model check of the helping loop on one aggregate field.

Each helper is the fast-query aggregate update loop reduced to its two
shared-memory steps: a timestamped read of the field's head, and a
``write_if_timestamp``.  Everything between them is thread-local, so
interleaving at this granularity covers every behaviour.  Global states are
memoised, which keeps the search small for a handful of helpers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Sequence

from ..aggregate import AggregateSpec, get_spec
from ..backbone import INSERT
from ..versioned import Version, VersionedField

READ, WRITE, DONE = 0, 1, 2


@dataclass(frozen=True)
class Op:
    """An effectual operation as the helping loop sees it."""
    ts: int
    kind: str
    delta: Any


@dataclass
class ModelResult:
    states: int = 0
    terminals: int = 0
    violations: list[str] = field(default_factory=list)
    finals: set = field(default_factory=set)

    @property
    def ok(self) -> bool:
        return not self.violations


def _apply(spec: AggregateSpec, val, op: Op):
    return spec.combine(val, op.delta) if op.kind == INSERT else spec.subtract(val, op.delta)


def _field(chain: tuple) -> VersionedField:
    f = VersionedField(None)
    f.head = None
    for ts, val in reversed(chain):
        f.head = Version(val, ts, f.head)
    return f


def step(spec: AggregateSpec, chain: tuple, helper: tuple, local: Sequence[Op], mine: Op):
    """One atomic step of one helper; returns the new ``(chain, helper)``.

    ``helper`` is ``(pc, i, last_ts, pending_value)``.
    """
    pc, i, last, pending = helper
    if pc == READ:
        last, value = chain[0]
        if last >= mine.ts:
            return chain, (DONE, i, last, None)
        n = len(local)
        while i < n and local[i].ts <= last:
            i += 1
        if i == n:
            return chain, (DONE, i, last, None)
        return chain, (WRITE, i, last, _apply(spec, value, local[i]))
    if pc == WRITE:
        f = _field(chain)
        f.write_if_timestamp(last, pending, local[i].ts)
        return tuple(f.chain()), (READ, i, last, None)
    raise ValueError("helper already finished")


def model_check_helping(spec: "AggregateSpec | str", initial: Any, initial_ts: int,
                        helpers: Sequence[tuple[Sequence[Op], Op]]) -> ModelResult:
    """Explore every interleaving of ``helpers`` on one field.

    Each helper is ``(local, mine)``: its gathered announcements, oldest
    first and ending with its own operation ``mine``.  In every terminal
    state the chain must hold exactly one version per timestamp in the union
    of the helpers' local sets, in decreasing timestamp order, each equal to
    the fold of all operations up to it.
    """
    spec = get_spec(spec)
    res = ModelResult()
    ops = sorted({op for local, _ in helpers for op in local}, key=lambda o: o.ts)
    expect = [(initial_ts, initial)]
    for op in ops:
        expect.append((op.ts, _apply(spec, expect[-1][1], op)))
    expect_chain = tuple(reversed(expect))

    start = (((initial_ts, initial),), tuple((READ, 0, None, None) for _ in helpers))
    seen = {start}
    todo = [start]
    while todo:
        chain, hs = todo.pop()
        res.states += 1
        live = [k for k, h in enumerate(hs) if h[0] != DONE]
        if not live:
            res.terminals += 1
            res.finals.add(chain)
            if chain != expect_chain:
                res.violations.append(f"final chain {chain} != expected {expect_chain}")
            continue
        for k in live:
            local, mine = helpers[k]
            nchain, nh = step(spec, chain, hs[k], local, mine)
            if nh[0] == DONE and nchain[0][0] < mine.ts:
                res.violations.append(f"helper {k} finished with head ts {nchain[0][0]} < {mine.ts}")
            ts_list = [t for t, _ in nchain]
            if len(set(ts_list)) != len(ts_list) or ts_list != sorted(ts_list, reverse=True):
                res.violations.append(f"chain {nchain} repeats or misorders a timestamp")
            nxt = (nchain, hs[:k] + (nh,) + hs[k + 1:])
            if nxt not in seen:
                seen.add(nxt)
                todo.append(nxt)
    return res


__all__ = ["Op", "ModelResult", "model_check_helping", "step", "READ", "WRITE", "DONE"]
