"""Variant-independent tree logic.

Effectual operations follow the same seven steps in both variants: lock,
announce, update aggregates, apply, unannounce, finalize (deletions only),
unlock.  Queries take a timestamp once and run every traversal of every
chained stage against it.  Subclasses supply the registry of announcements,
the timestamp source and the aggregate representation.
"""

from __future__ import annotations

import time
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, Callable, Sequence

from ._atomic import AtomicCounter
from .aggregate import AggregateSpec, get_spec
from .basetree import (
    LEFT,
    LOCKED,
    NEG_INF,
    NOT_FOUND,
    PERMANENT,
    POS_INF,
    RIGHT,
    InternalNode,
    Leaf,
    check_key,
    is_edge_locked,
    make_insert_node,
    make_sentinels,
    owner_of,
    try_lock_edge,
    try_permanent_lock,
    unlock_edge,
)
from .verify.counters import Counters
from .verify.history import HistoryLog, QueryError

INSERT = "insert"
DELETE = "delete"
NOT_SET = (1 << 63) - 1

FAULTS = ("skip_plugin", "skip_agg")

Hook = Callable[[int, str], None]


class Update:
    """Announcement of one in-flight effectual operation."""

    __slots__ = (
        "timestamp", "leaf", "edge_source", "edge_target", "edge_direction",
        "done", "kind", "tid", "delta",
    )

    def __init__(self, leaf, edge_source, edge_target, edge_direction, kind, tid, delta,
                 timestamp=NOT_SET) -> None:
        self.timestamp = timestamp
        self.leaf = leaf
        self.edge_source = edge_source
        self.edge_target = edge_target
        self.edge_direction = edge_direction
        self.done = False
        self.kind = kind
        self.tid = tid
        # f({(leaf.key, leaf.value)}), computed once
        self.delta = delta

    def __repr__(self) -> str:
        ts = "NOT_SET" if self.timestamp == NOT_SET else self.timestamp
        d = ", done" if self.done else ""
        return f"Update({self.kind} {self.leaf.key}, ts={ts}, tid={self.tid}{d})"


@dataclass
class Landing:
    """Result of one traversal.

    ``agg`` covers every leaf with key below ``leaf.key`` at the query's
    timestamp; ``leaf_agg`` is the landing leaf's own contribution (identity
    when it is a sentinel or already deleted at that timestamp).
    """

    agg: Any
    leaf: Leaf
    leaf_agg: Any
    visible: bool


Descend = Callable[[Any, int], bool]


@dataclass
class Stage:
    traversals: Callable[[AggregateSpec, Any], Sequence[Descend]]
    compute_answer: Callable[[AggregateSpec, Any, list[Landing]], Any]


@dataclass
class QueryDef:
    name: str
    args: tuple
    stages: list[Stage]


class QueryFailure(ValueError):
    """A query whose answer is undefined (empty range, index out of range)."""

    def __init__(self, kind: str, msg: str) -> None:
        super().__init__(msg)
        self.kind = kind


class Handle:
    """Per-thread access point; one operation in flight at a time."""

    def __init__(self, tree: "AggregateTree", tid: int) -> None:
        self.tree = tree
        self.tid = tid
        self.c = Counters()
        self.last_ts: int | None = None
        # when a list, each query appends a per-query counter record
        self.trace: list[dict] | None = None
        self._busy = False

    def _enter(self) -> None:
        if self._busy:
            raise RuntimeError(f"tid {self.tid} already has an operation in flight")
        self._busy = True

    def insert(self, key: int, value: Any = None) -> bool:
        check_key(key)
        return self._run("insert", (key, value), self.tree._insert, key, value)

    def delete(self, key: int) -> Any:
        check_key(key)
        return self._run("delete", (key,), self.tree._delete, key)

    def contains(self, key: int) -> Any:
        check_key(key)
        return self._run("contains", (key,), self.tree._contains, key)

    def query(self, q: "QueryDef | str", *args, ts: int | None = None) -> Any:
        if isinstance(q, str):
            from .queries import make_query

            q = make_query(q, *args)
        self._enter()
        log = self.tree.history
        ev = log.begin(self.tid, "query", (q.name,) + tuple(q.args)) if log is not None else None
        self.last_ts = None
        try:
            ans = self.tree._run_query(self, q, ts)
        except QueryFailure as e:
            if ev is not None:
                log.end(ev, QueryError(e.kind), self.last_ts)
            raise
        finally:
            self._busy = False
        if ev is not None:
            log.end(ev, ans, self.last_ts)
        return ans

    def reserve_timestamp(self) -> int:
        """A timestamp that later ``query(..., ts=...)`` calls can replay."""
        self._enter()
        try:
            return self.tree._reserve_ts(self)
        finally:
            self._busy = False

    def _run(self, op: str, args: tuple, fn, *fargs):
        self._enter()
        log = self.tree.history
        ev = log.begin(self.tid, op, args) if log is not None else None
        self.last_ts = None
        try:
            res = fn(self, *fargs)
        finally:
            self._busy = False
        if ev is not None:
            log.end(ev, res, self.last_ts)
        return res


class AggregateTree(ABC):
    variant = "abstract"
    # FastQuery narrows its helping set along the step-3 walk, so a recorded
    # path is only trusted while each recorded edge is still the head version.
    _check_recorded_path = False

    def __init__(
        self,
        spec: "AggregateSpec | str" = "count",
        threads: int = 1,
        *,
        path_record: bool = True,
        tid_lock: bool = True,
        backoff: bool = False,
        record_history: bool = False,
        fault: str | None = None,
    ) -> None:
        if threads < 1:
            raise ValueError("threads must be >= 1")
        if fault is not None and fault not in FAULTS:
            raise ValueError(f"unknown fault {fault!r}; choose from {', '.join(FAULTS)}")
        self.spec = get_spec(spec)
        self.threads = threads
        self.path_record = path_record
        self.tid_lock = tid_lock
        self.backoff = backoff
        self.fault = fault
        self.hook: Hook | None = None
        self.history: HistoryLog | None = HistoryLog() if record_history else None
        # effectual operations announced / finished, for concUpdates estimates
        self.announced = AtomicCounter(0)
        self.finished = AtomicCounter(0)
        self._init_registry()
        self.root: InternalNode = make_sentinels(self._root_agg)
        self.handles = [Handle(self, t) for t in range(threads)]

    # -- public conveniences ------------------------------------------------

    def handle(self, tid: int = 0) -> Handle:
        return self.handles[tid]

    def insert(self, key: int, value: Any = None, tid: int = 0) -> bool:
        return self.handles[tid].insert(key, value)

    def delete(self, key: int, tid: int = 0) -> Any:
        return self.handles[tid].delete(key)

    def contains(self, key: int, tid: int = 0) -> Any:
        return self.handles[tid].contains(key)

    def query(self, q, *args, tid: int = 0, ts: int | None = None) -> Any:
        return self.handles[tid].query(q, *args, ts=ts)

    def counters(self) -> Counters:
        total = Counters()
        for h in self.handles:
            for k, v in h.c.as_dict().items():
                if k in ("aux_scan_max", "max_traversal_nodes"):
                    setattr(total, k, max(getattr(total, k), v))
                else:
                    setattr(total, k, getattr(total, k) + v)
        return total

    def reset_counters(self) -> None:
        for h in self.handles:
            h.c.reset()

    # -- variant interface ------------------------------------------------

    @abstractmethod
    def _init_registry(self) -> None: ...

    @abstractmethod
    def _root_agg(self): ...

    @abstractmethod
    def _new_node_agg(self, h: Handle, target: Leaf): ...

    @abstractmethod
    def _announce(self, h: Handle, u: Update) -> None: ...

    @abstractmethod
    def _unannounce(self, h: Handle, u: Update) -> None: ...

    @abstractmethod
    def _gather_for_update(self, h: Handle, u: Update) -> list | None: ...

    @abstractmethod
    def _update_agg(self, h: Handle, node: InternalNode, u: Update, local) -> None: ...

    @abstractmethod
    def _acquire_query_ts(self, h: Handle) -> int: ...

    @abstractmethod
    def _reserve_ts(self, h: Handle) -> int: ...

    @abstractmethod
    def _gather(self, h: Handle, ts: int, first: bool) -> list[Update]: ...

    @abstractmethod
    def _read_agg(self, h: Handle, child, ts: int, local: list[Update], parent_key: int): ...

    @abstractmethod
    def _find_announced(self, h: Handle, kind: str, key: int, owner: int | None) -> Update | None: ...

    @abstractmethod
    def _guarantee_ts(self, h: Handle, u: Update) -> None: ...

    @abstractmethod
    def current_timestamp(self) -> int: ...

    @abstractmethod
    def node_agg(self, node: InternalNode, ts: int):
        """Aggregate stored in ``node`` as of ``ts``, with no plug-ins."""

    @abstractmethod
    def registry_snapshot(self) -> list[Update]: ...

    # -- helpers ------------------------------------------------------------

    def _apply(self, val, u: Update):
        if u.kind == INSERT:
            return self.spec.combine(val, u.delta)
        return self.spec.subtract(val, u.delta)

    def _leaf_agg(self, leaf: Leaf, ts: int):
        if leaf.deleted_ts <= ts:
            return self.spec.identity
        return self.spec.leaf_value(leaf.key, leaf.value)

    def _restart(self, h: Handle, attempt: int) -> None:
        h.c.restarts += 1
        hk = self.hook
        if hk is not None:
            hk(h.tid, "restart")
        if self.backoff:
            time.sleep(min(1e-3, 1e-6 * (1 << min(attempt, 10))))
        else:
            time.sleep(0)

    def _search(self, h: Handle, key: int, record: bool):
        path = [] if record else None
        g = None
        dg = 0
        p = None
        dp = 0
        node = self.root
        n = 0
        while not node.is_leaf:
            n += 1
            if record:
                path.append(node)
            g, dg = p, dp
            p = node
            dp = RIGHT if key >= node.key else LEFT
            node = node.children[dp].head.value
        h.c.nodes_visited += n
        return path, g, dg, p, dp, node

    # -- auxiliary checks ---------------------------------------------------

    def is_deleted(self, h: Handle, leaf: Leaf, parent: InternalNode) -> bool:
        w = parent.lock
        if not w & PERMANENT:
            return False
        owner = owner_of(w, LEFT) if self.tid_lock else None
        u = self._find_announced(h, DELETE, leaf.key, owner)
        if u is not None:
            self._guarantee_ts(h, u)
            return True
        return leaf.marked

    def get_value_if_inserted(self, h: Handle, leaf: Leaf, parent: InternalNode,
                              direction: int, key: int) -> Any:
        locked, owner = is_edge_locked(parent, direction)
        if locked:
            u = self._find_announced(h, INSERT, key, owner if self.tid_lock else None)
            if u is not None:
                self._guarantee_ts(h, u)
                return u.leaf.value
        curr = parent.children[direction].head.value
        while not curr.is_leaf:
            curr = curr.children[RIGHT if key >= curr.key else LEFT].head.value
        if curr.key == key:
            return curr.value
        return NOT_FOUND

    # -- operations -----------------------------------------------------------

    def _contains(self, h: Handle, key: int) -> Any:
        _, _, _, p, d, leaf = self._search(h, key, False)
        hk = self.hook
        if hk is not None:
            hk(h.tid, "searched")
        if leaf.key == key:
            return NOT_FOUND if self.is_deleted(h, leaf, p) else leaf.value
        return self.get_value_if_inserted(h, leaf, p, d, key)

    def _insert(self, h: Handle, key: int, value: Any) -> bool:
        tid = h.tid
        spec = self.spec
        attempt = 0
        while True:
            path, _, _, p, d, leaf = self._search(h, key, self.path_record)
            hk = self.hook
            if hk is not None:
                hk(tid, "searched")
            if leaf.key == key:
                if not self.is_deleted(h, leaf, p):
                    return False
                attempt += 1
                self._restart(h, attempt)
                continue
            h.c.cas_attempts += 1
            if not try_lock_edge(p, d, tid):
                attempt += 1
                self._restart(h, attempt)
                continue
            if p.children[d].head.value is not leaf:
                unlock_edge(p, d, tid)
                attempt += 1
                self._restart(h, attempt)
                continue
            if hk is not None:
                hk(tid, "locked")
            new_leaf = Leaf(key, value)
            inner = make_insert_node(leaf, new_leaf, self._new_node_agg(h, leaf))
            u = Update(new_leaf, p, inner, d, INSERT, tid, spec.leaf_value(key, value))
            self._announce(h, u)
            self.announced.increment()
            if hk is not None:
                hk(tid, "announced")
            self._aggregate_step(h, u, path, p, inner)
            if hk is not None:
                hk(tid, "aggregated")
            p.children[d].write(inner, u.timestamp)
            if hk is not None:
                hk(tid, "applied")
            u.done = True
            self._unannounce(h, u)
            self.finished.increment()
            h.last_ts = u.timestamp
            if hk is not None:
                hk(tid, "unannounced")
            unlock_edge(p, d, tid)
            return True

    def _delete(self, h: Handle, key: int) -> Any:
        tid = h.tid
        spec = self.spec
        attempt = 0
        while True:
            path, g, dg, p, dp, leaf = self._search(h, key, self.path_record)
            hk = self.hook
            if hk is not None:
                hk(tid, "searched")
            if leaf.key != key:
                v = self.get_value_if_inserted(h, leaf, p, dp, key)
                if v is NOT_FOUND:
                    return NOT_FOUND
                attempt += 1
                self._restart(h, attempt)
                continue
            h.c.cas_attempts += 1
            if not try_lock_edge(g, dg, tid):
                attempt += 1
                self._restart(h, attempt)
                continue
            if g.children[dg].head.value is not p:
                unlock_edge(g, dg, tid)
                attempt += 1
                self._restart(h, attempt)
                continue
            # Pin the leaf's edge, check it, then freeze the parent with one CAS.
            h.c.cas_attempts += 2
            if not try_lock_edge(p, dp, tid):
                unlock_edge(g, dg, tid)
                attempt += 1
                self._restart(h, attempt)
                continue
            if p.children[dp].head.value is not leaf or not try_permanent_lock(p, tid, holding=dp):
                unlock_edge(p, dp, tid)
                unlock_edge(g, dg, tid)
                attempt += 1
                self._restart(h, attempt)
                continue
            if hk is not None:
                hk(tid, "locked")
            sibling = p.children[1 - dp].head.value
            u = Update(leaf, g, sibling, dg, DELETE, tid, spec.leaf_value(key, leaf.value))
            self._announce(h, u)
            self.announced.increment()
            if hk is not None:
                hk(tid, "announced")
            self._aggregate_step(h, u, path, p, None)
            if hk is not None:
                hk(tid, "aggregated")
            ts = u.timestamp
            leaf.deleted_ts = ts
            leaf.marked = True
            if hk is not None:
                hk(tid, "applied")
            u.done = True
            self._unannounce(h, u)
            self.finished.increment()
            h.last_ts = ts
            if hk is not None:
                hk(tid, "unannounced")
            g.children[dg].write(sibling, ts)
            if hk is not None:
                hk(tid, "finalized")
            unlock_edge(g, dg, tid)
            return leaf.value

    def _aggregate_step(self, h: Handle, u: Update, path, parent: InternalNode, inner) -> None:
        """Write ``u``'s effect into every aggregate on the root..parent path."""
        c = h.c
        key = u.leaf.key
        ts = u.timestamp
        local = self._gather_for_update(h, u)
        node = self.root
        i = 0
        on_record = path is not None
        check = self._check_recorded_path
        skip_parent = self.fault == "skip_agg"
        visited = 0
        while True:
            visited += 1
            if not (skip_parent and node is parent):
                self._update_agg(h, node, u, local)
            d = RIGHT if key >= node.key else LEFT
            if node is parent:
                break
            nxt = None
            if on_record:
                nxt = path[i + 1]
                if check and node.children[d].head.value is not nxt:
                    on_record = False
            if not on_record:
                nxt, steps = node.children[d].versioned_read_steps(ts)
                c.chain_steps += steps
                c.step3_chain_steps += steps
            if nxt.is_leaf:
                raise AssertionError(f"aggregate walk for {u!r} missed its parent node")
            if local:
                nk = node.key
                if d == RIGHT:
                    local = [e for e in local if e.leaf.key >= nk]
                else:
                    local = [e for e in local if e.leaf.key < nk]
            node = nxt
            i += 1
        if inner is not None:
            if local:
                pk = parent.key
                if u.edge_direction == RIGHT:
                    local = [e for e in local if e.leaf.key >= pk]
                else:
                    local = [e for e in local if e.leaf.key < pk]
            self._update_agg(h, inner, u, local)
        c.nodes_visited += visited

    # -- queries --------------------------------------------------------------

    def _resolve_child(self, h: Handle, node: InternalNode, d: int, ts: int, local):
        """Child of ``node`` in direction ``d`` at ``ts``.

        Returns ``(child, excluded)``; ``excluded`` is the in-flight deletion
        whose sibling was substituted, which must not be applied below it.
        """
        if local and (not self.tid_lock or node.lock & LOCKED[d]):
            for u in local:
                if u.edge_source is node and u.edge_direction == d:
                    return u.edge_target, (u if u.kind == DELETE else None)
        v, steps = node.children[d].versioned_read_steps(ts)
        h.c.chain_steps += steps
        return v, None

    def _traverse(self, h: Handle, ts: int, local: list[Update], descend: Descend) -> Landing:
        spec = self.spec
        combine = spec.combine
        hk = self.hook
        tid = h.tid
        skipped = spec.identity
        node = self.root
        n = 0
        while not node.is_leaf:
            n += 1
            if hk is not None:
                hk(tid, "query_node")
            if local:
                # drop finished operations before reading any field
                local = [u for u in local if not u.done]
            left, excl = self._resolve_child(h, node, LEFT, ts, local)
            left_local = local if excl is None else [u for u in local if u is not excl]
            up_to = combine(skipped, self._read_agg(h, left, ts, left_local, node.key))
            nk = node.key
            if descend(up_to, nk):
                skipped = up_to
                nxt, excl = self._resolve_child(h, node, RIGHT, ts, local)
                if local:
                    local = [u for u in local if u.leaf.key >= nk and u is not excl]
            else:
                nxt = left
                if left_local:
                    local = [u for u in left_local if u.leaf.key < nk]
            node = nxt
        c = h.c
        c.nodes_visited += n
        c.traversals += 1
        if n > c.max_traversal_nodes:
            c.max_traversal_nodes = n
        leaf_agg = self._leaf_agg(node, ts)
        visible = node.key != POS_INF and node.key != NEG_INF and node.deleted_ts > ts
        return Landing(skipped, node, leaf_agg, visible)

    def _run_query(self, h: Handle, q: QueryDef, ts: int | None) -> Any:
        c = h.c
        start = (c.chain_steps, c.nodes_visited, c.traversals)
        fin0 = self.finished.value
        hk = self.hook
        first = ts is None
        if ts is None:
            ts = self._acquire_query_ts(h)
        h.last_ts = ts
        if hk is not None:
            hk(h.tid, "query_ts")
        inp: Any = q.args
        for stage in q.stages:
            outs = []
            for desc in stage.traversals(self.spec, inp):
                local = self._gather(h, ts, first)
                first = False
                if hk is not None:
                    hk(h.tid, "traversal")
                outs.append(self._traverse(h, ts, local, desc))
            inp = stage.compute_answer(self.spec, inp, outs)
        conc = max(0, self.announced.value - fin0)
        c.conc_updates += conc
        if h.trace is not None:
            h.trace.append({
                "query": q.name, "ts": ts, "conc_updates": conc,
                "chain_steps": c.chain_steps - start[0],
                "nodes_visited": c.nodes_visited - start[1],
                "traversals": c.traversals - start[2],
            })
        return inp

    # -- inspection -------------------------------------------------------------

    def items(self, ts: int | None = None) -> list[tuple[int, Any]]:
        """Live ``(key, value)`` pairs; quiescent use only."""
        from .basetree import iter_nodes

        if ts is None:
            ts = self.current_timestamp()
        out = []
        for node, _ in iter_nodes(self.root, ts):
            if node.is_leaf and not node.is_sentinel and node.deleted_ts > ts:
                out.append((node.key, node.value))
        out.sort(key=lambda kv: kv[0])
        return out

    def __len__(self) -> int:
        return len(self.items())
