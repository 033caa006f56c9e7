"""Variant with per-thread announcement slots and per-thread aggregate cells.

Effectual operations never contend with each other outside the tree's edge
locks: each writes only its own slot and its own aggregate cell in every node
on its path.  Queries advance the global timestamp and pay for combining the
per-thread cells.
"""

from __future__ import annotations

from ._atomic import AtomicCounter, cas_attr
from .backbone import DELETE, INSERT, NOT_SET, AggregateTree, Handle, Update
from .basetree import InternalNode, Leaf
from .versioned import VersionedField


class FastUpdateTree(AggregateTree):
    variant = "fastupdate"

    def _init_registry(self) -> None:
        self.timestamp = AtomicCounter(1)
        self.slots: list[Update | None] = [None] * self.threads

    def _root_agg(self):
        ident = self.spec.identity
        return [VersionedField((ident, None)) for _ in range(self.threads)]

    def _new_node_agg(self, h: Handle, target: Leaf):
        # The inserter's cell starts with the target leaf alone; step 3 adds
        # the new leaf at the operation's timestamp.
        ident = self.spec.identity
        cells = [VersionedField((ident, None)) for _ in range(self.threads)]
        cells[h.tid] = VersionedField((self.spec.leaf_value(target.key, target.value), None))
        return cells

    # -- announcements ----------------------------------------------------------

    def _announce(self, h: Handle, u: Update) -> None:
        self.slots[h.tid] = u
        hk = self.hook
        if hk is not None:
            hk(h.tid, "slot_set")
        h.c.cas_attempts += 1
        cas_attr(u, "timestamp", NOT_SET, self.timestamp.value)

    def _unannounce(self, h: Handle, u: Update) -> None:
        self.slots[h.tid] = None

    def _guarantee_ts(self, h: Handle, u: Update) -> None:
        if u.timestamp == NOT_SET:
            h.c.cas_attempts += 1
            cas_attr(u, "timestamp", NOT_SET, self.timestamp.value)

    def _find_announced(self, h: Handle, kind: str, key: int, owner: int | None) -> Update | None:
        c = h.c
        if owner is not None:
            c.registry_scans += 1
            if c.aux_scan_max < 1:
                c.aux_scan_max = 1
            u = self.slots[owner]
            if u is not None and u.kind == kind and u.leaf.key == key:
                return u
            return None
        n = len(self.slots)
        c.registry_scans += n
        if n > c.aux_scan_max:
            c.aux_scan_max = n
        for u in self.slots:
            if u is not None and u.kind == kind and u.leaf.key == key:
                return u
        return None

    def registry_snapshot(self) -> list[Update]:
        return [u for u in self.slots if u is not None]

    # -- timestamps -------------------------------------------------------------

    def current_timestamp(self) -> int:
        # Every operation with a set timestamp has one <= the counter.
        return self.timestamp.value

    def _acquire_query_ts(self, h: Handle) -> int:
        h.c.cas_attempts += 1
        return self.timestamp.fetch_and_increment()

    def _reserve_ts(self, h: Handle) -> int:
        ts = self._acquire_query_ts(h)
        self._gather(h, ts, True)
        h.last_ts = ts
        return ts

    def _gather(self, h: Handle, ts: int, first: bool) -> list[Update]:
        out = []
        c = h.c
        c.registry_scans += len(self.slots)
        for u in self.slots:
            if u is None:
                continue
            t = u.timestamp
            if t == NOT_SET:
                if not first:
                    continue
                c.cas_attempts += 1
                cas_attr(u, "timestamp", NOT_SET, self.timestamp.value)
                t = u.timestamp
            if t <= ts:
                out.append(u)
        return out

    # -- aggregates -------------------------------------------------------------

    def _gather_for_update(self, h: Handle, u: Update):
        return None

    def _update_agg(self, h: Handle, node: InternalNode, u: Update, local) -> None:
        cell = node.agg[h.tid]
        val = cell.head.value[0]
        cell.write((self._apply(val, u), u), u.timestamp)

    def _read_agg(self, h: Handle, child, ts: int, local: list[Update], parent_key: int):
        spec = self.spec
        if child.is_leaf:
            return self._leaf_agg(child, ts)
        pending = None
        if local and self.fault != "skip_plugin":
            pending = {u.tid: u for u in local if u.leaf.key < parent_key}
        combine = spec.combine
        acc = spec.identity
        steps = 0
        for tid, cell in enumerate(child.agg):
            v = cell.head
            while v.timestamp > ts:
                v = v.next
                steps += 1
            val, upd = v.value
            if pending:
                u = pending.get(tid)
                if u is not None and upd is not u:
                    val = self._apply(val, u)
            acc = combine(acc, val)
        h.c.chain_steps += steps
        return acc

    def node_agg(self, node: InternalNode, ts: int):
        spec = self.spec
        acc = spec.identity
        for cell in node.agg:
            acc = spec.combine(acc, cell.versioned_read(ts)[0])
        return acc


__all__ = ["FastUpdateTree", "INSERT", "DELETE"]
