"""Variant with a timestamped announcement queue and one aggregate per node.

Effectual operations take consecutive timestamps by enqueueing their
announcement, then help every earlier in-range operation write its aggregate
version before writing their own.  Queries read a single versioned field per
visited node.
"""

from __future__ import annotations

from ._atomic import cas_attr
from .backbone import AggregateTree, Handle, Update
from .basetree import InternalNode, Leaf
from .versioned import VersionedField


class QNode:
    __slots__ = ("update", "ts", "next", "removed")

    def __init__(self, update: Update | None, ts: int) -> None:
        self.update = update
        self.ts = ts
        self.next: QNode | None = None
        self.removed = False

    def __repr__(self) -> str:
        r = ", removed" if self.removed else ""
        return f"QNode(ts={self.ts}{r})"


class UpdateQueue:
    """Lock-free queue whose nodes carry consecutive timestamps.

    ``head`` is a permanent ts-0 sentinel.  Removal marks a node and lets any
    traversal unlink it; the last node is never unlinked, so ``tail`` always
    leads to the real end of the queue.
    """

    def __init__(self) -> None:
        self.head = QNode(None, 0)
        self.tail = self.head

    def enqueue(self, u: Update) -> QNode:
        node = QNode(u, 0)
        while True:
            t = self.tail
            nxt = t.next
            if nxt is not None:
                cas_attr(self, "tail", t, nxt)
                continue
            node.ts = t.ts + 1
            u.timestamp = node.ts
            if cas_attr(t, "next", None, node):
                cas_attr(self, "tail", t, node)
                return node

    def last(self) -> QNode:
        t = self.tail
        while t.next is not None:
            t = t.next
        return t

    def current_timestamp(self) -> int:
        return self.last().ts

    def gather(self, ts: int) -> tuple[list[Update], int]:
        """Live announcements with timestamp <= ``ts``, oldest first, plus the scan length."""
        out = []
        scanned = 0
        pred = self.head
        node = pred.next
        while node is not None and node.ts <= ts:
            scanned += 1
            nxt = node.next
            if node.removed:
                if nxt is not None:
                    cas_attr(pred, "next", node, nxt)
            else:
                out.append(node.update)
                pred = node
            node = nxt
        return out, scanned

    def remove(self, qnode: QNode) -> None:
        qnode.removed = True
        # one unlinking pass up to the removed node
        pred = self.head
        node = pred.next
        while node is not None and node.ts <= qnode.ts:
            nxt = node.next
            if node.removed and nxt is not None:
                cas_attr(pred, "next", node, nxt)
            else:
                pred = node
            node = nxt

    def live(self) -> list[QNode]:
        out = []
        node = self.head.next
        while node is not None:
            if not node.removed:
                out.append(node)
            node = node.next
        return out


class FastQueryTree(AggregateTree):
    variant = "fastquery"
    _check_recorded_path = True

    def _init_registry(self) -> None:
        self.queue = UpdateQueue()
        self._qnodes: list[QNode | None] = [None] * self.threads

    def _root_agg(self):
        return VersionedField(self.spec.identity)

    def _new_node_agg(self, h: Handle, target: Leaf):
        return VersionedField(self.spec.leaf_value(target.key, target.value))

    # -- announcements ----------------------------------------------------------

    def _announce(self, h: Handle, u: Update) -> None:
        h.c.cas_attempts += 1
        self._qnodes[h.tid] = self.queue.enqueue(u)

    def _unannounce(self, h: Handle, u: Update) -> None:
        qn = self._qnodes[h.tid]
        self._qnodes[h.tid] = None
        self.queue.remove(qn)

    def _guarantee_ts(self, h: Handle, u: Update) -> None:
        # timestamps are set before an announcement becomes visible
        pass

    def _find_announced(self, h: Handle, kind: str, key: int, owner: int | None) -> Update | None:
        ts = self.queue.current_timestamp()
        found, scanned = self.queue.gather(ts)
        c = h.c
        c.registry_scans += scanned
        if scanned > c.aux_scan_max:
            c.aux_scan_max = scanned
        for u in found:
            if u.kind == kind and u.leaf.key == key:
                return u
        return None

    def registry_snapshot(self) -> list[Update]:
        return [n.update for n in self.queue.live()]

    # -- timestamps -------------------------------------------------------------

    def current_timestamp(self) -> int:
        return self.queue.current_timestamp()

    def _acquire_query_ts(self, h: Handle) -> int:
        return self.queue.current_timestamp()

    def _reserve_ts(self, h: Handle) -> int:
        ts = self.queue.current_timestamp()
        h.last_ts = ts
        return ts

    def _gather(self, h: Handle, ts: int, first: bool) -> list[Update]:
        out, scanned = self.queue.gather(ts)
        h.c.registry_scans += scanned
        return out

    # -- aggregates -------------------------------------------------------------

    def _gather_for_update(self, h: Handle, u: Update):
        out, scanned = self.queue.gather(u.timestamp)
        h.c.registry_scans += scanned
        return out

    def _update_agg(self, h: Handle, node: InternalNode, u: Update, local) -> None:
        field = node.agg
        my_ts = u.timestamp
        n = len(local)
        i = 0
        c = h.c
        while True:
            head = field.head
            last = head.timestamp
            if last >= my_ts:
                return
            while i < n:
                e = local[i]
                if e.timestamp > last and (e is u or not e.done):
                    break
                i += 1
            if i == n:
                return
            e = local[i]
            c.cas_attempts += 1
            field.write_if_timestamp(last, self._apply(head.value, e), e.timestamp)

    def _read_agg(self, h: Handle, child, ts: int, local: list[Update], parent_key: int):
        if child.is_leaf:
            return self._leaf_agg(child, ts)
        field = child.agg
        head = field.head
        cur = head.timestamp
        if cur == ts:
            return head.value
        if cur > ts:
            v, steps = field.versioned_read_steps(ts)
            h.c.chain_steps += steps
            return v
        val = head.value
        if local and self.fault != "skip_plugin":
            for u in local:
                if u.leaf.key < parent_key and cur < u.timestamp <= ts:
                    val = self._apply(val, u)
        return val

    def node_agg(self, node: InternalNode, ts: int):
        return node.agg.versioned_read(ts)


__all__ = ["FastQueryTree", "UpdateQueue", "QNode"]
