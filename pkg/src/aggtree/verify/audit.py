"""Structural and aggregate audit of a quiescent tree."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..basetree import NEG_INF, PERMANENT, POS_INF, describe_lock


@dataclass
class AuditReport:
    ts: int
    variant: str
    internal_nodes: int = 0
    leaves: int = 0
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __str__(self) -> str:
        head = (f"audit {self.variant} ts={self.ts}: {self.internal_nodes} internal, "
                f"{self.leaves} leaves, {len(self.violations)} violation(s)")
        return "\n".join([head] + [f"  - {v}" for v in self.violations])


def _fmt(k: int) -> str:
    return "-inf" if k == NEG_INF else "+inf" if k == POS_INF else str(k)


def audit_tree(tree, ts: int | None = None, *, check_aggregates: bool = True,
               max_violations: int = 50) -> AuditReport:
    """Walk the tree as of ``ts`` (default: the current timestamp).

    Checks BST order, the three sentinels, that no deleted leaf is still
    reachable, that every lock on the live tree is free, that every node whose
    current child is a deleted leaf is permanently locked (over all nodes
    reachable through any version), that version chains are well formed, and
    that each node's stored aggregate equals the fold over its leaves.
    Requires quiescence.  At a past ``ts``, nodes and leaves removed after
    ``ts`` may be permanently locked or marked.
    """
    now = tree.current_timestamp()
    if ts is None:
        ts = now
    # in a past snapshot, nodes unlinked later are legitimately frozen
    present = ts >= now
    spec = tree.spec
    rep = AuditReport(ts, tree.variant)
    bad = rep.violations

    def flag(msg: str) -> None:
        if len(bad) < max_violations:
            bad.append(msg)

    root = tree.root
    if root.key != NEG_INF:
        flag(f"root key is {_fmt(root.key)}, expected -inf")
    left0 = root.children[0].versioned_read(ts)
    if not left0.is_leaf or left0.key != NEG_INF:
        flag("root's left child is not the -inf sentinel leaf")

    pending = tree.registry_snapshot()
    if pending:
        flag(f"{len(pending)} announcement(s) still registered: {pending!r}")

    # Post-order walk returning the fold of each subtree's leaves.
    # Stack entries: (node, lo, hi, state); lo inclusive, hi exclusive (None = unbounded).
    acc: dict[int, object] = {}
    stack = [(root, NEG_INF, None, 0)]
    leaves_seen: list[int] = []
    while stack:
        node, lo, hi, st = stack.pop()
        if node.is_leaf:
            rep.leaves += 1
            k = node.key
            if (k < lo or (hi is not None and k >= hi)) and not (k == NEG_INF and lo == NEG_INF):
                flag(f"leaf {_fmt(k)} outside its range [{_fmt(lo)}, {_fmt(hi) if hi is not None else 'inf'})")
            if node.deleted_ts <= ts or (present and node.marked):
                flag(f"deleted leaf {_fmt(k)} is still reachable")
            leaves_seen.append(k)
            acc[id(node)] = spec.leaf_value(k, node.value) if node.deleted_ts > ts else spec.identity
            continue
        l = node.children[0].versioned_read(ts)
        r = node.children[1].versioned_read(ts)
        if st == 0:
            rep.internal_nodes += 1
            if node is not root and not (lo <= node.key and (hi is None or node.key < hi)):
                flag(f"node {_fmt(node.key)} outside its range")
            if node.lock and (present or not node.lock & PERMANENT):
                flag(f"node {_fmt(node.key)} holds lock {describe_lock(node.lock)} while quiescent")
            stack.append((node, lo, hi, 1))
            stack.append((r, node.key, hi, 0))
            stack.append((l, lo, node.key, 0))
            continue
        total = spec.combine(acc.pop(id(l)), acc.pop(id(r)))
        acc[id(node)] = total
        if check_aggregates:
            stored = tree.node_agg(node, ts)
            if not spec.close(stored, total):
                flag(f"node {_fmt(node.key)}: stored aggregate {stored!r} != leaf fold {total!r}")

    if leaves_seen != sorted(leaves_seen):
        flag("leaves are not in key order")
    if not leaves_seen or leaves_seen[0] != NEG_INF or leaves_seen[-1] != POS_INF:
        flag("sentinel leaves are not at the extremes")
    dups = len(leaves_seen) - len(set(leaves_seen))
    if dups:
        flag(f"{dups} duplicate key(s) among reachable leaves")

    # Every node ever linked: walk all versions of all child fields.
    seen: set[int] = set()
    todo = [root]
    while todo:
        node = todo.pop()
        if id(node) in seen or node.is_leaf:
            continue
        seen.add(id(node))
        for d in (0, 1):
            prev_ts = None
            v = node.children[d].head
            cur = v.value
            if cur.is_leaf and cur.marked and not node.lock & PERMANENT:
                flag(f"node {_fmt(node.key)} points at deleted leaf {_fmt(cur.key)} but is not permanently locked")
            while v is not None:
                if prev_ts is not None and v.timestamp > prev_ts:
                    flag(f"node {_fmt(node.key)}: child chain timestamps increase")
                prev_ts = v.timestamp
                if v.next is None and v.timestamp != 0:
                    flag(f"node {_fmt(node.key)}: child chain tail has ts {v.timestamp}")
                todo.append(v.value)
                v = v.next
    return rep
