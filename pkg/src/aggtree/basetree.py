"""External BST skeleton: sentinel keys, node classes and the edge-lock word.

Keys are 64-bit signed integers.  ``NEG_INF`` and ``POS_INF`` are reserved
for the three sentinels (root, left sentinel leaf, right sentinel leaf).
Keys ``>= node.key`` live in a node's right subtree.

Lock word layout (one int per internal node)::

    bit 0      left edge locked
    bit 1      right edge locked
    bit 2      permanent (node is being unlinked; absorbing)
    bits 3-18  tid owning the left edge
    bits 19-34 tid owning the right edge
"""

from __future__ import annotations

from typing import Any, Iterator

from ._atomic import cas_attr
from .versioned import VersionedField

NEG_INF = -(1 << 63)
POS_INF = (1 << 63) - 1

LEFT = 0
RIGHT = 1
DIRECTION_NAMES = ("left", "right")

LOCKED = (1, 2)
PERMANENT = 4
_OWNER_SHIFT = (3, 19)
_TID_MASK = 0xFFFF
MAX_THREADS = _TID_MASK + 1


class _NotFound:
    __slots__ = ()

    def __repr__(self) -> str:
        return "NOT_FOUND"

    def __reduce__(self):
        return "NOT_FOUND"


NOT_FOUND = _NotFound()


def check_key(key: int) -> int:
    if not isinstance(key, int) or isinstance(key, bool):
        raise TypeError(f"keys must be integers, got {type(key).__name__}")
    if not NEG_INF < key < POS_INF:
        raise ValueError(f"key {key} is outside the user key range ({NEG_INF}, {POS_INF})")
    return key


class Leaf:
    __slots__ = ("key", "value", "marked", "deleted_ts")
    is_leaf = True

    def __init__(self, key: int, value: Any = None) -> None:
        self.key = key
        self.value = value
        self.marked = False
        # Timestamp of the deletion that marked this leaf; set together with
        # ``marked``.  Queries at ts >= deleted_ts treat the leaf as absent.
        self.deleted_ts = POS_INF

    @property
    def is_sentinel(self) -> bool:
        return self.key == NEG_INF or self.key == POS_INF

    def __repr__(self) -> str:
        m = ", marked" if self.marked else ""
        return f"Leaf({_fmt_key(self.key)}, {self.value!r}{m})"


class InternalNode:
    __slots__ = ("key", "agg", "children", "lock")
    is_leaf = False

    def __init__(self, key: int, left, right, agg=None) -> None:
        self.key = key
        self.children = (VersionedField(left), VersionedField(right))
        self.agg = agg
        self.lock = 0

    @property
    def left(self):
        return self.children[LEFT]

    @property
    def right(self):
        return self.children[RIGHT]

    def __repr__(self) -> str:
        return f"InternalNode({_fmt_key(self.key)}, lock={describe_lock(self.lock)})"


def _fmt_key(k: int) -> str:
    if k == NEG_INF:
        return "-inf"
    if k == POS_INF:
        return "+inf"
    return str(k)


# -- lock word -------------------------------------------------------------

def owner_of(word: int, direction: int) -> int:
    return (word >> _OWNER_SHIFT[direction]) & _TID_MASK


def edge_word(direction: int, tid: int) -> int:
    return LOCKED[direction] | (tid << _OWNER_SHIFT[direction])


def try_lock_edge(node: InternalNode, direction: int, tid: int) -> bool:
    flag = LOCKED[direction]
    while True:
        w = node.lock
        if w & (flag | PERMANENT):
            return False
        if cas_attr(node, "lock", w, w | flag | (tid << _OWNER_SHIFT[direction])):
            return True
        # the other edge changed under us; retry


def unlock_edge(node: InternalNode, direction: int, tid: int) -> None:
    clear = ~(LOCKED[direction] | (_TID_MASK << _OWNER_SHIFT[direction]))
    while True:
        w = node.lock
        if w & PERMANENT:
            raise RuntimeError("cannot unlock an edge of a permanently locked node")
        if not w & LOCKED[direction] or owner_of(w, direction) != tid:
            raise RuntimeError(f"tid {tid} does not hold the {DIRECTION_NAMES[direction]} edge")
        if cas_attr(node, "lock", w, w & clear):
            return


def try_permanent_lock(node: InternalNode, tid: int, holding: int | None = None) -> bool:
    """Freeze both edges of ``node`` with one CAS.

    With ``holding=None`` the word must be fully unlocked.  With ``holding``
    set to a direction, the caller must own exactly that edge and the CAS
    upgrades it; this lets a deleter pin the leaf's edge while validating it.
    """
    expected = 0 if holding is None else edge_word(holding, tid)
    new = PERMANENT | LOCKED[LEFT] | LOCKED[RIGHT] | edge_word(LEFT, tid) | edge_word(RIGHT, tid)
    return cas_attr(node, "lock", expected, new)


def is_permanently_locked(node: InternalNode) -> bool:
    return bool(node.lock & PERMANENT)


def is_edge_locked(node: InternalNode, direction: int) -> tuple[bool, int | None]:
    w = node.lock
    if w & LOCKED[direction]:
        return True, owner_of(w, direction)
    return False, None


def describe_lock(word: int) -> str:
    if word == 0:
        return "free"
    if word & PERMANENT:
        return f"permanent(tid={owner_of(word, LEFT)})"
    parts = []
    for d in (LEFT, RIGHT):
        if word & LOCKED[d]:
            parts.append(f"{DIRECTION_NAMES[d]}(tid={owner_of(word, d)})")
    return "+".join(parts)


# -- structure helpers ----------------------------------------------------------

def make_sentinels(agg_factory) -> InternalNode:
    """Root (-inf) with sentinel leaves -inf (left) and +inf (right)."""
    return InternalNode(NEG_INF, Leaf(NEG_INF), Leaf(POS_INF), agg_factory())


def make_insert_node(target: Leaf, new_leaf: Leaf, agg=None) -> InternalNode:
    """Internal node joining ``target`` and ``new_leaf``; keyed by its right child."""
    if new_leaf.key < target.key:
        return InternalNode(target.key, new_leaf, target, agg)
    return InternalNode(new_leaf.key, target, new_leaf, agg)


def iter_nodes(root: InternalNode, ts: int | None = None) -> Iterator[tuple[Any, int]]:
    """Pre-order ``(node, depth)`` walk using head reads or versioned reads at ``ts``."""
    stack = [(root, 0)]
    while stack:
        node, depth = stack.pop()
        yield node, depth
        if not node.is_leaf:
            for d in (RIGHT, LEFT):
                f = node.children[d]
                stack.append((f.read() if ts is None else f.versioned_read(ts), depth + 1))


def to_dot(root: InternalNode, ts: int | None = None) -> str:
    """Graphviz rendering of the tree (head versions, or as of ``ts``)."""
    lines = ["digraph aggtree {", "  node [fontname=monospace];"]
    for node, _ in iter_nodes(root, ts):
        nid = f"n{id(node):x}"
        if node.is_leaf:
            style = ", style=dashed" if node.marked else ""
            lines.append(f'  {nid} [shape=box, label="{_fmt_key(node.key)}"{style}];')
        else:
            lock = "" if node.lock == 0 else f"\\n{describe_lock(node.lock)}"
            lines.append(f'  {nid} [shape=ellipse, label="{_fmt_key(node.key)}{lock}"];')
            for d in (LEFT, RIGHT):
                f = node.children[d]
                child = f.read() if ts is None else f.versioned_read(ts)
                lines.append(f'  {nid} -> n{id(child):x} [label="{DIRECTION_NAMES[d][0]}"];')
    lines.append("}")
    return "\n".join(lines)
