import random

import pytest

from aggtree import new_tree
from aggtree.basetree import RIGHT, Leaf, try_lock_edge
from aggtree.verify.audit import audit_tree


def random_tree(variant, n=200, seed=0, **kw):
    t = new_tree("keysum", 1, variant, **kw)
    rng = random.Random(seed)
    for _ in range(n):
        k = rng.randrange(100)
        (t.insert if rng.random() < 0.6 else t.delete)(k)
    return t


def test_fresh_random_tree_passes(variant):
    rep = audit_tree(random_tree(variant))
    assert rep.ok, str(rep)
    assert rep.leaves == rep.internal_nodes + 1
    assert "0 violation" in str(rep)


def test_skipped_aggregate_update_is_caught(variant):
    rep = audit_tree(random_tree(variant, fault="skip_agg"))
    assert not rep.ok
    assert any("stored aggregate" in v for v in rep.violations)


def test_hand_corrupted_aggregate_is_caught(variant):
    t = random_tree(variant)
    ts = t.current_timestamp()
    if variant == "fastquery":
        t.root.agg.write(12345, ts)
    else:
        t.root.agg[0].write((12345, None), ts)
    rep = audit_tree(t)
    assert any("node -inf" in v for v in rep.violations)


def test_structural_corruption_is_caught(variant):
    t = random_tree(variant, n=50)
    try_lock_edge(t.root, RIGHT, 0)
    bad = Leaf(-5)
    bad.marked = True
    node = t.root.children[RIGHT].read()
    while not node.children[0].read().is_leaf:
        node = node.children[0].read()
    node.children[0].write(bad, t.current_timestamp())
    text = str(audit_tree(t))
    assert "holds lock" in text
    assert "deleted leaf -5" in text
    assert "not permanently locked" in text


def test_old_timestamps_audit_too(variant):
    t = new_tree("count", 1, variant)
    for k in range(20):
        t.insert(k)
    ts = t.handle(0).reserve_timestamp()
    for k in range(0, 20, 2):
        t.delete(k)
    assert audit_tree(t, ts).ok
    assert audit_tree(t).ok


def test_pending_announcement_is_reported(variant):
    t = new_tree("count", 1, variant)
    reports = []

    def hook(tid, name):
        if name == "announced":
            reports.append(audit_tree(t, check_aggregates=False))

    t.hook = hook
    t.insert(3)
    assert any("still registered" in v for v in reports[0].violations)
