import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from aggtree import NOT_FOUND, QueryFailure, new_tree
from conftest import VARIANTS
from aggtree.verify.audit import audit_tree
from aggtree.verify.oracle import Oracle


def test_insert_then_contains(make):
    t = make()
    assert t.insert(5, "a") is True
    assert t.contains(5) == "a"
    assert t.node_agg(t.root, t.current_timestamp()) == 1
    assert t.insert(5, "b") is False
    assert t.contains(5) == "a"


def test_delete(make):
    t = make()
    t.insert(3, "val3")
    t.insert(5, "val5")
    before = t.handle(0).reserve_timestamp()
    assert t.delete(5) == "val5"
    assert t.contains(5) is NOT_FOUND
    assert t.node_agg(t.root, t.current_timestamp()) == 1
    assert t.node_agg(t.root, before) == 2
    assert t.delete(5) is NOT_FOUND
    assert t.delete(4) is NOT_FOUND


def test_reserved_timestamp_sees_the_past(make):
    t = make()
    for k in (1, 5, 9):
        t.insert(k, k)
    h = t.handle(0)
    ts = h.reserve_timestamp()
    t.delete(5)
    t.insert(7, 7)
    assert t.query("rank", 10, ts=ts) == 3
    assert t.query("select", 1, ts=ts) == 5
    assert t.query("rank", 10) == 3
    assert t.query("select", 1) == 7


def test_query_examples(make):
    t = make()
    for k in (1, 5, 9):
        t.insert(k, k)
    assert t.query("rank", 5) == 1
    assert t.query("rank", 9) == 2
    assert t.query("median_key_in_range", 1, 9) == 5
    assert t.query("agg_less_than", 100) == 3


def test_empty_tree(make):
    t = make("keysum")
    assert t.query("agg_less_than", 10) == 0
    assert t.query("range_aggregate", -5, 5) == 0
    assert t.items() == [] and len(t) == 0
    assert audit_tree(t).ok


def test_items_and_len(make):
    t = make()
    for k in (4, -2, 8):
        t.insert(k, str(k))
    assert t.items() == [(-2, "-2"), (4, "4"), (8, "8")]
    assert len(t) == 3


def test_hooks_fire_in_protocol_order(make):
    t = make()
    seen = []
    t.insert(3)
    t.hook = lambda tid, name: seen.append(name)
    t.insert(5)
    t.delete(3)
    t.query("rank", 10)
    names = [n for n in seen if n != "slot_set"]
    assert names[:5] == ["searched", "locked", "announced", "aggregated", "applied"]
    assert names[5:12] == ["unannounced", "searched", "locked", "announced", "aggregated", "applied", "unannounced"]
    assert names[12] == "finalized"
    assert names[13:15] == ["query_ts", "traversal"]
    assert set(names[15:]) == {"query_node"}


def test_reentrant_use_of_a_handle_is_refused(make):
    t = make()

    def hook(tid, name):
        if name == "announced":
            t.contains(1)

    t.hook = hook
    with pytest.raises(RuntimeError, match="in flight"):
        t.insert(2)


def test_sequential_ops_need_no_chain_walks(make):
    t = make(path_record=True)
    rng = random.Random(1)
    for _ in range(500):
        k = rng.randrange(50)
        (t.insert if rng.random() < 0.6 else t.delete)(k)
    c = t.counters()
    assert c.step3_chain_steps == 0
    assert c.restarts == 0


def test_query_failures(make):
    t = make()
    t.insert(1)
    with pytest.raises(QueryFailure) as e:
        t.query("select", 3)
    assert e.value.kind == "index"
    with pytest.raises(QueryFailure) as e:
        t.query("median_key_in_range", 5, 9)
    assert e.value.kind == "empty"
    with pytest.raises(QueryFailure) as e:
        t.query("average_in_range", 0, 9)
    assert e.value.kind == "unsupported"
    k = make("keysum")
    with pytest.raises(QueryFailure) as e:
        k.query("rank", 3)
    assert e.value.kind == "unsupported"


def test_bad_arguments(make):
    with pytest.raises(ValueError):
        make(threads=0)
    with pytest.raises(ValueError):
        make(fault="nope")
    t = make()
    with pytest.raises(ValueError):
        t.query("no_such_query", 1)
    with pytest.raises(ValueError, match="low 5 > up 2"):
        t.query("range_aggregate", 5, 2)


OPS = st.lists(
    st.one_of(
        st.tuples(st.just("insert"), st.integers(0, 30), st.integers(1, 9)),
        st.tuples(st.just("delete"), st.integers(0, 30)),
        st.tuples(st.just("contains"), st.integers(0, 30)),
        st.tuples(st.just("query"), st.sampled_from(["rank", "agg_less_than"]), st.integers(0, 31)),
        st.tuples(st.just("query"), st.just("select"), st.integers(0, 12)),
        st.tuples(st.just("query"), st.sampled_from(["range_aggregate", "median_key_in_range",
                                                     "average_in_range", "variance_in_range"]),
                  st.integers(0, 31), st.integers(0, 31)).map(lambda q: q[:2] + tuple(sorted(q[2:])))
    ),
    max_size=60,
)


@pytest.mark.parametrize("variant", VARIANTS)
@pytest.mark.parametrize("path_record", [True, False])
@given(ops=OPS)
def test_differential_against_oracle(variant, path_record, ops):
    t = new_tree("moments", 1, variant, path_record=path_record)
    o = Oracle("moments")
    for op in ops:
        want = o.apply(op[0], op[1:])
        try:
            got = t.query(*op[1:]) if op[0] == "query" else getattr(t, op[0])(*op[1:])
        except QueryFailure as e:
            assert want.kind == e.kind, op
            continue
        assert got == want, op
    assert t.items() == o.items()
    assert audit_tree(t).ok
