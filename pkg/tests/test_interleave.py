import time

import pytest

from aggtree import NOT_FOUND, NOT_SET, FastUpdateTree, new_tree
from aggtree.verify.interleave import Interleaver, Scenario, interleave, queries_for, random_scenario, run_scenario
from aggtree.verify.scenarios import CORPUS


@pytest.mark.parametrize("sc", CORPUS, ids=[s.name for s in CORPUS])
def test_corpus_scenario(sc, variant):
    res, verdict = run_scenario(sc, variant)
    assert res.deadlock is None
    assert verdict.ok, str(verdict)
    if sc.expect:
        for tid, want in sc.expect.items():
            assert res.results[tid] == want, (tid, res.trace)


def test_corpus_catches_missing_plug_in(variant):
    bad = [sc.name for sc in CORPUS if not run_scenario(sc, variant, fault="skip_plugin")[1].ok]
    assert "rank-vs-insert@announced" in bad


def test_schedule_is_followed(variant):
    sc = Scenario("s", {0: [("insert", 5, "a")], 1: [("contains", 5)]},
                  [(0, "announced"), (1, "end"), (0, "end")])
    res, _ = run_scenario(sc, variant)
    names = [(t, n) for t, n in res.trace if n != "slot_set"]
    i = names.index((0, "announced"))
    assert names[i + 1][0] == 1
    assert names.index((1, "end")) < names.index((0, "end"))


def test_same_seed_same_interleaving(variant):
    sc = random_scenario(11, threads=3, ops=6)
    a, _ = run_scenario(sc, variant)
    b, _ = run_scenario(sc, variant)
    assert a.trace == b.trace and a.results == b.results


def test_stalled_worker_is_reported_as_deadlock():
    t = new_tree("count", 2, record_history=True)
    h = t.handle(1)

    def slow(key):
        time.sleep(0.5)
        return NOT_FOUND

    h.contains = slow
    iv = Interleaver(t, {0: [("contains", 1)], 1: [("contains", 2)]}, timeout=0.1)
    msg = iv.run([(1, "end")])
    assert msg is not None and "did not park" in msg


def test_interleave_requires_history():
    with pytest.raises(ValueError):
        interleave(new_tree("count", 2), {0: [("contains", 1)]})


def test_is_deleted_sets_the_delete_timestamp():
    t = FastUpdateTree("count", 2)
    t.insert(5, "v")
    seen = {}

    def hook(tid, name):
        if name == "slot_set":
            t.hook = None
            u = t.slots[0]
            seen["before"] = u.timestamp
            seen["contains"] = t.handle(1).contains(5)
            seen["after"] = u.timestamp

    t.hook = hook
    t.delete(5)
    assert seen["before"] == NOT_SET
    assert seen["contains"] is NOT_FOUND
    assert seen["after"] != NOT_SET


def test_random_scenarios_fit_their_spec():
    assert "rank" not in queries_for("keysum")
    assert "variance_in_range" in queries_for("moments")
    assert "variance_in_range" not in queries_for("sumsize")
    sc = random_scenario(3, spec="keysum", threads=2, ops=5)
    ops = [op for s in sc.scripts.values() for op in s]
    assert len(ops) == 5 and set(sc.scripts) <= {0, 1}
    assert all(op[1] in queries_for("keysum") for op in ops if op[0] == "query")
