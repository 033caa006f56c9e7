import threading

from hypothesis import given
from hypothesis import strategies as st

from aggtree.versioned import VersionedField, standard_timestamped_read, versioned_read, write_if_timestamp


def test_read_at_timestamps():
    f = VersionedField("a")
    f.write("b", 3)
    f.write("c", 7)
    assert f.read() == "c"
    assert f.standard_timestamped_read() == ("c", 7)
    assert [f.versioned_read(t) for t in (0, 2, 3, 6, 7, 100)] == ["a", "a", "b", "b", "c", "c"]
    assert f.versioned_read_steps(2) == ("a", 2)
    assert f.chain() == [(7, "c"), (3, "b"), (0, "a")]
    assert len(f) == 3


def test_equal_timestamps_stack_and_read_the_later():
    f = VersionedField(0)
    f.write(1, 4)
    f.write(2, 4)
    assert f.versioned_read(4) == 2
    assert len(f) == 3


def test_write_if_timestamp():
    f = VersionedField(2, 1)
    assert not write_if_timestamp(f, 0, 9, 2)
    assert write_if_timestamp(f, 1, 3, 2)
    assert not write_if_timestamp(f, 1, 4, 3)
    assert standard_timestamped_read(f) == (3, 2)
    assert versioned_read(f, 1) == 2


def test_write_if_timestamp_has_one_winner():
    f = VersionedField(0)
    wins = []
    barrier = threading.Barrier(8)

    def go(i):
        barrier.wait()
        if f.write_if_timestamp(0, i, 1):
            wins.append(i)

    ts = [threading.Thread(target=go, args=(i,)) for i in range(8)]
    for t in ts:
        t.start()
    for t in ts:
        t.join()
    assert len(wins) == 1
    assert f.chain() == [(1, wins[0]), (0, 0)]


@given(st.lists(st.integers(0, 20), max_size=15), st.integers(0, 25))
def test_versioned_read_matches_reference(tss, q):
    tss = sorted(tss)
    f = VersionedField(-1)
    for i, t in enumerate(tss):
        f.write(i, t)
    want = -1
    for i, t in enumerate(tss):
        if t <= q:
            want = i
    assert f.versioned_read(q) == want
