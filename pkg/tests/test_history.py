from fractions import Fraction

from aggtree import NOT_FOUND
from aggtree.verify.history import Event, History, HistoryLog, QueryError, merge


def test_round_trip_through_json_lines():
    h = History([
        Event(0, "insert", (5, "a"), True, 0, 1, 1),
        Event(1, "delete", (5,), NOT_FOUND, 2, 3, None),
        Event(1, "query", ("average_in_range", 0, 9), Fraction(7, 2), 4, 5, 2),
        Event(0, "query", ("select", 9), QueryError("index"), 6, 7, 2),
        Event(0, "insert", (6, (1, 2)), True, 8, 9, 3),
    ])
    back = History.from_jsonl(h.to_jsonl())
    assert back.events == h.events
    assert back.events[1].result is NOT_FOUND


def test_effectual():
    assert Event(0, "insert", (1,), True).effectual
    assert not Event(0, "insert", (1,), False).effectual
    assert Event(0, "delete", (1,), "v").effectual
    assert not Event(0, "delete", (1,), NOT_FOUND).effectual
    assert not Event(0, "contains", (1,), "v").effectual


def test_log_and_well_formedness():
    log = HistoryLog()
    a = log.begin(0, "insert", (1, None))
    b = log.begin(1, "contains", (1,))
    log.end(b, NOT_FOUND)
    log.end(a, True, 1)
    h = log.drain()
    assert [e.op for e in h] == ["insert", "contains"]
    assert h.well_formed()
    assert len(log.drain()) == 0
    bad = History([Event(0, "contains", (1,), None, 0, 3), Event(0, "contains", (2,), None, 1, 2)])
    assert not bad.well_formed()
    assert len(merge([h, h])) == 4
    assert "t0 insert(1, None) -> True" in h.events[0].describe()
