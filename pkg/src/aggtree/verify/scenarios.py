"""Fixed corpus of deterministic interleavings over the documented races.

Hook names map onto the effectual protocol as: ``locked`` after the base
tree's locking, ``announced`` after the announcement, ``aggregated`` after
the aggregate walk, ``applied`` after linking or marking, ``unannounced``
after removal from the registry, ``finalized`` after a delete swings the
grandparent edge.  Every scenario is variant-agnostic.
"""

from __future__ import annotations

from ..basetree import NOT_FOUND
from .interleave import END, Scenario

_T59 = [("insert", 1, "v1"), ("insert", 5, "v5"), ("insert", 9, "v9")]


def _ins_vs_contains(stop: str, expect) -> Scenario:
    return Scenario(
        f"insert-vs-contains@{stop}",
        {0: [("insert", 5, "a")], 1: [("contains", 5)]},
        [(0, stop), (1, END), (0, END)],
        setup=[("insert", 1, "v1"), ("insert", 9, "v9")],
        expect={0: [True], 1: [expect]},
    )


def _del_vs_contains(stop: str, expect) -> Scenario:
    return Scenario(
        f"delete-vs-contains@{stop}",
        {0: [("delete", 5)], 1: [("contains", 5)]},
        [(0, stop), (1, END), (0, END)],
        setup=[("insert", 3, "v3"), ("insert", 5, "v5")],
        expect={0: ["v5"], 1: [expect]},
    )


def _query_vs_insert(stop: str, expect) -> Scenario:
    return Scenario(
        f"rank-vs-insert@{stop}",
        {0: [("insert", 3, "v3")], 1: [("query", "rank", 9)]},
        [(0, stop), (1, END), (0, END)],
        setup=list(_T59),
        expect={0: [True], 1: [expect]},
    )


CORPUS: list[Scenario] = [
    # insert vs contains, one window per protocol step
    _ins_vs_contains("locked", NOT_FOUND),
    _ins_vs_contains("announced", "a"),
    _ins_vs_contains("aggregated", "a"),
    _ins_vs_contains("applied", "a"),
    _ins_vs_contains("unannounced", "a"),
    Scenario(
        "contains-searched-before-insert",
        {0: [("insert", 5, "a")], 1: [("contains", 5)]},
        [(1, "searched"), (0, END), (1, END)],
        setup=[("insert", 1, "v1"), ("insert", 9, "v9")],
        expect={0: [True], 1: ["a"]},
    ),
    Scenario(
        "contains-redescends-past-finished-insert",
        {0: [("insert", 5, "a")], 1: [("contains", 5)]},
        [(1, "searched"), (0, "unannounced"), (1, END), (0, END)],
        setup=[("insert", 1, "v1"), ("insert", 9, "v9")],
        expect={0: [True], 1: ["a"]},
    ),
    # delete vs contains at each window
    _del_vs_contains("locked", "v5"),
    _del_vs_contains("announced", NOT_FOUND),
    _del_vs_contains("aggregated", NOT_FOUND),
    _del_vs_contains("applied", NOT_FOUND),
    _del_vs_contains("unannounced", NOT_FOUND),
    _del_vs_contains("finalized", NOT_FOUND),
    Scenario(
        "contains-searched-before-delete",
        {0: [("delete", 5)], 1: [("contains", 5)]},
        [(1, "searched"), (0, END), (1, END)],
        setup=[("insert", 3, "v3"), ("insert", 5, "v5")],
        expect={0: ["v5"], 1: [NOT_FOUND]},
    ),
    # effectual vs effectual on one key
    Scenario(
        "insert-waits-for-announced-delete",
        {0: [("delete", 5)], 1: [("insert", 5, "b"), ("contains", 5)]},
        [(0, "announced"), (1, "restart", 3), (0, END), (1, END)],
        setup=[("insert", 5, "a")],
        expect={0: ["a"], 1: [True, "b"]},
    ),
    Scenario(
        "duplicate-insert-race",
        {0: [("insert", 5, "a")], 1: [("insert", 5, "b")]},
        [(0, "announced"), (1, "restart", 3), (0, END), (1, END)],
        setup=[("insert", 1, "v1")],
        expect={0: [True], 1: [False]},
    ),
    Scenario(
        "double-delete-race",
        {0: [("delete", 5)], 1: [("delete", 5)]},
        [(0, "announced"), (1, "restart", 3), (0, END), (1, END)],
        setup=[("insert", 3, "v3"), ("insert", 5, "v5")],
        expect={0: ["v5"], 1: [NOT_FOUND]},
    ),
    Scenario(
        "adjacent-deletes",
        {0: [("delete", 3)], 1: [("delete", 5)], 2: [("query", "rank", 10)]},
        [(0, "locked"), (1, END), (2, END), (0, END)],
        setup=[("insert", 3, "v3"), ("insert", 5, "v5"), ("insert", 7, "v7")],
        expect={0: ["v3"], 1: ["v5"]},
    ),
    # queries vs in-flight effectual operations
    _query_vs_insert("locked", 2),
    _query_vs_insert("announced", 3),
    _query_vs_insert("aggregated", 3),
    _query_vs_insert("applied", 3),
    Scenario(
        "rank-timestamped-before-insert",
        {0: [("insert", 3, "v3")], 1: [("query", "rank", 10)]},
        [(1, "query_ts"), (0, END), (1, END)],
        setup=list(_T59),
        expect={0: [True], 1: [3]},
    ),
    Scenario(
        "rank-mid-traversal-vs-later-delete",
        {0: [("delete", 5)], 1: [("query", "rank", 10)]},
        [(1, "query_node"), (0, END), (1, END)],
        setup=list(_T59),
        expect={0: ["v5"], 1: [3]},
    ),
    Scenario(
        "rank-vs-announced-delete",
        {0: [("delete", 5)], 1: [("query", "rank", 10)]},
        [(0, "announced"), (1, END), (0, END)],
        setup=list(_T59),
        expect={0: ["v5"], 1: [2]},
    ),
    Scenario(
        "select-vs-applied-delete",
        {0: [("delete", 1)], 1: [("query", "select", 0)]},
        [(0, "applied"), (1, END), (0, END)],
        setup=list(_T59),
        expect={0: ["v1"], 1: [5]},
    ),
    Scenario(
        "median-chain-vs-announced-insert",
        {0: [("insert", 7, "v7")], 1: [("query", "median_key_in_range", 0, 10)]},
        [(0, "announced"), (1, END), (0, END)],
        setup=list(_T59),
        expect={0: [True], 1: [7]},
    ),
    Scenario(
        "median-chain-straddles-insert",
        {0: [("insert", 7, "v7")], 1: [("query", "median_key_in_range", 0, 10)]},
        [(1, "traversal"), (0, END), (1, END)],
        setup=list(_T59),
        expect={0: [True], 1: [5]},
    ),
    # racing announcements and timestamp helping
    Scenario(
        "two-announced-updates-vs-query",
        {0: [("insert", 3, 3)], 1: [("delete", 9)], 2: [("query", "range_aggregate", 0, 10)]},
        [(0, "announced"), (1, "announced"), (2, END), (0, END), (1, END)],
        setup=[("insert", 1, 1), ("insert", 5, 5), ("insert", 9, 9)],
        spec="keysum",
        expect={0: [True], 1: [9], 2: [9]},
    ),
    Scenario(
        "two-queries-help-one-update",
        {0: [("insert", 3, "v3")], 1: [("query", "rank", 10)], 2: [("query", "rank", 10)]},
        [(0, "announced"), (1, END), (0, "aggregated"), (2, END), (0, END)],
        setup=list(_T59),
        expect={0: [True], 1: [4], 2: [4]},
    ),
    Scenario(
        "updates-interleaved-under-query",
        {0: [("insert", 3, "v3"), ("delete", 1)], 1: [("insert", 7, "v7")],
         2: [("query", "rank", 10), ("query", "rank", 10)]},
        [(0, "announced"), (1, "announced"), (2, "query_ts"), (0, "aggregated"),
         (1, END), (2, END), (0, END)],
        setup=list(_T59),
    ),
    Scenario(
        "contains-helps-delete-timestamp",
        {0: [("delete", 5)], 1: [("contains", 5)], 2: [("query", "rank", 10)]},
        [(0, "announced"), (1, END), (2, END), (0, END)],
        setup=list(_T59),
        expect={0: ["v5"], 1: [NOT_FOUND], 2: [2]},
    ),
]


__all__ = ["CORPUS"]
