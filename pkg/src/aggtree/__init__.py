"""Concurrent external BST with subtractive aggregate metadata."""

from __future__ import annotations

from .aggregate import BUILTIN_SPECS, AggregateSpec, get_spec
from .backbone import (
    DELETE,
    INSERT,
    NOT_SET,
    AggregateTree,
    Handle,
    Landing,
    QueryDef,
    QueryFailure,
    Stage,
    Update,
)
from .basetree import NEG_INF, NOT_FOUND, POS_INF
from .fastquery import FastQueryTree
from .fastupdate import FastUpdateTree
from .queries import QUERIES, make_query

VARIANTS = {"fastupdate": FastUpdateTree, "fastquery": FastQueryTree}


def new_tree(spec="count", threads: int = 1, variant: str = "fastupdate", **kwargs) -> AggregateTree:
    try:
        cls = VARIANTS[variant]
    except KeyError:
        raise ValueError(f"unknown variant {variant!r}; choose from {', '.join(VARIANTS)}") from None
    return cls(spec, threads, **kwargs)


__all__ = [
    "AggregateSpec", "AggregateTree", "BUILTIN_SPECS", "DELETE", "FastQueryTree",
    "FastUpdateTree", "Handle", "INSERT", "Landing", "NEG_INF", "NOT_FOUND", "NOT_SET",
    "POS_INF", "QUERIES", "QueryDef", "QueryFailure", "Stage", "Update", "VARIANTS",
    "get_spec", "make_query", "new_tree",
]
