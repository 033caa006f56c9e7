from __future__ import annotations

from dataclasses import asdict, dataclass


@dataclass
class Counters:
    """Per-operation work tallies.

    ``chain_steps`` counts versions skipped by versioned reads (any phase);
    ``step3_chain_steps`` is the subset spent re-descending during an
    effectual operation's aggregate-update pass.  ``registry_scans`` counts
    announcement slots or queue nodes examined; ``aux_scan_max`` is the
    largest such count within one isDeleted/getValueIfInserted call.
    ``conc_updates`` is filled in for queries: effectual operations whose
    interval overlapped the query's.
    """

    chain_steps: int = 0
    step3_chain_steps: int = 0
    registry_scans: int = 0
    aux_scan_max: int = 0
    nodes_visited: int = 0
    traversals: int = 0
    max_traversal_nodes: int = 0
    cas_attempts: int = 0
    restarts: int = 0
    conc_updates: int = 0

    def reset(self) -> None:
        for k in self.__dataclass_fields__:
            setattr(self, k, 0)

    def snapshot(self) -> "Counters":
        return Counters(**asdict(self))

    def as_dict(self) -> dict[str, int]:
        return asdict(self)
