"""Random mixed workloads run on real threads."""

from __future__ import annotations

import random
import threading
import time
from dataclasses import dataclass, field
from typing import Any

from . import new_tree
from .backbone import AggregateTree, QueryFailure
from .queries import QUERIES

OP_KINDS = ("insert", "delete", "contains", "query")


def parse_mix(text: str) -> tuple[int, int, int, int]:
    parts = text.split(":")
    if len(parts) != 4:
        raise ValueError(f"mix must look like i:d:c:q, got {text!r}")
    try:
        mix = tuple(int(p) for p in parts)
    except ValueError:
        raise ValueError(f"mix entries must be integers, got {text!r}") from None
    if any(m < 0 for m in mix) or sum(mix) != 100:
        raise ValueError(f"mix percentages must be non-negative and sum to 100, got {text!r}")
    return mix  # type: ignore[return-value]


@dataclass
class WorkloadConfig:
    variant: str = "fastupdate"
    threads: int = 4
    keys: int = 1000
    ops: int = 10_000
    mix: tuple[int, int, int, int] = (50, 30, 10, 10)
    query: str = "rank"
    agg: str = "count"
    seed: int = 0
    prefill: float = 0.5
    path_record: bool = True
    tid_lock: bool = True
    backoff: bool = False
    fault: str | None = None

    def validate(self) -> None:
        if self.variant not in ("fastupdate", "fastquery"):
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")
        if self.keys < 1:
            raise ValueError("keys must be >= 1")
        if self.ops < 0:
            raise ValueError("ops must be >= 0")
        if sum(self.mix) != 100 or any(m < 0 for m in self.mix):
            raise ValueError("mix must sum to 100")
        if self.query not in QUERIES:
            raise ValueError(f"unknown query {self.query!r}")
        if not 0.0 <= self.prefill <= 1.0:
            raise ValueError("prefill must be in [0, 1]")

    def make_tree(self, **extra) -> AggregateTree:
        return new_tree(self.agg, self.threads, self.variant, path_record=self.path_record,
                        tid_lock=self.tid_lock, backoff=self.backoff, fault=self.fault, **extra)


def query_args(name: str, rng: random.Random, keys: int) -> tuple:
    if name == "select":
        return (rng.randrange(max(1, keys // 2)),)
    if name in ("rank", "agg_less_than"):
        return (rng.randrange(keys + 1),)
    a, b = rng.randrange(keys + 1), rng.randrange(keys + 1)
    return (min(a, b), max(a, b))


def value_for(agg: str, key: int) -> Any:
    # product needs nonzero values; donations wants a sized value
    if agg == "donations":
        return ["d"] * (1 + key % 3)
    return key % 97 + 1


def make_script(cfg: WorkloadConfig, tid: int, n: int) -> list[tuple]:
    rng = random.Random(cfg.seed * 7919 + tid)
    cuts = [sum(cfg.mix[:i + 1]) for i in range(4)]
    ops = []
    for _ in range(n):
        r = rng.randrange(100)
        k = rng.randrange(cfg.keys)
        if r < cuts[0]:
            ops.append(("insert", k, value_for(cfg.agg, k)))
        elif r < cuts[1]:
            ops.append(("delete", k))
        elif r < cuts[2]:
            ops.append(("contains", k))
        else:
            ops.append(("query", cfg.query) + query_args(cfg.query, rng, cfg.keys))
    return ops


def prefill(tree: AggregateTree, cfg: WorkloadConfig) -> None:
    rng = random.Random(cfg.seed)
    n = int(cfg.keys * cfg.prefill)
    h = tree.handle(0)
    for k in rng.sample(range(cfg.keys), n):
        h.insert(k, value_for(cfg.agg, k))
    tree.reset_counters()


@dataclass
class KindStats:
    count: int = 0
    latencies: list[float] = field(default_factory=list)
    chain_steps: int = 0
    registry_scans: int = 0


@dataclass
class WorkloadResult:
    tree: AggregateTree
    elapsed: float
    stats: dict[str, KindStats]
    traces: list[dict]
    errors: list[BaseException]


def run_workload(cfg: WorkloadConfig, tree: AggregateTree | None = None, *,
                 trace_queries: bool = False) -> WorkloadResult:
    cfg.validate()
    if tree is None:
        tree = cfg.make_tree()
        prefill(tree, cfg)
    per = [cfg.ops // cfg.threads + (1 if t < cfg.ops % cfg.threads else 0) for t in range(cfg.threads)]
    scripts = [make_script(cfg, t, per[t]) for t in range(cfg.threads)]
    stats = [{k: KindStats() for k in OP_KINDS} for _ in range(cfg.threads)]
    errors: list[BaseException] = []
    barrier = threading.Barrier(cfg.threads + 1)
    clock = time.perf_counter

    def worker(tid: int) -> None:
        h = tree.handle(tid)
        if trace_queries:
            h.trace = []
        c = h.c
        st = stats[tid]
        barrier.wait()
        try:
            for op in scripts[tid]:
                kind = op[0]
                s = st[kind]
                cs, rs = c.chain_steps, c.registry_scans
                t0 = clock()
                if kind == "insert":
                    h.insert(op[1], op[2])
                elif kind == "delete":
                    h.delete(op[1])
                elif kind == "contains":
                    h.contains(op[1])
                else:
                    try:
                        h.query(op[1], *op[2:])
                    except QueryFailure:
                        pass
                s.latencies.append(clock() - t0)
                s.count += 1
                s.chain_steps += c.chain_steps - cs
                s.registry_scans += c.registry_scans - rs
        except BaseException as e:  # reported to the caller
            errors.append(e)

    threads = [threading.Thread(target=worker, args=(t,)) for t in range(cfg.threads)]
    for t in threads:
        t.start()
    barrier.wait()
    t0 = clock()
    for t in threads:
        t.join()
    elapsed = clock() - t0
    merged = {k: KindStats() for k in OP_KINDS}
    for st in stats:
        for k, s in st.items():
            m = merged[k]
            m.count += s.count
            m.latencies.extend(s.latencies)
            m.chain_steps += s.chain_steps
            m.registry_scans += s.registry_scans
    traces = [r for h in tree.handles if h.trace for r in h.trace]
    return WorkloadResult(tree, elapsed, merged, traces, errors)
