"""Deterministic interleavings driven by the tree's pause hooks.

Each scripted thread runs in a real OS thread, but only one is allowed to
make progress at a time: every hook parks the caller until the scheduler
hands it the turn again.  A schedule is a list of ``(tid, hook)`` entries
meaning "run ``tid`` until it parks at ``hook``" (``"end"`` runs it to
completion).  Without a schedule, or once it is used up, a seeded random
scheduler picks the next thread at every step.
"""

from __future__ import annotations

import random
import threading
from dataclasses import dataclass, field
from typing import Any, Sequence

from ..backbone import AggregateTree, QueryFailure
from .checker import Verdict, check_linearizable
from .history import History

Op = tuple  # ("insert", k, v) | ("delete", k) | ("contains", k) | ("query", name, *args)

END = "end"
RESTART_LIMIT = 50


class Deadlock(RuntimeError):
    pass


@dataclass
class InterleaveResult:
    history: History
    trace: list[tuple[int, str]]
    results: dict[int, list[Any]]
    initial: list[tuple[int, Any]]
    deadlock: str | None = None


@dataclass
class Scenario:
    name: str
    scripts: dict[int, list[Op]]
    schedule: list[tuple] = field(default_factory=list)
    setup: list[Op] = field(default_factory=list)
    spec: str = "count"
    seed: int = 0
    # optional expected per-tid results, checked by the test corpus
    expect: dict[int, list[Any]] | None = None


def run_op(h, op: Op) -> Any:
    kind = op[0]
    if kind == "insert":
        return h.insert(op[1], op[2] if len(op) > 2 else None)
    if kind == "delete":
        return h.delete(op[1])
    if kind == "contains":
        return h.contains(op[1])
    if kind == "query":
        try:
            return h.query(op[1], *op[2:])
        except QueryFailure as e:
            return e
    raise ValueError(f"unknown op {kind!r}")


class Interleaver:
    def __init__(self, tree: AggregateTree, scripts: dict[int, Sequence[Op]], *,
                 seed: int = 0, timeout: float = 10.0, max_steps: int = 100_000) -> None:
        self.tree = tree
        self.scripts = {t: list(ops) for t, ops in scripts.items()}
        self.rng = random.Random(seed)
        self.timeout = timeout
        self.max_steps = max_steps
        self.cv = threading.Condition()
        self.turn: int | None = None
        self.parked: dict[int, str] = {}
        self.finished: set[int] = set()
        self.trace: list[tuple[int, str]] = []
        self.results: dict[int, list[Any]] = {t: [] for t in scripts}
        self.errors: dict[int, BaseException] = {}
        self.threads: dict[int, threading.Thread] = {}

    # -- worker side ----------------------------------------------------------

    def _hook(self, tid: int, name: str) -> None:
        if tid not in self.threads or threading.current_thread() is not self.threads[tid]:
            return
        with self.cv:
            self.parked[tid] = name
            self.trace.append((tid, name))
            self.turn = None
            self.cv.notify_all()
            if not self.cv.wait_for(lambda: self.turn == tid, self.timeout):
                raise Deadlock(f"tid {tid} never resumed from {name}")

    def _worker(self, tid: int) -> None:
        with self.cv:
            self.parked[tid] = "start"
            self.cv.notify_all()
            self.cv.wait_for(lambda: self.turn == tid, self.timeout)
        try:
            h = self.tree.handle(tid)
            for op in self.scripts[tid]:
                self.results[tid].append(run_op(h, op))
        except BaseException as e:  # surfaced by run()
            self.errors[tid] = e
        finally:
            with self.cv:
                self.finished.add(tid)
                self.parked[tid] = END
                self.trace.append((tid, END))
                self.turn = None
                self.cv.notify_all()

    # -- scheduler side -------------------------------------------------------

    def _step(self, tid: int) -> str:
        with self.cv:
            self.turn = tid
            self.cv.notify_all()
            if not self.cv.wait_for(lambda: self.turn is None, self.timeout):
                raise Deadlock(f"tid {tid} did not park within {self.timeout}s")
            return self.parked[tid]

    def _run_until(self, tid: int, stop: str, count: int = 1) -> None:
        if tid in self.finished:
            return
        restarts = 0
        hits = 0
        while tid not in self.finished:
            at = self._step(tid)
            if at == stop:
                hits += 1
                if hits >= count:
                    return
            elif at == "restart":
                restarts += 1
                if restarts >= RESTART_LIMIT:
                    # waiting on a parked thread; let the schedule move on
                    return

    def run(self, schedule: Sequence[tuple] = ()) -> str | None:
        self.tree.hook = self._hook
        try:
            for tid in self.scripts:
                t = threading.Thread(target=self._worker, args=(tid,), daemon=True)
                self.threads[tid] = t
                t.start()
            with self.cv:
                if not self.cv.wait_for(lambda: len(self.parked) == len(self.scripts), self.timeout):
                    return "workers failed to start"
            for entry in schedule:
                tid, stop = entry[0], entry[1]
                self._run_until(tid, stop, entry[2] if len(entry) > 2 else 1)
            steps = 0
            while len(self.finished) < len(self.scripts):
                live = sorted(t for t in self.scripts if t not in self.finished)
                self._step(self.rng.choice(live))
                steps += 1
                if steps > self.max_steps:
                    return f"no progress after {steps} steps (livelock or deadlock)"
            return None
        except Deadlock as e:
            return str(e)
        finally:
            self.tree.hook = None
            for t in self.threads.values():
                t.join(self.timeout)
            for tid, e in self.errors.items():
                if not isinstance(e, Deadlock):
                    raise e


def interleave(tree: AggregateTree, scripts: dict[int, Sequence[Op]],
               schedule: Sequence[tuple] = (), *, seed: int = 0,
               initial: Sequence[tuple[int, Any]] = ()) -> InterleaveResult:
    """Run ``scripts`` under ``schedule`` and return the recorded history.

    ``tree`` must have been built with ``record_history=True``; anything it
    already recorded is discarded.
    """
    if tree.history is None:
        raise ValueError("interleave needs a tree built with record_history=True")
    tree.history.drain()
    iv = Interleaver(tree, scripts, seed=seed)
    dead = iv.run(schedule)
    return InterleaveResult(tree.history.drain(), iv.trace, iv.results, list(initial), dead)


def run_scenario(sc: Scenario, variant: str = "fastupdate", **tree_kwargs) -> tuple[InterleaveResult, Verdict]:
    from .. import new_tree

    threads = max(max(sc.scripts) + 1, 1)
    tree = new_tree(sc.spec, threads, variant, record_history=True, **tree_kwargs)
    h = tree.handle(0)
    for op in sc.setup:
        run_op(h, op)
    initial = tree.items()
    res = interleave(tree, sc.scripts, sc.schedule, seed=sc.seed, initial=initial)
    if res.deadlock:
        return res, Verdict("deadlock", detail=res.deadlock)
    return res, check_linearizable(res.history, tree.spec, initial)


def queries_for(spec) -> list[str]:
    """Query names that make sense for ``spec``."""
    from ..aggregate import get_spec

    spec = get_spec(spec)
    names = ["agg_less_than", "range_aggregate"]
    if spec.count is not None:
        names += ["rank", "select", "median_key_in_range"]
        if isinstance(spec.identity, tuple):
            names.append("average_in_range")
            if len(spec.identity) == 3:
                names.append("variance_in_range")
    return names


def random_op(rng: random.Random, keys: int, queries: Sequence[str]) -> Op:
    r = rng.random()
    k = rng.randrange(keys)
    if r < 0.35:
        return ("insert", k, rng.randrange(1, 10))
    if r < 0.6:
        return ("delete", k)
    if r < 0.75:
        return ("contains", k)
    name = rng.choice(list(queries))
    if name == "select":
        return ("query", name, rng.randrange(3))
    if name in ("rank", "agg_less_than"):
        return ("query", name, rng.randrange(keys + 1))
    a, b = sorted((rng.randrange(keys + 1), rng.randrange(keys + 1)))
    return ("query", name, a, b)


def random_scenario(seed: int, *, spec: str = "count", threads: int = 3, ops: int = 6,
                    keys: int = 5, queries: Sequence[str] | None = None) -> Scenario:
    """A small random history: ``ops`` operations spread over ``threads`` threads."""
    rng = random.Random(seed)
    qs = list(queries) if queries else queries_for(spec)
    scripts: dict[int, list[Op]] = {t: [] for t in range(threads)}
    for i in range(ops):
        scripts[i % threads if i < threads else rng.randrange(threads)].append(random_op(rng, keys, qs))
    setup = [("insert", k, rng.randrange(1, 10)) for k in rng.sample(range(keys), rng.randrange(keys))]
    schedule = []
    # Half the time, park an updater inside its protocol before the random phase.
    updaters = [t for t, s in scripts.items() if s and s[0][0] in ("insert", "delete")]
    if updaters and rng.random() < 0.5:
        schedule.append((rng.choice(updaters), rng.choice(("locked", "announced", "aggregated", "applied"))))
    return Scenario(f"random-{seed}", {t: s for t, s in scripts.items() if s}, schedule=schedule,
                    setup=setup, spec=spec, seed=seed)
