"""Operation histories and their JSON-lines encoding."""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Iterable, Iterator

from ..basetree import NOT_FOUND

EFFECTUAL = ("insert", "delete")


@dataclass
class Event:
    tid: int
    op: str
    args: tuple
    result: Any = None
    invoke: int = -1
    response: int = -1
    ts: int | None = None

    @property
    def effectual(self) -> bool:
        if self.op == "insert":
            return self.result is True
        if self.op == "delete":
            return self.result is not NOT_FOUND and not _is_error(self.result)
        return False

    def describe(self) -> str:
        a = ", ".join(repr(x) for x in self.args)
        ts = "" if self.ts is None else f" @ts={self.ts}"
        return f"t{self.tid} {self.op}({a}) -> {self.result!r} [{self.invoke},{self.response}]{ts}"


@dataclass(frozen=True)
class QueryError:
    """A query that raised; stored in place of its answer."""

    kind: str

    def __repr__(self) -> str:
        return f"error:{self.kind}"


def _is_error(v) -> bool:
    return isinstance(v, QueryError)


@dataclass
class History:
    events: list[Event] = field(default_factory=list)

    def __iter__(self) -> Iterator[Event]:
        return iter(self.events)

    def __len__(self) -> int:
        return len(self.events)

    def completed(self) -> "History":
        return History([e for e in self.events if e.response >= 0])

    def well_formed(self) -> bool:
        last: dict[int, int] = {}
        for e in sorted(self.events, key=lambda e: e.invoke):
            if e.response < e.invoke:
                return False
            if e.invoke < last.get(e.tid, -1):
                return False
            last[e.tid] = e.response
        return True

    def to_jsonl(self) -> str:
        return "".join(json.dumps(event_to_json(e)) + "\n" for e in self.events)

    @classmethod
    def from_jsonl(cls, text: str) -> "History":
        return cls([event_from_json(json.loads(line)) for line in text.splitlines() if line.strip()])


class HistoryLog:
    """Thread-safe recorder; invoke/response indices share one sequence."""

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._seq = 0
        self.events: list[Event] = []

    def _next(self) -> int:
        with self._lock:
            s = self._seq
            self._seq += 1
            return s

    def begin(self, tid: int, op: str, args: tuple) -> Event:
        return Event(tid, op, args, invoke=self._next())

    def end(self, ev: Event, result: Any, ts: int | None = None) -> None:
        ev.result = result
        ev.ts = ts
        ev.response = self._next()
        with self._lock:
            self.events.append(ev)

    def drain(self) -> History:
        with self._lock:
            evs, self.events = self.events, []
        return History(sorted(evs, key=lambda e: e.invoke))

    def drain_jsonl(self) -> str:
        return self.drain().to_jsonl()


# -- JSON ---------------------------------------------------------------------

def encode_value(v: Any) -> Any:
    if v is NOT_FOUND:
        return {"$": "NOT_FOUND"}
    if isinstance(v, QueryError):
        return {"$": "error", "kind": v.kind}
    if isinstance(v, Fraction):
        return {"$": "frac", "n": v.numerator, "d": v.denominator}
    if isinstance(v, tuple):
        return {"$": "tuple", "items": [encode_value(x) for x in v]}
    if isinstance(v, list):
        return [encode_value(x) for x in v]
    return v


def decode_value(v: Any) -> Any:
    if isinstance(v, dict) and "$" in v:
        tag = v["$"]
        if tag == "NOT_FOUND":
            return NOT_FOUND
        if tag == "error":
            return QueryError(v["kind"])
        if tag == "frac":
            return Fraction(v["n"], v["d"])
        if tag == "tuple":
            return tuple(decode_value(x) for x in v["items"])
        raise ValueError(f"unknown tag {tag!r}")
    if isinstance(v, list):
        return [decode_value(x) for x in v]
    return v


def event_to_json(e: Event) -> dict:
    return {
        "tid": e.tid, "op": e.op, "args": [encode_value(a) for a in e.args],
        "result": encode_value(e.result), "invoke": e.invoke, "response": e.response,
        "ts": e.ts,
    }


def event_from_json(d: dict) -> Event:
    return Event(
        d["tid"], d["op"], tuple(decode_value(a) for a in d["args"]),
        decode_value(d["result"]), d["invoke"], d["response"], d.get("ts"),
    )


def merge(histories: Iterable[History]) -> History:
    evs = [e for h in histories for e in h]
    return History(sorted(evs, key=lambda e: e.invoke))
