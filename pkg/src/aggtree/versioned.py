"""Timestamp-tagged version chains.

A :class:`VersionedField` is a singly linked list of immutable
:class:`Version` records, newest first.  The tail always carries timestamp 0,
so a versioned read at any ``ts >= 0`` terminates.  Chains are never pruned.
"""

from __future__ import annotations

from typing import Any

from ._atomic import stripe


class Version:
    __slots__ = ("value", "timestamp", "next")

    def __init__(self, value: Any, timestamp: int, next: "Version | None") -> None:
        self.value = value
        self.timestamp = timestamp
        self.next = next

    def __repr__(self) -> str:
        return f"Version({self.value!r}, ts={self.timestamp})"


class VersionedField:
    __slots__ = ("head",)

    def __init__(self, initial: Any, timestamp: int = 0) -> None:
        self.head = Version(initial, timestamp, None)

    def read(self) -> Any:
        return self.head.value

    def standard_timestamped_read(self) -> tuple[Any, int]:
        v = self.head
        return v.value, v.timestamp

    def versioned_read(self, ts: int) -> Any:
        v = self.head
        while v.timestamp > ts:
            v = v.next
        return v.value

    def versioned_read_steps(self, ts: int) -> tuple[Any, int]:
        """Versioned read that also reports how many newer versions it skipped."""
        v = self.head
        steps = 0
        while v.timestamp > ts:
            v = v.next
            steps += 1
        return v.value, steps

    def write(self, value: Any, ts: int) -> None:
        # Caller guarantees it is the only writer of this field.
        self.head = Version(value, ts, self.head)

    def write_if_timestamp(self, last_ts: int, new_value: Any, new_ts: int) -> bool:
        first = self.head
        if first.timestamp != last_ts:
            return False
        new = Version(new_value, new_ts, first)
        with stripe(self):
            if self.head is first:
                self.head = new
                return True
        return False

    def chain(self) -> list[tuple[int, Any]]:
        """``(timestamp, value)`` pairs from head to tail."""
        out = []
        v = self.head
        while v is not None:
            out.append((v.timestamp, v.value))
            v = v.next
        return out

    def __len__(self) -> int:
        n = 0
        v = self.head
        while v is not None:
            n += 1
            v = v.next
        return n

    def __repr__(self) -> str:
        return f"VersionedField({self.chain()!r})"


def versioned_read(field: VersionedField, ts: int) -> Any:
    return field.versioned_read(ts)


def standard_timestamped_read(field: VersionedField) -> tuple[Any, int]:
    return field.standard_timestamped_read()


def write_if_timestamp(field: VersionedField, last_ts: int, new_value: Any, new_ts: int) -> bool:
    return field.write_if_timestamp(last_ts, new_value, new_ts)
