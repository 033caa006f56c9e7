"""Compare-and-set emulation.

CPython gives us atomic single-attribute loads and stores, but no hardware
CAS.  Every CAS in the package goes through one of a fixed pool of striped
locks keyed by the identity of the object that owns the word, so readers
never take a lock and writers to unrelated objects rarely contend.
"""

from __future__ import annotations

import threading

_N_STRIPES = 64
_STRIPES = tuple(threading.Lock() for _ in range(_N_STRIPES))


def stripe(obj: object) -> threading.Lock:
    return _STRIPES[(id(obj) >> 4) % _N_STRIPES]


def cas_attr(obj: object, name: str, expected, new) -> bool:
    """Set ``obj.name = new`` iff it currently equals ``expected``."""
    with _STRIPES[(id(obj) >> 4) % _N_STRIPES]:
        if getattr(obj, name) == expected:
            setattr(obj, name, new)
            return True
        return False


class AtomicCounter:
    """Integer with fetch-and-increment; plain reads are lock-free."""

    __slots__ = ("value", "_lock")

    def __init__(self, value: int = 0) -> None:
        self.value = value
        self._lock = threading.Lock()

    def fetch_and_increment(self) -> int:
        with self._lock:
            v = self.value
            self.value = v + 1
            return v

    def increment(self) -> int:
        with self._lock:
            self.value += 1
            return self.value
