"""Sequential reference maps.

Two independent implementations of the same bounded-map semantics: a dict-based
one and a bisect-based one. Concurrent structures are judged against these, and
they cross-check each other. ``insert`` reports whether the logical map changed
(a value update on a present key does not count); ``delete`` reports presence.
When ``max_live`` is set, an insert that would grow the map past the budget
fails and returns False.
"""

from __future__ import annotations

import bisect
from typing import Iterable, List, Optional, Sequence, Set, Tuple

from .ops import Op, OpKind, OpResult


class OracleMap:
    """Plain-dict model of the bounded ordered map."""

    def __init__(self, max_live: Optional[int] = None):
        self.max_live = max_live
        self._data: dict[int, int] = {}

    def get(self, key: int) -> Optional[int]:
        return self._data.get(key)

    def insert(self, key: int, value: int) -> bool:
        if key in self._data:
            self._data[key] = value
            return False
        if self.max_live is not None and len(self._data) >= self.max_live:
            return False
        self._data[key] = value
        return True

    def delete(self, key: int) -> bool:
        return self._data.pop(key, None) is not None

    def apply(self, op: Op) -> OpResult:
        kind, key, value = op
        if kind == OpKind.GET:
            return self.get(key)
        if kind == OpKind.INSERT:
            return self.insert(key, value)
        return self.delete(key)

    def keys(self) -> Set[int]:
        return set(self._data)

    def items(self) -> List[Tuple[int, int]]:
        return sorted(self._data.items())

    def __len__(self) -> int:
        return len(self._data)


class BisectOracle:
    """Sorted-list model, independent of OracleMap on purpose."""

    def __init__(self, max_live: Optional[int] = None):
        self.max_live = max_live
        self._keys: List[int] = []
        self._values: List[int] = []

    def _index(self, key: int) -> int:
        i = bisect.bisect_left(self._keys, key)
        if i < len(self._keys) and self._keys[i] == key:
            return i
        return -1

    def get(self, key: int) -> Optional[int]:
        i = self._index(key)
        return self._values[i] if i >= 0 else None

    def insert(self, key: int, value: int) -> bool:
        i = self._index(key)
        if i >= 0:
            self._values[i] = value
            return False
        if self.max_live is not None and len(self._keys) >= self.max_live:
            return False
        j = bisect.bisect_left(self._keys, key)
        self._keys.insert(j, key)
        self._values.insert(j, value)
        return True

    def delete(self, key: int) -> bool:
        i = self._index(key)
        if i < 0:
            return False
        del self._keys[i]
        del self._values[i]
        return True

    def apply(self, op: Op) -> OpResult:
        kind, key, value = op
        if kind == OpKind.GET:
            return self.get(key)
        if kind == OpKind.INSERT:
            return self.insert(key, value)
        return self.delete(key)

    def keys(self) -> Set[int]:
        return set(self._keys)

    def items(self) -> List[Tuple[int, int]]:
        return list(zip(self._keys, self._values))

    def __len__(self) -> int:
        return len(self._keys)


def replay_sequential(
    ops: Iterable[Op], max_live: Optional[int] = None
) -> Tuple[List[OpResult], Set[int]]:
    """Apply ops to a fresh OracleMap; return per-op results and final key set."""
    oracle = OracleMap(max_live=max_live)
    results = [oracle.apply(op) for op in ops]
    return results, oracle.keys()


def replay_writes(
    writes: Sequence[Sequence],
    max_live: Optional[int] = None,
) -> Tuple[List[bool], Set[int]]:
    """Replay an effect log (writes only) and return outcomes plus final keys.

    Entries are (kind, key, value, ...); anything after the value (e.g. a
    recorded outcome) is ignored here so callers can diff it themselves.
    """
    oracle = OracleMap(max_live=max_live)
    outcomes = []
    for entry in writes:
        kind, key, value = entry[0], entry[1], entry[2]
        if kind == OpKind.INSERT:
            outcomes.append(oracle.insert(key, 0 if value is None else value))
        elif kind == OpKind.DELETE:
            outcomes.append(oracle.delete(key))
        else:
            raise ValueError(f"not a write op: {kind}")
    return outcomes, oracle.keys()
