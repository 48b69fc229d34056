"""Compact append-mostly containers for the derived state.

The person store holds a couple of million rows on a small machine, so the
hot indexes are sorted numpy arrays with a small mutable tail instead of
per-entry Python objects, and string columns stay in arrow chunks instead
of Python lists.
"""

from __future__ import annotations

import bisect

import numpy as np
import polars as pl


class GrowArray:
    """Amortized-append numpy array."""

    def __init__(self, dtype, capacity: int = 1024):
        self._arr = np.empty(capacity, dtype=dtype)
        self._n = 0

    def __len__(self) -> int:
        return self._n

    @property
    def view(self) -> np.ndarray:
        return self._arr[: self._n]

    def _reserve(self, extra: int) -> None:
        need = self._n + extra
        if need > len(self._arr):
            cap = max(need, len(self._arr) * 2)
            arr = np.empty(cap, dtype=self._arr.dtype)
            arr[: self._n] = self._arr[: self._n]
            self._arr = arr

    def append(self, value) -> None:
        self._reserve(1)
        self._arr[self._n] = value
        self._n += 1

    def extend(self, values: np.ndarray) -> None:
        values = np.asarray(values, dtype=self._arr.dtype)
        self._reserve(len(values))
        self._arr[self._n : self._n + len(values)] = values
        self._n += len(values)

    def __getitem__(self, idx):
        return self.view[idx]

    def __setitem__(self, idx, value):
        self.view[idx] = value


class StringColumn:
    """Append-mostly string column: arrow-backed chunks plus a Python tail.

    Bulk extends keep the polars chunk (no per-row materialization); point
    reads binary-search the chunk offsets; point writes go to an override
    map. Mutation is rare, so this stays compact at millions of rows.
    """

    def __init__(self):
        self._chunks: list[pl.Series] = []
        self._offsets: list[int] = [0]
        self._tail: list[str] = []
        self._overrides: dict[int, str] = {}

    def __len__(self) -> int:
        return self._offsets[-1] + len(self._tail)

    def append(self, value: str) -> None:
        self._tail.append(value)

    def extend_series(self, series: pl.Series) -> None:
        self._flush_tail()
        if len(series):
            self._chunks.append(series)
            self._offsets.append(self._offsets[-1] + len(series))

    def _flush_tail(self) -> None:
        if self._tail:
            self._chunks.append(pl.Series(self._tail, dtype=pl.Utf8))
            self._offsets.append(self._offsets[-1] + len(self._tail))
            self._tail = []

    def __getitem__(self, idx: int) -> str:
        idx = int(idx)
        if idx in self._overrides:
            return self._overrides[idx]
        base = self._offsets[-1]
        if idx >= base:
            return self._tail[idx - base]
        chunk_no = bisect.bisect_right(self._offsets, idx) - 1
        return self._chunks[chunk_no][idx - self._offsets[chunk_no]]

    def __setitem__(self, idx: int, value: str) -> None:
        idx = int(idx)
        base = self._offsets[-1]
        if idx >= base:
            self._tail[idx - base] = value
        else:
            self._overrides[idx] = value

    def nonempty_mask_for(self, series: pl.Series) -> np.ndarray:
        return (series != "").to_numpy()


class PairIndex:
    """Multimap from a 128-bit key (two u64 halves) to int values.

    The base is sorted by the first half only (random hashes collide there
    almost never); the second half is verified per hit. Point mutations go
    to a dict tail until compaction. Values must be non-negative.
    """

    COMPACT_AT = 65536

    def __init__(self):
        self._h1 = np.empty(0, dtype=np.uint64)
        self._h2 = np.empty(0, dtype=np.uint64)
        self._vals = np.empty(0, dtype=np.int64)
        self._added: dict[tuple[int, int], list[int]] = {}
        self._removed: dict[tuple[int, int], list[int]] = {}
        self._tail_h1 = np.empty(0, dtype=np.uint64)
        self._tail_h2 = np.empty(0, dtype=np.uint64)
        self._tail_dirty = False

    def __len__(self) -> int:
        n = len(self._h1) + sum(len(v) for v in self._added.values())
        return n - sum(len(v) for v in self._removed.values())

    # -- mutation -------------------------------------------------------

    def add(self, h1: int, h2: int, value: int) -> None:
        key = (int(h1), int(h2))
        removed = self._removed.get(key)
        if removed and value in removed:
            removed.remove(value)
            if not removed:
                del self._removed[key]
            return
        self._added.setdefault(key, []).append(int(value))
        self._tail_dirty = True
        if len(self._added) >= self.COMPACT_AT:
            self.compact()

    def remove(self, h1: int, h2: int, value: int) -> None:
        key = (int(h1), int(h2))
        added = self._added.get(key)
        if added and value in added:
            added.remove(value)
            if not added:
                del self._added[key]
            self._tail_dirty = True
            return
        self._removed.setdefault(key, []).append(int(value))

    def extend_bulk(self, h1: np.ndarray, h2: np.ndarray, values: np.ndarray) -> None:
        self.compact()
        h1 = np.concatenate([self._h1, np.asarray(h1, dtype=np.uint64)])
        h2 = np.concatenate([self._h2, np.asarray(h2, dtype=np.uint64)])
        vals = np.concatenate([self._vals, np.asarray(values, dtype=np.int64)])
        order = np.argsort(h1, kind="stable")
        self._h1 = h1[order]
        self._h2 = h2[order]
        self._vals = vals[order]

    def compact(self) -> None:
        if not self._added and not self._removed:
            return
        total = sum(len(v) for v in self._added.values())
        h1 = np.empty(total, dtype=np.uint64)
        h2 = np.empty(total, dtype=np.uint64)
        vals = np.empty(total, dtype=np.int64)
        i = 0
        for (k1, k2), vlist in self._added.items():
            for v in vlist:
                h1[i], h2[i], vals[i] = k1, k2, v
                i += 1
        merged_h1 = np.concatenate([self._h1, h1])
        merged_h2 = np.concatenate([self._h2, h2])
        merged_vals = np.concatenate([self._vals, vals])
        if self._removed:
            keep = np.ones(len(merged_h1), dtype=bool)
            order = np.argsort(merged_h1, kind="stable")
            sorted_h1 = merged_h1[order]
            for (k1, k2), vlist in self._removed.items():
                lo = int(np.searchsorted(sorted_h1, np.uint64(k1), side="left"))
                hi = int(np.searchsorted(sorted_h1, np.uint64(k1), side="right"))
                for v in vlist:
                    for j in range(lo, hi):
                        oj = order[j]
                        if keep[oj] and merged_h2[oj] == k2 and merged_vals[oj] == v:
                            keep[oj] = False
                            break
            merged_h1 = merged_h1[keep]
            merged_h2 = merged_h2[keep]
            merged_vals = merged_vals[keep]
        order = np.argsort(merged_h1, kind="stable")
        self._h1 = merged_h1[order]
        self._h2 = merged_h2[order]
        self._vals = merged_vals[order]
        self._added.clear()
        self._removed.clear()
        self._tail_h1 = np.empty(0, dtype=np.uint64)
        self._tail_h2 = np.empty(0, dtype=np.uint64)
        self._tail_dirty = False

    # -- queries --------------------------------------------------------

    def lookup(self, h1: int, h2: int) -> list[int]:
        key = (int(h1), int(h2))
        lo = int(np.searchsorted(self._h1, np.uint64(key[0]), side="left"))
        hi = int(np.searchsorted(self._h1, np.uint64(key[0]), side="right"))
        out = [int(self._vals[j]) for j in range(lo, hi) if self._h2[j] == key[1]]
        out.extend(self._added.get(key, ()))
        for v in self._removed.get(key, ()):
            if v in out:
                out.remove(v)
        return out

    def contains(self, h1: int, h2: int) -> bool:
        return bool(self.lookup(h1, h2))

    def _refresh_tail(self) -> None:
        if self._tail_dirty:
            keys = sorted(self._added)
            self._tail_h1 = np.asarray([k[0] for k in keys], dtype=np.uint64)
            self._tail_h2 = np.asarray([k[1] for k in keys], dtype=np.uint64)
            self._tail_dirty = False

    @staticmethod
    def _probe(base_h1, base_h2, q1, q2) -> np.ndarray:
        """Vectorized membership of (q1,q2) in h1-sorted (base_h1, base_h2);
        equal-h1 runs are walked slot by slot (hash runs are tiny)."""
        n = len(base_h1)
        found = np.zeros(len(q1), dtype=bool)
        if n == 0:
            return found
        idx = np.searchsorted(base_h1, q1, side="left")
        offset = 0
        active = np.nonzero(idx < n)[0]
        while len(active) and offset < n:
            pos = idx[active] + offset
            ok = pos < n
            active = active[ok]
            pos = pos[ok]
            same = base_h1[pos] == q1[active]
            active = active[same]
            pos = pos[same]
            hit = base_h2[pos] == q2[active]
            found[active[hit]] = True
            active = active[~hit]
            offset += 1
        return found

    def contains_many(self, h1: np.ndarray, h2: np.ndarray) -> np.ndarray:
        """Vectorized membership over the merged view (ignores values)."""
        q1 = np.asarray(h1, dtype=np.uint64)
        q2 = np.asarray(h2, dtype=np.uint64)
        found = self._probe(self._h1, self._h2, q1, q2)
        if self._added:
            self._refresh_tail()
            found |= self._probe(self._tail_h1, self._tail_h2, q1, q2)
        if self._removed:
            # Removals are rare; verify the flagged hits honestly.
            for i in np.nonzero(found)[0]:
                if not self.lookup(int(q1[i]), int(q2[i])):
                    found[i] = False
        return found


def _multi_runs(s1: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(start, end) pairs of equal-value runs longer than one."""
    n = len(s1)
    starts = np.nonzero(np.concatenate([[True], s1[1:] != s1[:-1]]))[0]
    ends = np.concatenate([starts[1:], [n]])
    multi = (ends - starts) > 1
    return starts[multi], ends[multi]


def first_distinct_mask(h1: np.ndarray, h2: np.ndarray) -> np.ndarray:
    """True on the first occurrence of each (h1, h2) pair, in array order."""
    n = len(h1)
    if n == 0:
        return np.zeros(0, dtype=bool)
    order = np.argsort(h1, kind="stable")
    s1 = h1[order]
    s2 = h2[order]
    out = np.ones(n, dtype=bool)
    starts, ends = _multi_runs(s1)
    # stable sort keeps arrival order within a run, so the first h2 seen in
    # a run really is the earliest arrival of that pair
    for start, end in zip(starts, ends):
        seen: set[int] = set()
        for j in range(int(start), int(end)):
            key = int(s2[j])
            if key in seen:
                out[order[j]] = False
            else:
                seen.add(key)
    return out


def unique_mask(h1: np.ndarray, h2: np.ndarray) -> np.ndarray:
    """True where the (h1, h2) pair occurs exactly once in the batch."""
    n = len(h1)
    if n == 0:
        return np.zeros(0, dtype=bool)
    order = np.argsort(h1, kind="stable")
    s1 = h1[order]
    s2 = h2[order]
    out = np.ones(n, dtype=bool)
    starts, ends = _multi_runs(s1)
    for start, end in zip(starts, ends):
        counts: dict[int, int] = {}
        for j in range(int(start), int(end)):
            counts[int(s2[j])] = counts.get(int(s2[j]), 0) + 1
        for j in range(int(start), int(end)):
            if counts[int(s2[j])] > 1:
                out[order[j]] = False
    return out
