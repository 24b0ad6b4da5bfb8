"""Contiguous, fixed-skip and variable-skip n-gram enumeration and counting.

Two routes are provided. The generator functions (:func:`contiguous_ngrams`,
:func:`fixed_skip_ngrams`, :func:`variable_skip_ngrams`) yield
:class:`NgramToken` objects one at a time in lexicographic index order. The
array route (:func:`index_tuples`) builds the same index tuples as an
``(N, n)`` integer array; :func:`build_distribution` uses it to fold tokens
into packed integer keys without holding Python objects per token.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, Sequence

import numpy as np

from .vlt import CODE_BITS, I_SLOTS, S_DOMAIN, Vlt, VltSequence, vlt_to_string

MODES = ("none", "fixed", "variable")
PACKED_MAX_N = 64 // CODE_BITS


@dataclass(frozen=True)
class SkipSpec:
    mode: str = "none"
    t: int = 0
    ioi: float | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"skip mode must be one of {MODES}, got {self.mode!r}")
        if self.mode == "fixed" and (not isinstance(self.t, int) or self.t < 1):
            raise ValueError(f"fixed skips need t >= 1, got {self.t!r}")
        if self.mode == "variable" and not (self.ioi is not None and self.ioi > 0):
            raise ValueError(f"variable skips need ioi > 0, got {self.ioi!r}")

    @classmethod
    def none(cls) -> "SkipSpec":
        return cls("none")

    @classmethod
    def fixed(cls, t: int) -> "SkipSpec":
        return cls("fixed", t=t)

    @classmethod
    def variable(cls, ioi: float) -> "SkipSpec":
        return cls("variable", ioi=float(ioi))

    @classmethod
    def parse(cls, text: str) -> "SkipSpec":
        """Parse ``none``, ``fixed:<t>`` or ``ioi:<seconds>``."""
        text = text.strip()
        if text == "none":
            return cls.none()
        kind, sep, value = text.partition(":")
        if sep and kind == "fixed" and value.isdigit():
            return cls.fixed(int(value))
        if sep and kind in ("ioi", "variable"):
            try:
                return cls.variable(float(value))
            except ValueError:
                pass
        raise ValueError(f"bad skip {text!r}; use none, fixed:<t> or ioi:<seconds>")

    @property
    def label(self) -> str:
        if self.mode == "fixed":
            return f"fixed:{self.t}"
        if self.mode == "variable":
            return f"ioi:{self.ioi:g}"
        return "none"

    def __str__(self):
        return self.label


@dataclass(frozen=True)
class NgramToken:
    grams: tuple[Vlt, ...]
    indices: tuple[int, ...]

    def __post_init__(self):
        if not self.indices or len(self.grams) != len(self.indices):
            raise ValueError("grams and indices must be equally long and non-empty")
        if any(a >= b for a, b in zip(self.indices, self.indices[1:])):
            raise ValueError(f"indices must strictly increase, got {self.indices}")

    @property
    def n(self) -> int:
        return len(self.indices)


def _token(seq: VltSequence, idx: tuple[int, ...]) -> NgramToken:
    return NgramToken(tuple(seq.tokens[j] for j in idx), idx)


# ---------------------------------------------------------------------------
# generator route

def contiguous_ngrams(seq: VltSequence, n: int) -> Iterator[NgramToken]:
    if n < 1:
        raise ValueError("n must be >= 1")
    for j in range(len(seq) - n + 1):
        yield _token(seq, tuple(range(j, j + n)))


def fixed_skip_ngrams(seq: VltSequence, n: int, t: int) -> Iterator[NgramToken]:
    """Every index tuple whose gaps skip at most ``t`` positions in total."""
    if n < 1 or t < 0:
        raise ValueError("need n >= 1 and t >= 0")
    k = len(seq)

    def extend(prefix, budget):
        if len(prefix) == n:
            yield tuple(prefix)
            return
        last = prefix[-1]
        for nxt in range(last + 1, min(k, last + 2 + budget)):
            prefix.append(nxt)
            yield from extend(prefix, budget - (nxt - last - 1))
            prefix.pop()

    for start in range(k - n + 1):
        for idx in extend([start], t):
            yield _token(seq, idx)


def _successor_lists(perf: np.ndarray, ioi: float) -> list[list[int]]:
    k = len(perf)
    return [[j for j in range(i + 1, k) if perf[j] - perf[i] <= ioi] for i in range(k)]


def variable_skip_ngrams(seq: VltSequence, n: int, ioi: float) -> Iterator[NgramToken]:
    """Every index tuple whose adjacent members lie at most ``ioi`` seconds apart."""
    if n < 1 or not ioi > 0:
        raise ValueError("need n >= 1 and ioi > 0")
    perf = seq.perf
    succ = _successor_lists(perf, ioi)

    def extend(prefix):
        if len(prefix) == n:
            yield tuple(prefix)
            return
        for nxt in succ[prefix[-1]]:
            prefix.append(nxt)
            yield from extend(prefix)
            prefix.pop()

    for start in range(len(seq)):
        for idx in extend([start]):
            yield _token(seq, idx)


def iter_ngrams(seq: VltSequence, n: int, skip: SkipSpec) -> Iterator[NgramToken]:
    if skip.mode == "fixed":
        return fixed_skip_ngrams(seq, n, skip.t)
    if skip.mode == "variable":
        return variable_skip_ngrams(seq, n, skip.ioi)
    return contiguous_ngrams(seq, n)


def count_fixed_closed_form(k: int, n: int, t: int) -> int:
    """Number of n-long index tuples from ``k`` events with at most ``t`` total skips.

    A tuple with ``s`` total skips spreads them over ``n - 1`` gaps in
    ``C(s + n - 2, n - 2)`` ways and can start at ``k - n + 1 - s`` places.
    """
    if k < 1 or n < 1 or t < 0:
        raise ValueError("need k, n >= 1 and t >= 0")
    if n == 1:
        return k
    return sum(math.comb(s + n - 2, n - 2) * max(0, k - n + 1 - s) for s in range(t + 1))


# ---------------------------------------------------------------------------
# array route

def _extend_ranges(paths: np.ndarray, first: np.ndarray, count: np.ndarray):
    """Append each path's successors ``first, first+1, ..., first+count-1``."""
    count = np.maximum(count, 0)
    total = int(count.sum())
    rows = np.repeat(np.arange(len(paths)), count)
    within = np.arange(total) - np.repeat(np.cumsum(count) - count, count)
    nxt = first[rows] + within
    return np.column_stack([paths[rows], nxt]), rows


def _fixed_tuples(k: int, n: int, t: int) -> np.ndarray:
    paths = np.arange(max(k, 0), dtype=np.int64)[:, None]
    budget = np.full(len(paths), t, dtype=np.int64)
    for _ in range(n - 1):
        last = paths[:, -1]
        count = np.minimum(budget + 1, k - 1 - last)
        paths, rows = _extend_ranges(paths, last + 1, count)
        budget = budget[rows] - (paths[:, -1] - paths[:, -2] - 1)
    return paths


def _reach(perf: np.ndarray, ioi: float) -> np.ndarray:
    """For sorted ``perf``: one past the last j with ``perf[j] - perf[i] <= ioi``."""
    k = len(perf)
    r = np.searchsorted(perf, perf + ioi, side="right")
    # match the difference test exactly at float boundaries
    while True:
        grow = r < k
        grow[grow] = perf[r[grow]] - perf[grow] <= ioi
        if not grow.any():
            break
        r[grow] += 1
    idx = np.arange(k)
    while True:
        shrink = r - 1 > idx
        shrink[shrink] = perf[r[shrink] - 1] - perf[shrink] > ioi
        if not shrink.any():
            break
        r[shrink] -= 1
    return np.maximum(r, idx + 1)


def _variable_tuples(perf: np.ndarray, n: int, ioi: float) -> np.ndarray:
    k = len(perf)
    paths = np.arange(k, dtype=np.int64)[:, None]
    if np.all(np.diff(perf) >= 0):
        reach = _reach(perf, ioi)
        for _ in range(n - 1):
            last = paths[:, -1]
            paths, _ = _extend_ranges(paths, last + 1, reach[last] - last - 1)
        return paths
    succ = [np.asarray(s, dtype=np.int64) for s in _successor_lists(perf, ioi)]
    ptr = np.concatenate([[0], np.cumsum([len(s) for s in succ])])
    flat = np.concatenate(succ) if ptr[-1] else np.zeros(0, dtype=np.int64)
    for _ in range(n - 1):
        last = paths[:, -1]
        paths, rows = _extend_ranges(paths, ptr[last], ptr[last + 1] - ptr[last])
        paths[:, -1] = flat[paths[:, -1]]
    return paths


def index_tuples(seq: VltSequence, n: int, skip: SkipSpec) -> np.ndarray:
    """All admitted index tuples as an ``(N, n)`` array in lexicographic order."""
    if n < 1:
        raise ValueError("n must be >= 1")
    k = len(seq)
    if k < n:
        return np.zeros((0, n), dtype=np.int64)
    if n == 1 or skip.mode == "none":
        return np.arange(k - n + 1, dtype=np.int64)[:, None] + np.arange(n)
    if skip.mode == "fixed":
        return _fixed_tuples(k, n, skip.t)
    return _variable_tuples(seq.perf, n, skip.ioi)


def pack_keys(seq: VltSequence, idx: np.ndarray, keep_entry: bool = False) -> np.ndarray:
    """One integer key per n-gram token.

    The first gram's bass interval is dropped unless ``keep_entry``.
    """
    n = idx.shape[1]
    first = (seq.codes if keep_entry else seq.entry_free_codes)[idx[:, 0]]
    if n <= PACKED_MAX_N:
        keys = first.astype(np.uint64)
        for col in range(1, n):
            keys = (keys << np.uint64(CODE_BITS)) | seq.codes[idx[:, col]].astype(np.uint64)
        return keys
    keys = first.astype(object)
    for col in range(1, n):
        keys = keys * (1 << CODE_BITS) + seq.codes[idx[:, col]].astype(object)
    return keys


_CODE_STRINGS = [vlt_to_string(Vlt.from_code(c)) for c in range(len(S_DOMAIN) * I_SLOTS)]


def unpack_key(key, n: int) -> tuple[str, ...]:
    key = int(key)
    mask = (1 << CODE_BITS) - 1
    return tuple(_CODE_STRINGS[(key >> (CODE_BITS * (n - 1 - j))) & mask] for j in range(n))


def type_key(grams: Sequence[Vlt], keep_entry: bool = False) -> tuple[str, ...]:
    """Canonical n-gram type: VLT strings with the entry interval blanked."""
    first = grams[0] if keep_entry else Vlt(grams[0].s, None)
    return (vlt_to_string(first),) + tuple(vlt_to_string(g) for g in grams[1:])


def piece_keys(seq: VltSequence, n: int, skip: SkipSpec, keep_entry: bool = False) -> np.ndarray:
    return pack_keys(seq, index_tuples(seq, n, skip), keep_entry)


def _unique_counts(keys: np.ndarray, weights: np.ndarray | None = None):
    if len(keys) == 0:
        return keys, np.zeros(0, dtype=np.int64)
    uniq, inverse = np.unique(keys, return_inverse=True)
    counts = np.bincount(inverse.ravel(), weights=weights, minlength=len(uniq))
    return uniq, counts.astype(np.int64)


def default_threads() -> int:
    env = os.environ.get("VLTSKIP_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def map_pieces(func, items: Sequence, threads: int | None = None) -> list:
    """Apply ``func`` to every item, in parallel if asked; order is preserved."""
    threads = default_threads() if threads is None else max(1, threads)
    if threads == 1 or len(items) < 2:
        return [func(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(func, items))


@dataclass
class Distribution:
    """Counts of n-gram types, stored as sorted packed keys plus counts."""

    n: int
    skip: SkipSpec
    keys: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)

    @property
    def total_tokens(self) -> int:
        return int(self.values.sum())

    @property
    def n_types(self) -> int:
        return len(self.keys)

    def __len__(self):
        return self.n_types

    @cached_property
    def counts(self) -> dict[tuple[str, ...], int]:
        return {unpack_key(k, self.n): int(c) for k, c in zip(self.keys, self.values)}

    def ranked(self) -> list[tuple[tuple[str, ...], int]]:
        """Types by descending count, ties in lexicographic type order."""
        return sorted(self.counts.items(), key=lambda kv: (-kv[1], kv[0]))

    def merge(self, other: "Distribution") -> "Distribution":
        if (self.n, self.skip) != (other.n, other.skip):
            raise ValueError("can only merge distributions with the same n and skip")
        keys, counts = _unique_counts(np.concatenate([self.keys, other.keys]),
                                      np.concatenate([self.values, other.values]))
        return Distribution(self.n, self.skip, keys, counts)


def build_distribution(sequences: Iterable[VltSequence], n: int, skip: SkipSpec,
                       threads: int | None = None, keep_entry: bool = False) -> Distribution:
    """Count n-gram types over every piece and merge the per-piece counts.

    ``keep_entry`` makes the first chord's bass interval part of the type.
    """
    sequences = list(sequences)

    def per_piece(seq):
        return _unique_counts(piece_keys(seq, n, skip, keep_entry))

    parts = map_pieces(per_piece, sequences, threads)
    if not parts:
        empty = np.zeros(0, dtype=np.uint64 if n <= PACKED_MAX_N else object)
        return Distribution(n, skip, empty, np.zeros(0, dtype=np.int64))
    keys, counts = _unique_counts(np.concatenate([p[0] for p in parts]),
                                  np.concatenate([p[1] for p in parts]))
    return Distribution(n, skip, keys, counts)


def distribution_from_tokens(tokens: Iterable[NgramToken], n: int, skip: SkipSpec,
                             keep_entry: bool = False) -> dict:
    """Reference counter over generator output, keyed like :attr:`Distribution.counts`."""
    counts: dict[tuple[str, ...], int] = {}
    for tok in tokens:
        key = type_key(tok.grams, keep_entry)
        counts[key] = counts.get(key, 0) + 1
    return counts
