"""Distribution curves and the cross-validated coverage experiment.

Coverage asks how much of a held-out fold's *contiguous* n-grams were seen in
training, where the training counts may include skip-grams. Folds are
stratified by composer and balanced on chord totals. Successive skip levels
are compared with Welch t tests (backward differences) under a Bonferroni
criterion.
"""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .corpus import Corpus
from .expansion import slice_onsets
from .skipgram import (Distribution, SkipSpec, _unique_counts, build_distribution,
                       map_pieces, piece_keys)
from .vlt import VltSequence

# ---------------------------------------------------------------------------
# cumulative probability curves


@dataclass
class CumulativeCurve:
    points: list[tuple[int, float]]
    singleton_rank: int

    @property
    def ranks(self) -> np.ndarray:
        return np.array([r for r, _ in self.points])

    @property
    def probabilities(self) -> np.ndarray:
        return np.array([p for _, p in self.points])


def cumulative_curve(distribution: Distribution | Mapping[tuple, int]) -> CumulativeCurve:
    """Cumulative share of tokens covered by the top-r types, r = 1..#types.

    ``singleton_rank`` is the last rank whose type occurs at least twice.
    """
    # tie order among equal counts does not change the curve
    if isinstance(distribution, Distribution):
        counts = np.asarray(distribution.values, dtype=np.int64)
    else:
        counts = np.fromiter(distribution.values(), dtype=np.int64, count=len(distribution))
    if not len(counts):
        raise ValueError("cannot build a curve from an empty distribution")
    counts = -np.sort(-counts)
    cum = np.cumsum(counts)
    probs = cum / cum[-1]
    singleton_rank = int(np.count_nonzero(counts >= 2))
    return CumulativeCurve([(r + 1, float(p)) for r, p in enumerate(probs)], singleton_rank)


# ---------------------------------------------------------------------------
# folds


class FoldSearchError(RuntimeError):
    pass


@dataclass
class FoldAssignment:
    fold_of: dict[str, int]
    fold_chord_totals: list[int]
    seed: int
    tolerance: float = 0.01

    @property
    def n_folds(self) -> int:
        return len(self.fold_chord_totals)

    def folds(self) -> list[list[str]]:
        out: list[list[str]] = [[] for _ in range(self.n_folds)]
        for pid, f in self.fold_of.items():
            out[f].append(pid)
        return out

    def violations(self, sizes: Mapping[str, int], strata: Mapping[str, str]) -> list[str]:
        """Broken fold constraints; an empty list means the assignment is valid."""
        problems = []
        totals = [0] * self.n_folds
        per_stratum: dict[str, list[int]] = defaultdict(lambda: [0] * self.n_folds)
        for pid, f in self.fold_of.items():
            totals[f] += sizes[pid]
            per_stratum[strata[pid]][f] += 1
        if totals != list(self.fold_chord_totals):
            problems.append("recorded fold totals are stale")
        for label, counts in per_stratum.items():
            if max(counts) - min(counts) > 1:
                problems.append(f"stratum {label!r} is unevenly dealt: {counts}")
        mean = sum(totals) / self.n_folds
        for f, tot in enumerate(totals):
            if abs(tot - mean) > self.tolerance * mean:
                problems.append(f"fold {f} holds {tot} chords, outside +/-{self.tolerance:.1%} "
                                f"of {mean:.1f}")
        return problems


def _sizes_and_strata(items, strata):
    if isinstance(items, Corpus):
        sizes = {p.piece_id: len(slice_onsets(p)) for p in items}
        strata = strata or items.strata()
    elif isinstance(items, Mapping):
        sizes = {pid: int(v) for pid, v in items.items()}
    else:
        sizes = {seq.piece_id: len(seq) for seq in items}
    if strata is None:
        strata = {pid: "" for pid in sizes}
    missing = set(sizes) - set(strata)
    if missing:
        raise ValueError(f"no stratum for pieces: {sorted(missing)[:5]}")
    return sizes, dict(strata)


def make_folds(items, n_folds: int = 10, tolerance: float = 0.01, seed: int = 0,
               strata: Mapping[str, str] | None = None,
               max_restarts: int = 1000) -> FoldAssignment:
    """Stratified folds whose chord totals sit within ``tolerance`` of the mean.

    ``items`` is a :class:`Corpus` (chords counted as unique onsets, strata by
    composer), a list of :class:`VltSequence`, or a ``piece_id -> chords``
    mapping. Each restart shuffles within strata and deals round-robin, then
    swaps same-stratum pieces between folds while that lowers the squared
    deviation of fold totals. The first assignment meeting the tolerance wins.
    """
    if tolerance <= 0:
        raise ValueError("tolerance must be positive")
    sizes, strata = _sizes_and_strata(items, strata)
    if n_folds < 2 or len(sizes) < n_folds:
        raise ValueError(f"need at least {n_folds} pieces for {n_folds} folds, have {len(sizes)}")
    pids = sorted(sizes)
    size = np.array([sizes[p] for p in pids], dtype=np.int64)
    labels = sorted(set(strata.values()))
    groups = [np.array([j for j, p in enumerate(pids) if strata[p] == lab]) for lab in labels]
    mean = size.sum() / n_folds
    limit = tolerance * mean
    rng = np.random.default_rng(seed)

    for _ in range(max_restarts):
        fold = np.empty(len(pids), dtype=np.int64)
        cursor = 0
        for g in groups:
            order = rng.permutation(g)
            fold[order] = (cursor + np.arange(len(order))) % n_folds
            cursor = (cursor + len(order)) % n_folds
        totals = np.bincount(fold, weights=size, minlength=n_folds).astype(np.int64)
        while np.abs(totals - mean).max() > limit:
            best = None
            for g in groups:
                fa = fold[g][:, None]
                fb = fold[g][None, :]
                d = size[g][None, :] - size[g][:, None]
                gain = 2 * d * (totals[fa] - totals[fb]) + 2 * d * d
                gain = np.where(fa != fb, gain, 0)
                a, b = np.unravel_index(np.argmin(gain), gain.shape)
                if gain[a, b] < 0 and (best is None or gain[a, b] < best[0]):
                    best = (gain[a, b], g[a], g[b])
            if best is None:
                break
            _, a, b = best
            delta = size[b] - size[a]
            totals[fold[a]] += delta
            totals[fold[b]] -= delta
            fold[a], fold[b] = fold[b], fold[a]
        if np.abs(totals - mean).max() <= limit:
            result = FoldAssignment({p: int(f) for p, f in zip(pids, fold)},
                                    [int(t) for t in totals], seed, tolerance)
            problems = result.violations(sizes, strata)
            if problems:
                raise AssertionError("fold search produced an invalid assignment: "
                                     + "; ".join(problems))
            return result
    raise FoldSearchError(
        f"no fold assignment within +/-{tolerance:.1%} of {mean:.1f} chords after "
        f"{max_restarts} restarts; try a larger tolerance or fewer folds")


# ---------------------------------------------------------------------------
# coverage


UNITS = ("tokens", "types")


def _check_unit(unit):
    if unit not in UNITS:
        raise ValueError(f"unit must be one of {UNITS}, got {unit!r}")


def coverage(train_sequences: Sequence[VltSequence], test_sequences: Sequence[VltSequence],
             n: int, skip: SkipSpec, unit: str = "tokens") -> float:
    """Share of the test set's contiguous n-grams whose types occur in training."""
    _check_unit(unit)
    train = build_distribution(train_sequences, n, skip, threads=1)
    test = build_distribution(test_sequences, n, SkipSpec.none(), threads=1)
    if test.n_types == 0:
        raise ValueError(f"test set has no contiguous {n}-grams")
    seen = np.isin(test.keys, train.keys)
    if unit == "types":
        return float(seen.sum() / test.n_types)
    return float(test.values[seen].sum() / test.total_tokens)


@dataclass
class CoverageResult:
    n: int
    skip: SkipSpec
    unit: str
    per_fold: tuple[float, ...]

    @property
    def mean(self) -> float:
        return float(np.mean(self.per_fold))


def coverage_by_fold(sequences: Sequence[VltSequence], folds: FoldAssignment, n: int,
                     skip: SkipSpec, unit: str = "tokens",
                     threads: int | None = None) -> CoverageResult:
    """Coverage of every fold against the union of the other folds.

    Each training key is tagged with a bitmask of the folds it occurs in, so
    all folds are scored from one pass: a test key counts as covered when it
    occurs in some fold other than its own.
    """
    _check_unit(unit)
    n_folds = folds.n_folds
    if n_folds > 62:
        raise ValueError("at most 62 folds supported")
    fold_of = [folds.fold_of[s.piece_id] for s in sequences]

    def per_piece(seq):
        train_keys, _ = _unique_counts(piece_keys(seq, n, skip))
        test_keys = piece_keys(seq, n, SkipSpec.none())
        return train_keys, test_keys

    parts = map_pieces(per_piece, list(sequences), threads)
    train_keys = np.concatenate([p[0] for p in parts])
    bits = np.concatenate([np.full(len(p[0]), 1 << f, dtype=np.int64)
                           for p, f in zip(parts, fold_of)])
    if len(train_keys):
        order = np.argsort(train_keys, kind="stable")
        train_keys, bits = train_keys[order], bits[order]
        starts = np.flatnonzero(np.r_[True, train_keys[1:] != train_keys[:-1]])
        train_keys = train_keys[starts]
        bits = np.bitwise_or.reduceat(bits, starts)

    per_fold = []
    for f in range(n_folds):
        chunks = [p[1] for p, g in zip(parts, fold_of) if g == f]
        keys, counts = _unique_counts(np.concatenate(chunks) if chunks else np.zeros(0))
        if len(keys) == 0:
            raise ValueError(f"fold {f} has no contiguous {n}-grams to test")
        covered = np.zeros(len(keys), dtype=bool)
        if len(train_keys):
            pos = np.minimum(np.searchsorted(train_keys, keys), len(train_keys) - 1)
            covered = (train_keys[pos] == keys) & ((bits[pos] & ~np.int64(1 << f)) != 0)
        if unit == "types":
            per_fold.append(float(covered.sum() / len(keys)))
        else:
            per_fold.append(float(counts[covered].sum() / counts.sum()))
    return CoverageResult(n, skip, unit, tuple(per_fold))


# ---------------------------------------------------------------------------
# Welch t and planned comparisons


def _betacf(a: float, b: float, x: float) -> float:
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    d = 1.0 / (d if abs(d) > tiny else tiny)
    h = d
    for m in range(1, 10000):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > tiny else tiny)
        c = 1.0 + aa / c
        c = c if abs(c) > tiny else tiny
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > tiny else tiny)
        c = 1.0 + aa / c
        c = c if abs(c) > tiny else tiny
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def betainc(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta function I_x(a, b) by Lentz's continued fraction."""
    if not (a > 0 and b > 0):
        raise ValueError("a and b must be positive")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    log_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                 + a * math.log(x) + b * math.log1p(-x))
    if x < (a + 1.0) / (a + b + 2.0):
        return math.exp(log_front) * _betacf(a, b, x) / a
    return 1.0 - math.exp(log_front) * _betacf(b, a, 1.0 - x) / b


def t_two_tailed_p(t: float, df: float) -> float:
    if df <= 0:
        raise ValueError("degrees of freedom must be positive")
    if math.isinf(t):
        return 0.0
    return min(1.0, betainc(df / 2.0, 0.5, df / (df + t * t)))


def welch_t(sample_a: Sequence[float], sample_b: Sequence[float]) -> tuple[float, float, float]:
    """Welch's unequal-variance t statistic, its degrees of freedom and two-tailed p."""
    a = np.asarray(sample_a, dtype=float)
    b = np.asarray(sample_b, dtype=float)
    if len(a) < 2 or len(b) < 2:
        raise ValueError("each sample needs at least two values")
    va = a.var(ddof=1) / len(a)
    vb = b.var(ddof=1) / len(b)
    diff = a.mean() - b.mean()
    if va + vb == 0:
        if diff == 0:
            return 0.0, float(len(a) + len(b) - 2), 1.0
        raise ValueError("both samples are constant with different means; t is undefined")
    t = diff / math.sqrt(va + vb)
    df = (va + vb) ** 2 / (va ** 2 / (len(a) - 1) + vb ** 2 / (len(b) - 1))
    return float(t), float(df), t_two_tailed_p(t, df)


@dataclass
class ComparisonRow:
    level_pair: tuple[str, str]
    t_stat: float
    df: float
    p_raw: float
    p_adjusted_criterion: float

    @property
    def significant(self) -> bool:
        return self.p_raw < self.p_adjusted_criterion


def planned_comparisons(samples: Sequence[Sequence[float]], labels: Sequence[str] | None = None,
                        alpha: float = 0.05) -> list[ComparisonRow]:
    """Backward-difference Welch tests: each level against the one before it."""
    if len(samples) < 2:
        raise ValueError("need at least two levels")
    if len({len(s) for s in samples}) != 1:
        raise ValueError("every level needs the same number of folds")
    labels = list(labels) if labels is not None else [str(j) for j in range(len(samples))]
    criterion = alpha / (len(samples) - 1)
    rows = []
    for j in range(1, len(samples)):
        t, df, p = welch_t(samples[j], samples[j - 1])
        rows.append(ComparisonRow((labels[j], labels[j - 1]), t, df, p, criterion))
    return rows


def skip_families(skips: Sequence[SkipSpec]) -> list[list[SkipSpec]]:
    """Split skip levels into a fixed and a variable family, each led by ``none``."""
    fixed = [s for s in skips if s.mode == "fixed"]
    variable = [s for s in skips if s.mode == "variable"]
    families = [[SkipSpec.none()] + fam for fam in (fixed, variable) if fam]
    return families or [[SkipSpec.none()]]


@dataclass
class CoverageStudy:
    n: int
    unit: str
    folds: FoldAssignment
    results: dict[SkipSpec, CoverageResult] = field(default_factory=dict)
    comparisons: dict[SkipSpec, ComparisonRow] = field(default_factory=dict)


def run_coverage_study(sequences: Sequence[VltSequence], folds: FoldAssignment, n: int,
                       skips: Sequence[SkipSpec], unit: str = "tokens", alpha: float = 0.05,
                       threads: int | None = None) -> CoverageStudy:
    """Per-fold coverage at every skip level plus the planned comparisons."""
    study = CoverageStudy(n, unit, folds)
    levels = [SkipSpec.none()] + [s for s in skips if s.mode != "none"]
    for skip in dict.fromkeys(levels):
        study.results[skip] = coverage_by_fold(sequences, folds, n, skip, unit, threads)
    for family in skip_families(levels):
        if len(family) < 2:
            continue
        rows = planned_comparisons([study.results[s].per_fold for s in family],
                                   [s.label for s in family], alpha)
        for skip, row in zip(family[1:], rows):
            study.comparisons[skip] = row
    return study


