"""Kruskal-Wallis omnibus test, Conover-Iman post-hoc comparisons and
Holm-Bonferroni step-down correction."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import special

from .errors import SurprisalLabError


@dataclass(frozen=True)
class TestResult:
    statistic: float
    df: int
    p_value: float
    group_sizes: tuple[int, ...]


@dataclass(frozen=True)
class PairwiseEntry:
    pair: tuple[int, int]
    raw_p: float
    adjusted_p: float
    reject: bool

    @property
    def stars(self) -> str:
        return significance_stars(self.adjusted_p)


@dataclass
class ConoverResult:
    p_values: np.ndarray  # symmetric k x k, ones on the diagonal
    t_values: np.ndarray
    df: int
    notes: list[str] = field(default_factory=list)

    def pairs(self) -> list[tuple[tuple[int, int], float]]:
        k = self.p_values.shape[0]
        return [((i, j), float(self.p_values[i, j])) for i, j in itertools.combinations(range(k), 2)]


def chi2_sf(x: float, df: int) -> float:
    if x <= 0:
        return 1.0
    return float(special.gammaincc(df / 2.0, x / 2.0))


def t_sf(t: float, df: int) -> float:
    """Upper tail P(T > t) of Student's t."""
    if math.isinf(t):
        return 0.0 if t > 0 else 1.0
    tail = 0.5 * float(special.betainc(df / 2.0, 0.5, df / (df + t * t)))
    return tail if t >= 0 else 1.0 - tail


def significance_stars(p: float) -> str:
    for threshold, stars in ((1e-4, "****"), (1e-3, "***"), (1e-2, "**"), (5e-2, "*")):
        if p < threshold:
            return stars
    return "ns"


def _pooled_ranks(groups: Sequence[Sequence[float]]):
    if len(groups) < 2:
        raise SurprisalLabError("need at least two groups")
    arrays = [np.asarray(g, dtype=float).ravel() for g in groups]
    for i, g in enumerate(arrays):
        if g.size == 0:
            raise SurprisalLabError(f"group {i} is empty")
    pooled = np.concatenate(arrays)
    order = np.argsort(pooled, kind="mergesort")
    ranks = np.empty(pooled.size)
    sorted_vals = pooled[order]
    # average ranks over tie blocks
    boundaries = np.flatnonzero(np.diff(sorted_vals)) + 1
    starts = np.concatenate(([0], boundaries))
    ends = np.concatenate((boundaries, [pooled.size]))
    tie_sizes = ends - starts
    for s, e in zip(starts, ends):
        ranks[order[s:e]] = (s + e + 1) / 2.0
    sizes = np.array([g.size for g in arrays])
    labels = np.repeat(np.arange(len(arrays)), sizes)
    return ranks, labels, sizes, tie_sizes


def _h_statistic(ranks, labels, sizes, tie_sizes) -> float:
    n = ranks.size
    sums = np.bincount(labels, weights=ranks, minlength=sizes.size)
    h = 12.0 / (n * (n + 1)) * np.sum(sums**2 / sizes) - 3.0 * (n + 1)
    correction = 1.0 - np.sum(tie_sizes**3 - tie_sizes) / (n**3 - n)
    if correction <= 0:
        return 0.0
    return max(0.0, float(h / correction))


def kruskal_wallis(groups: Sequence[Sequence[float]]) -> TestResult:
    """H statistic with tie correction; p from the chi-square tail with
    k - 1 degrees of freedom."""
    ranks, labels, sizes, ties = _pooled_ranks(groups)
    h = _h_statistic(ranks, labels, sizes, ties)
    df = len(sizes) - 1
    p = 1.0 if h == 0.0 else chi2_sf(h, df)
    return TestResult(h, df, p, tuple(int(s) for s in sizes))


def conover_t_matrix(ranks, labels, sizes, tie_sizes) -> tuple[np.ndarray, float]:
    """Pairwise Conover-Iman t statistics (|t|) and the pooled variance."""
    n, k = ranks.size, sizes.size
    h = _h_statistic(ranks, labels, sizes, tie_sizes)
    s2 = (np.sum(ranks**2) - n * (n + 1) ** 2 / 4.0) / (n - 1)
    means = np.bincount(labels, weights=ranks, minlength=k) / sizes
    diff = np.abs(means[:, None] - means[None, :])
    scale = s2 * max(n - 1 - h, 0.0) / (n - k) * (1.0 / sizes[:, None] + 1.0 / sizes[None, :])
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(diff == 0, 0.0, np.where(scale > 0, diff / np.sqrt(scale), np.inf))
    return t, s2


def conover_posthoc(groups: Sequence[Sequence[float]]) -> ConoverResult:
    """Raw two-sided p-values of the Conover-Iman test on pooled ranks,
    t distribution with N - k degrees of freedom."""
    ranks, labels, sizes, ties = _pooled_ranks(groups)
    n, k = ranks.size, sizes.size
    if n <= k:
        raise SurprisalLabError("Conover test needs more observations than groups")
    df = n - k
    t, s2 = conover_t_matrix(ranks, labels, sizes, ties)
    notes = []
    if s2 <= 0:
        notes.append("zero pooled rank variance: all values tied, p set to 1")
        p = np.ones((k, k))
        t = np.zeros((k, k))
    else:
        p = np.ones((k, k))
        for i, j in itertools.combinations(range(k), 2):
            p[i, j] = p[j, i] = min(1.0, 2.0 * t_sf(float(t[i, j]), df))
    return ConoverResult(p, t, df, notes)


def holm_adjust(p_values: Sequence[float]) -> list[float]:
    """Holm step-down adjusted p-values, returned in the input order."""
    p = np.asarray(p_values, dtype=float)
    m = p.size
    order = np.argsort(p, kind="mergesort")
    adjusted = np.empty(m)
    running = 0.0
    for rank, idx in enumerate(order):
        running = max(running, min(1.0, (m - rank) * p[idx]))
        adjusted[idx] = running
    return adjusted.tolist()


def holm_bonferroni(p_values: Sequence[float], alpha: float = 0.05) -> list[tuple[float, float, bool]]:
    """(raw p, adjusted p, reject) per input, in input order. Sorted p(i)
    (0-based) is compared with alpha / (m - i); rejection stops at the first
    failure."""
    p = [float(x) for x in p_values]
    if any(not 0.0 <= x <= 1.0 for x in p):
        raise SurprisalLabError("p-values must lie in [0, 1]")
    if not 0.0 < alpha < 1.0:
        raise SurprisalLabError("alpha must lie in (0, 1)")
    m = len(p)
    order = sorted(range(m), key=lambda i: p[i])
    reject = [False] * m
    for rank, idx in enumerate(order):
        if p[idx] <= alpha / (m - rank):
            reject[idx] = True
        else:
            break
    adjusted = holm_adjust(p)
    return list(zip(p, adjusted, reject))


def pairwise_report(groups: Sequence[Sequence[float]], alpha: float = 0.05) -> tuple[list[PairwiseEntry], ConoverResult]:
    """Conover post-hoc on all unordered group pairs, Holm-corrected."""
    conover = conover_posthoc(groups)
    pairs = conover.pairs()
    corrected = holm_bonferroni([p for _, p in pairs], alpha)
    entries = [
        PairwiseEntry(pair, raw, adj, rej) for (pair, _), (raw, adj, rej) in zip(pairs, corrected)
    ]
    return entries, conover
