"""Nonparametric statistics.

Anderson-Darling normality (composite case), Spearman's rho with
average-rank tie handling, the Wilcoxon paired signed-rank test (exact
enumeration or tie-corrected normal approximation), Benjamini-Hochberg
adjustment, quartiles and rho interpretation bands.

Only the special functions (normal log-CDF, Student-t tail) come from
``scipy.special``; every statistic is computed here.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import special

from .errors import (
    AllZeroDifferences,
    ConstantInput,
    ConstantSample,
    LengthMismatch,
    OutOfRangeAlpha,
    OutOfRangeP,
    SampleTooSmall,
    TooShort,
)

DEFAULT_ALPHA = 0.05
EXACT_WILCOXON_MAX_N = 12
EXACT_SPEARMAN_MAX_N = 10


@dataclass(frozen=True)
class TestOutcome:
    statistic: float
    p_value: float
    method: str
    n: int = 0

    __test__ = False  # not a pytest class

    def __post_init__(self):
        if not math.isfinite(self.statistic):
            raise ValueError(f"non-finite statistic {self.statistic}")
        if not 0.0 <= self.p_value <= 1.0:
            raise ValueError(f"p-value {self.p_value} outside [0, 1]")


@dataclass(frozen=True)
class AdjustedOutcome:
    raw_p: float
    q_value: float
    rank_index: int
    rejected: bool


def average_ranks(values: Sequence[float]) -> list[float]:
    """1-based ranks; tied values share the mean of the ranks they span."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        mean_rank = (i + j) / 2 + 1
        for k in range(i, j + 1):
            ranks[order[k]] = mean_rank
        i = j + 1
    return ranks


def tie_sizes(values: Sequence[float]) -> list[int]:
    counts: dict[float, int] = {}
    for v in values:
        counts[v] = counts.get(v, 0) + 1
    return [c for c in counts.values() if c > 1]


def normal_sf(z: float) -> float:
    return 0.5 * math.erfc(z / math.sqrt(2.0))


def normal_cdf(z: float) -> float:
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


# -- Anderson-Darling -----------------------------------------------------------


def anderson_darling(sample: Sequence[float]) -> TestOutcome:
    """Normality test with mean and variance estimated from the sample.

    Returns the small-sample adjusted statistic A*^2 = A^2 (1 + 0.75/n + 2.25/n^2)
    and its p-value from the piecewise exponential approximation of
    D'Agostino and Stephens (1986, table 4.9).
    """
    x = np.sort(np.asarray(sample, dtype=float))
    n = x.size
    if n < 8:
        raise SampleTooSmall(f"Anderson-Darling needs n >= 8, got {n}")
    sd = x.std(ddof=1)
    if not sd > 0:
        raise ConstantSample("Anderson-Darling sample is constant")
    z = (x - x.mean()) / sd
    log_cdf = special.log_ndtr(z)
    log_sf = special.log_ndtr(-z)
    i = np.arange(1, n + 1)
    a2 = -n - np.sum((2 * i - 1) * (log_cdf + log_sf[::-1])) / n
    a2 = float(a2)
    adj = a2 * (1 + 0.75 / n + 2.25 / n**2)
    if adj >= 0.6:
        p = math.exp(1.2937 - 5.709 * adj + 0.0186 * adj**2)
    elif adj >= 0.34:
        p = math.exp(0.9177 - 4.279 * adj - 1.38 * adj**2)
    elif adj >= 0.2:
        p = 1 - math.exp(-8.318 + 42.796 * adj - 59.938 * adj**2)
    else:
        p = 1 - math.exp(-13.436 + 101.14 * adj - 223.73 * adj**2)
    return TestOutcome(adj, min(1.0, max(0.0, p)), "stephens-case3", n)


# -- Spearman --------------------------------------------------------------------


def _pearson(a: Sequence[float], b: Sequence[float]) -> float:
    xa = np.asarray(a, dtype=float)
    xb = np.asarray(b, dtype=float)
    da = xa - xa.mean()
    db = xb - xb.mean()
    r = float(np.dot(da, db) / math.sqrt(float(np.dot(da, da)) * float(np.dot(db, db))))
    return max(-1.0, min(1.0, r))


def spearman_rho(x: Sequence[float], y: Sequence[float], exact: bool = False) -> TestOutcome:
    """Spearman's rho as the Pearson correlation of average ranks.

    The two-sided p-value uses t = rho sqrt((n-2)/(1-rho^2)) on n-2 degrees
    of freedom.  ``exact=True`` enumerates all n! rank permutations instead
    (n <= 10 only).
    """
    n = len(x)
    if len(y) != n:
        raise LengthMismatch(f"spearman: lengths {n} and {len(y)} differ")
    if n < 3:
        raise TooShort(f"spearman needs n >= 3, got {n}")
    if min(x) == max(x) or min(y) == max(y):
        raise ConstantInput("spearman: an input vector is constant")
    rx, ry = average_ranks(x), average_ranks(y)
    rho = _pearson(rx, ry)
    if exact:
        return TestOutcome(rho, _spearman_exact_p(rx, ry, rho), "exact", n)
    if abs(rho) >= 1.0:
        p = 0.0
    else:
        t = rho * math.sqrt((n - 2) / (1 - rho * rho))
        p = 2.0 * float(special.stdtr(n - 2, -abs(t)))
    return TestOutcome(rho, min(1.0, p), "t-approx", n)


def _spearman_exact_p(rx: list[float], ry: list[float], rho: float) -> float:
    n = len(rx)
    if n > EXACT_SPEARMAN_MAX_N:
        raise ValueError(f"exact Spearman limited to n <= {EXACT_SPEARMAN_MAX_N}, got {n}")
    a = np.asarray(rx) - np.mean(rx)
    b = np.asarray(ry) - np.mean(ry)
    denom = math.sqrt(float(a @ a) * float(b @ b))
    threshold = abs(rho) - 1e-12
    hits = total = 0
    perms = itertools.permutations(b)
    while True:
        chunk = np.array(list(itertools.islice(perms, 100_000)))
        if chunk.size == 0:
            break
        r = np.abs(chunk @ a) / denom
        hits += int(np.count_nonzero(r >= threshold))
        total += len(chunk)
    return hits / total


# -- Wilcoxon signed rank --------------------------------------------------------


@dataclass(frozen=True)
class SignedRankDetail:
    """Intermediate quantities of a signed-rank test, for diagnostics."""

    differences: list[float]
    ranks: list[float]
    t_plus: float
    t_minus: float
    ties: list[int]


def signed_rank_detail(a: Sequence[float], b: Sequence[float]) -> SignedRankDetail:
    if len(a) != len(b):
        raise LengthMismatch(f"wilcoxon: lengths {len(a)} and {len(b)} differ")
    d = [float(u) - float(v) for u, v in zip(a, b) if float(u) != float(v)]
    if not d:
        raise AllZeroDifferences("wilcoxon: every paired difference is zero")
    absd = [abs(v) for v in d]
    ranks = average_ranks(absd)
    t_plus = sum(r for r, v in zip(ranks, d) if v > 0)
    t_minus = sum(r for r, v in zip(ranks, d) if v < 0)
    return SignedRankDetail(d, ranks, t_plus, t_minus, tie_sizes(absd))


def _exact_signed_rank_p(ranks: list[float], w: float) -> float:
    """P(min(T+, T-) <= w) under random signs, by counting T+ over all 2^n sign vectors."""
    weights = [int(round(2 * r)) for r in ranks]  # average ranks are half-integers
    total = sum(weights)
    counts = np.zeros(total + 1, dtype=np.float64)
    counts[0] = 1.0
    for wt in weights:
        shifted = np.zeros_like(counts)
        shifted[wt:] = counts[: total + 1 - wt]
        counts = counts + shifted
    t = np.arange(total + 1)
    w2 = int(round(2 * w))
    mask = np.minimum(t, total - t) <= w2
    return float(counts[mask].sum() / 2.0 ** len(weights))


def wilcoxon_signed_rank(a: Sequence[float], b: Sequence[float], method: str = "auto") -> TestOutcome:
    """Two-sided Wilcoxon paired signed-rank test.

    Zero differences are dropped and tied absolute differences get average
    ranks.  The statistic is W = min(T+, T-).  ``method="auto"`` enumerates
    all 2^n sign assignments of the observed ranks (exact, conditional on the
    tie pattern) for at most 12 nonzero pairs and otherwise uses the normal
    approximation with tie and continuity corrections.
    """
    detail = signed_rank_detail(a, b)
    n = len(detail.ranks)
    w = float(min(detail.t_plus, detail.t_minus))
    if method not in ("auto", "exact", "approx"):
        raise ValueError(f"unknown method {method!r}")
    use_exact = method == "exact" or (method == "auto" and n <= EXACT_WILCOXON_MAX_N)
    if use_exact:
        return TestOutcome(w, min(1.0, _exact_signed_rank_p(detail.ranks, w)), "exact", n)
    mean = n * (n + 1) / 4
    var = n * (n + 1) * (2 * n + 1) / 24 - sum(t**3 - t for t in detail.ties) / 48
    z = (w - mean + 0.5) / math.sqrt(var)
    p = min(1.0, 2.0 * normal_cdf(min(z, 0.0)))
    return TestOutcome(w, p, "normal-approx", n)


# -- Benjamini-Hochberg ------------------------------------------------------------


def bh_adjust(p_values: Sequence[float], alpha: float = DEFAULT_ALPHA) -> list[AdjustedOutcome]:
    """Benjamini-Hochberg step-up adjustment, results in input order.

    q_(i) = min_{j >= i} min(m p_(j) / j, 1); hypotheses ranked 1..k are
    rejected, k being the largest i with p_(i) <= i alpha / m.
    """
    if not 0.0 < alpha < 1.0:
        raise OutOfRangeAlpha(f"alpha must lie in (0, 1), got {alpha}")
    m = len(p_values)
    if m == 0:
        raise ValueError("bh_adjust needs at least one p-value")
    for p in p_values:
        if not 0.0 <= p <= 1.0:  # also rejects NaN
            raise OutOfRangeP(f"p-value {p} outside [0, 1]")
    order = sorted(range(m), key=lambda i: (p_values[i], i))
    sorted_p = [p_values[i] for i in order]
    q_sorted = [0.0] * m
    running = 1.0
    for pos in range(m - 1, -1, -1):
        running = min(running, m * sorted_p[pos] / (pos + 1), 1.0)
        q_sorted[pos] = running
    k = 0
    for pos in range(m):
        if sorted_p[pos] <= (pos + 1) * alpha / m:
            k = pos + 1
    out: list[Optional[AdjustedOutcome]] = [None] * m
    for pos, idx in enumerate(order):
        out[idx] = AdjustedOutcome(p_values[idx], q_sorted[pos], pos + 1, pos + 1 <= k)
    return out  # type: ignore[return-value]


# -- descriptive helpers ---------------------------------------------------------


def quantile(values: Sequence[float], prob: float) -> float:
    """Linear-interpolation quantile (inclusive definition)."""
    xs = sorted(values)
    if not xs:
        raise ValueError("quantile of an empty sequence")
    h = (len(xs) - 1) * prob
    lo = math.floor(h)
    hi = min(lo + 1, len(xs) - 1)
    return xs[lo] + (h - lo) * (xs[hi] - xs[lo])


def quartiles(values: Sequence[float]) -> tuple[float, float, float]:
    return quantile(values, 0.25), quantile(values, 0.5), quantile(values, 0.75)


@dataclass(frozen=True)
class RhoBands:
    """Lower |rho| bounds of the moderate and strong bands."""

    moderate: float = 0.4
    strong: float = 0.7

    def __post_init__(self):
        if not 0.0 < self.moderate < self.strong < 1.0:
            raise ValueError(f"bands must satisfy 0 < moderate < strong < 1: {self}")


BAND_NAMES = ("none", "weak", "moderate", "strong", "perfect")


def interpret_rho(rho: float, bands: RhoBands = RhoBands()) -> str:
    r = abs(rho)
    if not r <= 1.0:
        raise ValueError(f"|rho| must be <= 1, got {rho}")
    if r == 0.0:
        return "none"
    if r == 1.0:
        return "perfect"
    if r < bands.moderate:
        return "weak"
    if r < bands.strong:
        return "moderate"
    return "strong"
