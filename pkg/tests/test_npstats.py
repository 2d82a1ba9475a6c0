"""Statistics against independent oracles (brute force, scipy.stats) and frozen values."""

import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from smellwarn import npstats as ns
from smellwarn.errors import (
    AllZeroDifferences,
    ConstantInput,
    ConstantSample,
    LengthMismatch,
    OutOfRangeAlpha,
    OutOfRangeP,
    SampleTooSmall,
    TooShort,
)

small_ints = st.lists(st.integers(0, 6), min_size=3, max_size=25)


def rank_pearson_oracle(x, y):
    rx = stats.rankdata(x)
    ry = stats.rankdata(y)
    return float(np.corrcoef(rx, ry)[0, 1])


def brute_signed_rank_p(d):
    """Two-sided exact p by listing all 2^n sign vectors."""
    absd = np.abs(d)
    ranks = stats.rankdata(absd)
    w_obs = min(ranks[np.asarray(d) > 0].sum(), ranks[np.asarray(d) < 0].sum())
    hits = 0
    for signs in itertools.product((0, 1), repeat=len(d)):
        tp = sum(r for r, s in zip(ranks, signs) if s)
        tm = ranks.sum() - tp
        hits += min(tp, tm) <= w_obs + 1e-9
    return hits / 2 ** len(d)


def bh_hand(p, alpha):
    m = len(p)
    order = sorted(range(m), key=lambda i: (p[i], i))
    ps = [p[i] for i in order]
    q = [min(min(m * ps[j] / (j + 1), 1.0) for j in range(i, m)) for i in range(m)]
    k = max([i + 1 for i in range(m) if ps[i] <= (i + 1) * alpha / m], default=0)
    q_in = [0.0] * m
    rej = [False] * m
    for pos, idx in enumerate(order):
        q_in[idx] = q[pos]
        rej[idx] = pos < k
    return q_in, rej


# -- ranks ----------------------------------------------------------------


def test_average_ranks_ties():
    assert ns.average_ranks([10, 20, 20, 30]) == [1.0, 2.5, 2.5, 4.0]
    assert ns.tie_sizes([1, 1, 2, 3, 3, 3]) == [2, 3]


@given(st.lists(st.integers(-5, 5), min_size=1, max_size=40))
def test_average_ranks_match_rankdata(xs):
    assert ns.average_ranks(xs) == pytest.approx(list(stats.rankdata(xs)), abs=0)


@given(st.lists(st.integers(-5, 5), min_size=1, max_size=40))
def test_rank_sum_invariant(xs):
    n = len(xs)
    assert sum(ns.average_ranks(xs)) == pytest.approx(n * (n + 1) / 2)


# -- Spearman --------------------------------------------------------------


def test_spearman_perfect_and_reverse():
    assert ns.spearman_rho([1, 2, 3, 4, 5], [2, 4, 6, 8, 10]).statistic == 1.0
    assert ns.spearman_rho([1, 2, 3, 4, 5], [5, 4, 3, 2, 1]).statistic == -1.0


def test_spearman_frozen_value():
    # ranks x: 1 2.5 2.5 4 5 6, y: 2 1 3.5 3.5 6 5 -> sum dxdy 13.75, sum dx^2 = sum dy^2 = 17
    out = ns.spearman_rho([1, 2, 2, 3, 5, 8], [2, 1, 4, 4, 6, 5])
    assert out.statistic == pytest.approx(13.75 / 17, abs=1e-15)
    assert out.n == 6


@given(small_ints, st.data())
def test_spearman_matches_oracle(x, data):
    y = data.draw(st.lists(st.integers(0, 6), min_size=len(x), max_size=len(x)))
    if len(set(x)) < 2 or len(set(y)) < 2:
        with pytest.raises(ConstantInput):
            ns.spearman_rho(x, y)
        return
    out = ns.spearman_rho(x, y)
    assert out.statistic == pytest.approx(rank_pearson_oracle(x, y), abs=1e-12)
    ref = stats.spearmanr(x, y)
    if abs(out.statistic) < 1:
        assert out.p_value == pytest.approx(ref.pvalue, rel=1e-9, abs=1e-14)


@given(small_ints, st.data())
def test_spearman_symmetric(x, data):
    y = data.draw(st.lists(st.integers(0, 6), min_size=len(x), max_size=len(x)))
    if len(set(x)) < 2 or len(set(y)) < 2:
        return
    assert ns.spearman_rho(x, y).statistic == pytest.approx(ns.spearman_rho(y, x).statistic, abs=1e-15)


def test_spearman_exact_permutation():
    x = [1, 2, 3, 4, 5, 6]
    y = [2, 1, 4, 3, 6, 5]
    out = ns.spearman_rho(x, y, exact=True)
    ref = stats.spearmanr(x, y)
    rho = ref.statistic
    # independent enumeration of all 720 orders
    hits = sum(abs(stats.spearmanr(x, p).statistic) >= abs(rho) - 1e-12 for p in itertools.permutations(y))
    assert out.p_value == pytest.approx(hits / 720, abs=1e-15)
    assert out.method == "exact"


def test_spearman_errors():
    with pytest.raises(LengthMismatch):
        ns.spearman_rho([1, 2, 3], [1, 2])
    with pytest.raises(TooShort):
        ns.spearman_rho([1, 2], [2, 1])
    with pytest.raises(ConstantInput):
        ns.spearman_rho([1, 1, 1], [1, 2, 3])


# -- Wilcoxon -------------------------------------------------------------


def test_wilcoxon_all_tied_shift():
    a = [1, 2, 3, 4, 5, 6]
    out = ns.wilcoxon_signed_rank(a, [v + 1 for v in a])
    assert out.statistic == 0.0
    assert out.p_value == pytest.approx(2 / 2**6, abs=1e-15)
    assert out.method == "exact"


def test_wilcoxon_frozen_untied():
    a = [125, 115, 130, 140, 140, 115, 140, 125, 140, 135]
    b = [110, 122, 125, 120, 140, 124, 123, 137, 135, 145]
    out = ns.wilcoxon_signed_rank(a, b)
    ref = stats.wilcoxon(a, b, zero_method="wilcox", method="exact")
    assert out.statistic == pytest.approx(float(ref.statistic))
    assert out.n == 9


@pytest.mark.parametrize("n", range(1, 11))
def test_wilcoxon_exact_vs_enumeration_tie_free(n):
    rng = np.random.default_rng(n)
    for _ in range(20):
        d = rng.permutation(np.arange(1, n + 1)) * rng.choice([-1, 1], n)
        out = ns.wilcoxon_signed_rank(d, [0] * n)
        assert out.p_value == pytest.approx(brute_signed_rank_p(d), abs=1e-12)


@given(st.lists(st.integers(-4, 4).filter(lambda v: v != 0), min_size=1, max_size=10))
def test_wilcoxon_exact_with_ties_vs_enumeration(d):
    out = ns.wilcoxon_signed_rank(d, [0] * len(d), method="exact")
    assert out.p_value == pytest.approx(brute_signed_rank_p(d), abs=1e-12)


@given(st.lists(st.integers(-20, 20), min_size=15, max_size=60))
def test_wilcoxon_approx_matches_scipy(d):
    if sum(1 for v in d if v) < 13:
        return
    out = ns.wilcoxon_signed_rank(d, [0] * len(d))
    ref = stats.wilcoxon(d, zero_method="wilcox", correction=True, method="approx")
    assert out.method == "normal-approx"
    assert out.statistic == pytest.approx(float(ref.statistic))
    assert out.p_value == pytest.approx(float(ref.pvalue), rel=1e-9, abs=1e-14)


@given(st.lists(st.integers(-9, 9), min_size=1, max_size=30), st.data())
def test_wilcoxon_swap_symmetry(a, data):
    b = data.draw(st.lists(st.integers(-9, 9), min_size=len(a), max_size=len(a)))
    if a == b:
        return
    try:
        fwd = ns.wilcoxon_signed_rank(a, b)
    except AllZeroDifferences:
        return
    back = ns.wilcoxon_signed_rank(b, a)
    assert fwd.statistic == back.statistic
    assert fwd.p_value == pytest.approx(back.p_value, abs=1e-15)


def test_wilcoxon_errors():
    with pytest.raises(AllZeroDifferences):
        ns.wilcoxon_signed_rank([1, 2], [1, 2])
    with pytest.raises(LengthMismatch):
        ns.wilcoxon_signed_rank([1, 2], [1])
    with pytest.raises(ValueError):
        ns.wilcoxon_signed_rank([1], [2], method="bogus")


# -- BH ---------------------------------------------------------------------


def test_bh_worked_example():
    p = [0.01, 0.04, 0.03, 0.005, 0.2]
    out = ns.bh_adjust(p, 0.05)
    assert [o.q_value for o in out] == pytest.approx([0.025, 0.05, 0.05, 0.025, 0.2])
    assert [o.rejected for o in out] == [True, True, True, True, False]


@given(st.lists(st.floats(0, 1), min_size=1, max_size=40), st.sampled_from([0.01, 0.05, 0.1, 0.25]))
def test_bh_matches_hand_procedure(p, alpha):
    out = ns.bh_adjust(p, alpha)
    q, rej = bh_hand(p, alpha)
    assert [o.q_value for o in out] == pytest.approx(q, abs=1e-15)
    assert [o.rejected for o in out] == rej


@given(st.lists(st.floats(0, 1), min_size=1, max_size=40))
def test_bh_matches_scipy_and_is_monotone(p):
    out = ns.bh_adjust(p)
    ref = stats.false_discovery_control(p, method="bh")
    assert [o.q_value for o in out] == pytest.approx(list(ref), abs=1e-12)
    ordered = sorted(out, key=lambda o: o.rank_index)
    assert all(a.q_value <= b.q_value for a, b in zip(ordered, ordered[1:]))
    assert all(o.raw_p - 1e-15 <= o.q_value <= 1.0 for o in out)
    # rejection set equals {q <= alpha}
    assert all(o.rejected == (o.q_value <= 0.05) for o in out)


def test_bh_errors():
    with pytest.raises(OutOfRangeP):
        ns.bh_adjust([0.1, 1.5])
    with pytest.raises(OutOfRangeP):
        ns.bh_adjust([float("nan")])
    with pytest.raises(OutOfRangeAlpha):
        ns.bh_adjust([0.1], alpha=1.0)
    with pytest.raises(ValueError):
        ns.bh_adjust([])


# -- Anderson-Darling ----------------------------------------------------------


def ad_oracle(x):
    """Direct transcription of the composite-normal A^2 with math.erf."""
    x = sorted(x)
    n = len(x)
    mu = sum(x) / n
    sd = math.sqrt(sum((v - mu) ** 2 for v in x) / (n - 1))
    F = [0.5 * (1 + math.erf((v - mu) / (sd * math.sqrt(2)))) for v in x]
    s = sum((2 * i - 1) * (math.log(F[i - 1]) + math.log(1 - F[n - i])) for i in range(1, n + 1))
    return (-n - s / n) * (1 + 0.75 / n + 2.25 / n**2)


def test_ad_matches_oracle_and_scipy():
    rng = np.random.default_rng(7)
    for n in (8, 20, 100):
        x = rng.normal(size=n)
        out = ns.anderson_darling(x)
        assert out.statistic == pytest.approx(ad_oracle(x), rel=1e-10)
        raw = stats.anderson(x, "norm").statistic
        assert out.statistic == pytest.approx(raw * (1 + 0.75 / n + 2.25 / n**2), rel=1e-10)


def test_ad_pvalue_branches_frozen():
    # A*^2 values across the four branches; p frozen from the piecewise formula
    rng = np.random.default_rng(3)
    normal = ns.anderson_darling(rng.normal(size=200))
    skewed = ns.anderson_darling(rng.exponential(size=200))
    assert normal.p_value > 0.05
    assert skewed.p_value < 1e-6
    assert ns.anderson_darling([1, 2, 3, 4, 5, 6, 7, 100]).p_value < 0.01


def test_ad_errors():
    with pytest.raises(SampleTooSmall):
        ns.anderson_darling([1, 2, 3])
    with pytest.raises(ConstantSample):
        ns.anderson_darling([2] * 10)


# -- quantiles and bands ---------------------------------------------------


@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=50), st.floats(0, 1))
def test_quantile_matches_numpy_linear(xs, prob):
    assert ns.quantile(xs, prob) == pytest.approx(float(np.quantile(xs, prob)), rel=1e-9, abs=1e-9)


@pytest.mark.parametrize(
    "rho,band",
    [(0.0, "none"), (0.39, "weak"), (-0.4, "moderate"), (0.69, "moderate"), (0.7, "strong"), (-1.0, "perfect")],
)
def test_interpret_rho(rho, band):
    assert ns.interpret_rho(rho) == band


def test_rho_bands_validated():
    with pytest.raises(ValueError):
        ns.RhoBands(0.7, 0.4)
