import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special

from qarrow import boolfn
from qarrow.boolfn import SymmetricThreshold
from qarrow.errors import HypothesisFailed, InvalidCorrelation
from qarrow.gaussian import (
    GaussianTripleSpec,
    ThresholdFunction,
    check_gaussian_arrow_bound,
    cholesky3,
    disagreement_probabilities,
    gaussian_paradox_mc,
    gaussian_paradox_probability,
    hypercube_vs_gaussian_drift,
    norm_sf,
    norm_threshold,
    pair_agreement,
    sample_triple,
    sample_triples,
    sign_correlation,
)
from qarrow.hyper import hc_bound

MAJORITY_LIMIT = 0.25 - 1.5 / math.pi * math.asin(1 / 3)


def owen_orthant(h, k, rho):
    """P[N1 > h, N2 > k] through Owen's T function (h, k nonzero)."""
    # P[N1 > h, N2 > k] = P[N1 < -h, N2 < -k]
    h, k = -h, -k
    s = math.sqrt(1 - rho * rho)
    ah = (k - rho * h) / (h * s)
    ak = (h - rho * k) / (k * s)
    delta = 0.0 if h * k > 0 else 0.5
    return 0.5 * special.ndtr(h) + 0.5 * special.ndtr(k) - special.owens_t(h, ah) - special.owens_t(k, ak) - delta


# -- sampling ------------------------------------------------------------------


@pytest.mark.parametrize("rho", [0.0, -1 / 3, -0.5, 0.6])
def test_sampler_correlations(rho):
    x = sample_triples(GaussianTripleSpec(1, rho), np.random.default_rng(0), 1_000_000)[:, :, 0]
    c = np.corrcoef(x.T)
    # standard error of a sample correlation is about (1 - rho^2) / sqrt(N)
    tol = 5 * max(1 - rho * rho, 0.1) / math.sqrt(len(x))
    for i, j in [(0, 1), (1, 2), (0, 2)]:
        assert abs(c[i, j] - rho) <= tol
    assert np.allclose(x.var(axis=0), 1, atol=0.01)


def test_boundary_sampler_sums_to_zero():
    x = sample_triples(GaussianTripleSpec(3, -0.5), np.random.default_rng(1), 10_000)
    assert np.max(np.abs(x.sum(axis=1))) < 1e-12


def test_cholesky_reproduces_matrix():
    for rho in (-0.5, -1 / 3, 0.0, 0.4, 1.0):
        L = cholesky3(rho)
        M = np.full((3, 3), rho) + (1 - rho) * np.eye(3)
        assert np.allclose(L @ L.T, M, atol=1e-12)


def test_invalid_correlation():
    with pytest.raises(InvalidCorrelation):
        GaussianTripleSpec(1, -0.6)
    with pytest.raises(InvalidCorrelation):
        pair_agreement(0.1, 0.2, 1.5)


def test_sample_triple_is_deterministic_per_stream():
    spec = GaussianTripleSpec(4)
    a = sample_triple(spec, np.random.default_rng(9))
    b = sample_triple(spec, np.random.default_rng(9))
    assert all(np.array_equal(u, v) for u, v in zip(a, b))
    assert a[0].shape == (4,)


# -- orthant probabilities --------------------------------------------------------


def test_pair_agreement_examples():
    assert pair_agreement(0, 0, 0) == 0.25
    assert pair_agreement(0, 0, 1) == 0.5
    assert pair_agreement(0, 0, -1 / 3) == pytest.approx(0.25 - math.asin(1 / 3) / (2 * math.pi), abs=1e-12)
    assert pair_agreement(0, 0, -1 / 3) == pytest.approx(0.19591, abs=1e-5)


def test_pair_agreement_infinite_thresholds():
    assert pair_agreement(-math.inf, 0.7, 0.3) == pytest.approx(norm_sf(0.7))
    assert pair_agreement(math.inf, 0.7, 0.3) == 0
    assert pair_agreement(0.2, 0.5, 1.0) == pytest.approx(norm_sf(0.5))
    assert pair_agreement(0.2, 0.5, -1.0) == 0
    assert pair_agreement(-1.0, -1.0, -1.0) == pytest.approx(special.ndtr(1) - special.ndtr(-1))


@settings(max_examples=150, deadline=None)
@given(
    st.floats(-3, 3).filter(lambda t: abs(t) > 1e-3),
    st.floats(-3, 3).filter(lambda t: abs(t) > 1e-3),
    st.floats(-0.99, 0.99),
)
def test_pair_agreement_matches_owens_t(t1, t2, rho):
    assert abs(pair_agreement(t1, t2, rho) - owen_orthant(t1, t2, rho)) <= 1e-10


def test_sign_correlation_zero_thresholds():
    for rho in np.linspace(-1, 1, 11):
        assert sign_correlation(0, 0, rho) == pytest.approx(2 / math.pi * math.asin(rho), abs=1e-12)
    # general formula agrees with the closed form at small nonzero thresholds
    assert sign_correlation(1e-9, -1e-9, -1 / 3) == pytest.approx(2 / math.pi * math.asin(-1 / 3), abs=1e-8)


def test_norm_threshold_matches_mean():
    for m in (-0.9, -0.2, 0.0, 0.5):
        assert ThresholdFunction(norm_threshold(m)).mean == pytest.approx(m, abs=1e-12)
    assert norm_threshold(1) == -math.inf and norm_threshold(-1) == math.inf


# -- paradox probability ----------------------------------------------------------------


def test_symmetric_thresholds_give_majority_limit():
    f = ThresholdFunction(0.0)
    p = gaussian_paradox_probability(f, f, f)
    assert p == pytest.approx(MAJORITY_LIMIT, abs=1e-12)
    assert p == pytest.approx(0.0877398, abs=1e-7)


def test_one_constant_function():
    one, f = ThresholdFunction(-math.inf), ThresholdFunction(0.0)
    p = gaussian_paradox_probability(one, f, f)
    assert p == pytest.approx(0.25 * (1 + 2 / math.pi * math.asin(-1 / 3)), abs=1e-12)
    assert p >= 0
    mc = gaussian_paradox_mc(one, f, f, samples=400_000, seed=3)
    assert mc.covers(p)


def test_independent_blocks():
    f = ThresholdFunction(0.0)
    assert gaussian_paradox_probability(f, f, f, GaussianTripleSpec(1, 0.0)) == pytest.approx(0.25, abs=1e-15)


def test_closed_form_matches_monte_carlo_at_ten_million():
    f = ThresholdFunction(0.0)
    est = gaussian_paradox_mc(f, f, f, samples=10_000_000, seed=5, threads=4)
    assert est.covers(MAJORITY_LIMIT)


def test_closed_form_matches_monte_carlo_shifted_and_weighted():
    spec = GaussianTripleSpec(3, -1 / 3)
    w = tuple(np.array([3.0, 1.0, 1.0]) / math.sqrt(11))
    fs = (ThresholdFunction(0.3), ThresholdFunction(-0.4, w), ThresholdFunction(0.1))
    est = gaussian_paradox_mc(*fs, spec=spec, samples=1_000_000, seed=8)
    assert est.covers(gaussian_paradox_probability(*fs, spec=spec))


def test_paradox_increases_with_rho_at_zero_thresholds():
    f = ThresholdFunction(0.0)
    rhos = np.linspace(-0.5, 0.0, 21)
    vals = [gaussian_paradox_probability(f, f, f, GaussianTripleSpec(1, r)) for r in rhos]
    assert np.all(np.diff(vals) > 0)
    assert vals[0] == pytest.approx(0.0, abs=1e-12)


# -- the Gaussian Arrow bound ---------------------------------------------------------------


def test_bound_holds_for_symmetric_thresholds():
    f = ThresholdFunction(0.0)
    worst = max(disagreement_probabilities(f, f, f).values())
    assert worst == pytest.approx(0.25 + math.asin(1 / 3) / (2 * math.pi), abs=1e-12)
    rep = check_gaussian_arrow_bound(f, f, f, epsilon=0.69)
    assert rep.holds and rep.bound == pytest.approx(0.345**18)


def test_full_epsilon_fails_hypothesis_for_symmetric_thresholds():
    f = ThresholdFunction(0.0)
    with pytest.raises(HypothesisFailed):
        check_gaussian_arrow_bound(f, f, f, epsilon=1.0)


def test_shifted_thresholds_fail_hypothesis():
    with pytest.raises(HypothesisFailed) as info:
        check_gaussian_arrow_bound(ThresholdFunction(-3.0), ThresholdFunction(3.0), ThresholdFunction(0.0), epsilon=0.1)
    assert max(info.value.details.values()) > 0.9


def test_random_threshold_sweep():
    rng = np.random.default_rng(11)
    checked = 0
    while checked < 100:
        fs = [ThresholdFunction(float(t)) for t in rng.uniform(-1, 1, 3)]
        try:
            rep = check_gaussian_arrow_bound(*fs, epsilon=0.5)
        except HypothesisFailed:
            continue
        assert rep.holds
        checked += 1


def test_exponent_at_inverse_root_three():
    rho = 1 / math.sqrt(3)
    assert 2 / (1 - rho) <= 6
    assert hc_bound(0.5, rho) >= 0.5**6


# -- cube versus Gaussian ---------------------------------------------------------------------


def test_majority_drift_shrinks():
    gaps = []
    for n in (11, 51, 101):
        f = SymmetricThreshold(n, 0)
        gaps.append(hypercube_vs_gaussian_drift(f, f, -1 / 3).gap)
    assert gaps[0] > gaps[1] > gaps[2]
    assert gaps[2] <= 0.02


def test_symmetric_path_matches_dense_tables():
    n = 11
    for t in (0, 2, -4):
        f = SymmetricThreshold(n, t)
        g = SymmetricThreshold(n, 1)
        a = hypercube_vs_gaussian_drift(f, g, -1 / 3)
        b = hypercube_vs_gaussian_drift(f.to_table(), g.to_table(), -1 / 3)
        assert a.cube == pytest.approx(b.cube, abs=1e-12)
        assert a.max_influence == pytest.approx(b.max_influence, abs=1e-12)


def test_dictator_drift_is_reported():
    d = boolfn.dictator(5, 2)
    for rho in (-1 / 3, 0.5):
        rep = hypercube_vs_gaussian_drift(d, d, rho)
        assert rep.max_influence == 1
        assert rep.gap == pytest.approx(abs(rho - 2 / math.pi * math.asin(rho)), abs=1e-12)


def test_zero_correlation_is_a_product():
    rng = np.random.default_rng(12)
    f, g = boolfn.random_boolean(6, rng, 0.7), boolfn.random_boolean(6, rng, 0.4)
    rep = hypercube_vs_gaussian_drift(f, g, 0.0)
    assert rep.cube == pytest.approx(f.mean * g.mean, abs=1e-12)
    assert rep.gap <= 1e-10
