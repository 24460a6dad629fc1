"""Correlated Gaussian triples, half-space functions and orthant probabilities.

Each of the three coordinates ``N_i`` is an ``n``-vector of standard normals;
entry ``l`` of ``N_i`` and of ``N_j`` have correlation ``rho`` and distinct
entries are independent.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, special
from scipy.stats import binom

from . import montecarlo
from .boolfn import BooleanFunction, SymmetricThreshold, correlated_expectation, influences
from .errors import HypothesisFailed, InvalidCorrelation, ValidationError

QUAD_TOL = 1e-12


def norm_sf(t: float) -> float:
    """P[N > t] for a standard normal, exact at +-inf."""
    return float(special.ndtr(-t))


def norm_threshold(mean: float) -> float:
    """Threshold t with E[sgn(N - t)] = mean."""
    if mean >= 1:
        return -math.inf
    if mean <= -1:
        return math.inf
    return float(-special.ndtri((1 + mean) / 2))


def cholesky3(rho: float) -> np.ndarray:
    """Lower factor of the 3x3 matrix with unit diagonal and off-diagonals ``rho``.

    Written out by hand so the singular ends rho = -1/2 and rho = 1 still work.
    """
    rho = float(rho)
    l22 = math.sqrt(max(0.0, 1 - rho * rho))
    l32 = (rho - rho * rho) / l22 if l22 > 0 else 0.0
    l33 = math.sqrt(max(0.0, 1 - rho * rho - l32 * l32))
    return np.array([[1.0, 0.0, 0.0], [rho, l22, 0.0], [rho, l32, l33]])


@dataclass(frozen=True)
class GaussianTripleSpec:
    n: int = 1
    rho: float = -1 / 3

    def __post_init__(self):
        if self.n < 1:
            raise ValidationError(f"dimension must be positive, got {self.n}")
        if not -0.5 - 1e-15 <= self.rho <= 1 + 1e-15:
            raise InvalidCorrelation(f"rho={self.rho}: the block matrix is PSD only for -1/2 <= rho <= 1")

    @property
    def factor(self) -> np.ndarray:
        return cholesky3(self.rho)


def sample_triples(spec: GaussianTripleSpec, stream: np.random.Generator, size: int) -> np.ndarray:
    """Array of shape (size, 3, n)."""
    z = stream.standard_normal((size, 3, spec.n))
    return np.einsum("ij,sjn->sin", spec.factor, z)


def sample_triple(spec: GaussianTripleSpec, stream: np.random.Generator):
    x = sample_triples(spec, stream, 1)[0]
    return x[0], x[1], x[2]


@dataclass(frozen=True)
class ThresholdFunction:
    """x -> sgn(<w, x> - t) with unit-norm w (uniform weights when omitted); +1 on ties.

    ``t = -inf`` and ``t = +inf`` are the constants +1 and -1.
    """

    t: float = 0.0
    weights: tuple[float, ...] | None = None

    def __post_init__(self):
        if math.isnan(self.t):
            raise ValidationError("threshold is NaN")
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=np.float64)
            if abs(float(w @ w) - 1) > 1e-9:
                raise ValidationError("weights must have unit L2 norm")

    def direction(self, n: int) -> np.ndarray:
        if self.weights is None:
            return np.full(n, 1 / math.sqrt(n))
        w = np.asarray(self.weights, dtype=np.float64)
        if w.size != n:
            raise ValidationError(f"{w.size} weights for dimension {n}")
        return w

    @property
    def mean(self) -> float:
        return 2 * norm_sf(self.t) - 1

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        z = x @ self.direction(x.shape[-1])
        return np.where(z >= self.t, 1, -1).astype(np.int8)

    def to_json(self) -> dict:
        t = self.t if math.isfinite(self.t) else ("inf" if self.t > 0 else "-inf")
        return {"t": t, "weights": list(self.weights) if self.weights is not None else None}


def pair_agreement(t1: float, t2: float, rho: float) -> float:
    """P[N1 > t1, N2 > t2] for standard normals with correlation ``rho``."""
    rho = float(rho)
    if abs(rho) > 1 + 1e-15:
        raise InvalidCorrelation(f"|rho| = {abs(rho)} > 1")
    rho = min(1.0, max(-1.0, rho))
    if t1 == math.inf or t2 == math.inf:
        return 0.0
    if t1 == -math.inf:
        return norm_sf(t2)
    if t2 == -math.inf:
        return norm_sf(t1)
    if rho == 1.0:
        return norm_sf(max(t1, t2))
    if rho == -1.0:
        return max(0.0, float(special.ndtr(-t2) - special.ndtr(t1)))
    if t1 == 0 and t2 == 0:
        return 0.25 + math.asin(rho) / (2 * math.pi)
    s = math.sqrt(1 - rho * rho)

    def integrand(x):
        return math.exp(-x * x / 2) / math.sqrt(2 * math.pi) * special.ndtr((rho * x - t2) / s)

    # integrate from the larger of t1 and a point where the density is negligible
    upper = max(t1, 0.0) + 40.0
    val, _ = integrate.quad(integrand, t1, upper, epsabs=QUAD_TOL, epsrel=QUAD_TOL, limit=200)
    return float(min(max(val, 0.0), 1.0))


def sign_correlation(t1: float, t2: float, rho: float) -> float:
    """E[sgn(N1 - t1) sgn(N2 - t2)] = 4 P[A and B] - 2 P[A] - 2 P[B] + 1."""
    if t1 == 0 and t2 == 0 and abs(rho) <= 1:
        return 2 / math.pi * math.asin(max(-1.0, min(1.0, rho)))
    both = pair_agreement(t1, t2, rho)
    return 4 * both - 2 * norm_sf(t1) - 2 * norm_sf(t2) + 1


def _effective_rho(f: ThresholdFunction, g: ThresholdFunction, spec: GaussianTripleSpec) -> float:
    return float(spec.rho * (f.direction(spec.n) @ g.direction(spec.n)))


def gaussian_pair_terms(f1, f2, f3, spec: GaussianTripleSpec | None = None) -> dict:
    spec = spec or GaussianTripleSpec()
    fs = (f1, f2, f3)
    out = {}
    for i in range(3):
        f, g = fs[i], fs[(i + 1) % 3]
        out[f"{i + 1}{(i + 1) % 3 + 1}"] = sign_correlation(f.t, g.t, _effective_rho(f, g, spec))
    return out


def gaussian_paradox_probability(f1, f2, f3, spec: GaussianTripleSpec | None = None) -> float:
    """P[f1(N1) = f2(N2) = f3(N3)] = (1 + sum of the three cyclic sign correlations) / 4."""
    terms = gaussian_pair_terms(f1, f2, f3, spec)
    return 0.25 * (1 + math.fsum(terms.values()))


def gaussian_paradox_mc(
    f1, f2, f3, spec: GaussianTripleSpec | None = None, samples: int = 100_000, seed: int = 0, threads: int = 1
) -> montecarlo.Estimate:
    """Monte Carlo estimate of the all-equal probability from full n-dimensional triples."""
    spec = spec or GaussianTripleSpec()

    def draw(stream, size):
        x = sample_triples(spec, stream, size)
        a, b, c = f1(x[:, 0]), f2(x[:, 1]), f3(x[:, 2])
        return np.count_nonzero((a == b) & (b == c))

    hits = montecarlo.count_hits(samples, seed, montecarlo.TAG_GAUSS, draw, threads)
    return montecarlo.Estimate.from_count(hits, samples)


def disagreement_probabilities(f1, f2, f3, spec: GaussianTripleSpec | None = None) -> dict:
    """P[f_i = u, f_{i+1} = -u] for i = 1..3 (cyclically) and u = +-1."""
    spec = spec or GaussianTripleSpec()
    fs = (f1, f2, f3)
    out = {}
    for i in range(3):
        f, g = fs[i], fs[(i + 1) % 3]
        both = pair_agreement(f.t, g.t, _effective_rho(f, g, spec))
        pf, pg = norm_sf(f.t), norm_sf(g.t)
        out[(i + 1, 1)] = pf - both
        out[(i + 1, -1)] = pg - both
    return out


@dataclass
class GaussianArrowReport:
    epsilon: float
    paradox: float
    bound: float
    holds: bool
    hypothesis_max: float
    terms: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "paradox": self.paradox,
            "bound": self.bound,
            "holds": self.holds,
            "hypothesis_max": self.hypothesis_max,
            "terms": self.terms,
        }


def check_gaussian_arrow_bound(f1, f2, f3, epsilon: float, spec: GaussianTripleSpec | None = None, exponent: int = 18):
    """Checks the non-dictatorship hypothesis, then compares the paradox probability with (eps/2)^exponent."""
    spec = spec or GaussianTripleSpec()
    if not 0 < epsilon <= 1:
        raise ValidationError(f"epsilon must lie in (0, 1], got {epsilon}")
    dis = disagreement_probabilities(f1, f2, f3, spec)
    worst = max(dis.values())
    if worst > 1 - epsilon + 1e-12:
        raise HypothesisFailed(
            f"P[f_i = u, f_(i+1) = -u] reaches {worst:.6g} > 1 - eps = {1 - epsilon:.6g}",
            {f"{i},{u:+d}": v for (i, u), v in dis.items()},
        )
    p = gaussian_paradox_probability(f1, f2, f3, spec)
    bound = (epsilon / 2) ** exponent
    return GaussianArrowReport(epsilon, p, bound, p >= bound, worst, gaussian_pair_terms(f1, f2, f3, spec))


# ----------------------------------------------------------------------------
# cube versus Gaussian


def _symmetric_cube_correlation(f: SymmetricThreshold, g: SymmetricThreshold, rho: float) -> float:
    """E[f(X) g(Y)] with Y_l = X_l w.p. (1+rho)/2, else -X_l, by summing over agreement counts."""
    n = f.n
    q = (1 + rho) / 2
    total = 0.0
    for m in range(n + 1):
        pm = binom.pmf(m, n, 0.5)
        if pm == 0:
            continue
        fx = 1 if 2 * m - n > f.threshold else -1
        a = np.arange(m + 1)
        b = np.arange(n - m + 1)
        pa = binom.pmf(a, m, q)
        pb = binom.pmf(b, n - m, q)
        sy = (2 * a[:, None] - m) + (n - m - 2 * b[None, :])
        gy = np.where(sy > g.threshold, 1.0, -1.0)
        total += float(pm) * fx * float(pa @ gy @ pb)
    return total


def _symmetric_mean(f: SymmetricThreshold) -> float:
    m = np.arange(f.n + 1)
    return float(binom.pmf(m, f.n, 0.5) @ np.where(2 * m - f.n > f.threshold, 1.0, -1.0))


def _symmetric_max_influence(f: SymmetricThreshold) -> float:
    # flipping x_i matters iff the sum of the others lies in (t - 1, t + 1]
    others = 2 * np.arange(f.n) - (f.n - 1)
    hit = (others > f.threshold - 1) & (others <= f.threshold + 1)
    return float(binom.pmf(np.arange(f.n), f.n - 1, 0.5)[hit].sum())


@dataclass
class DriftReport:
    cube: float
    gaussian: float
    gap: float
    max_influence: float
    rho: float

    def to_json(self) -> dict:
        return {"cube": self.cube, "gaussian": self.gaussian, "gap": self.gap, "max_influence": self.max_influence, "rho": self.rho}


def hypercube_vs_gaussian_drift(f, g, rho: float) -> DriftReport:
    """Compare E[f(X) g(Y)] on rho-correlated cubes with its half-space Gaussian counterpart.

    The Gaussian functions are thresholds of one shared direction with their
    means matched to f and g, so their correlation is ``rho``.
    """
    if isinstance(f, SymmetricThreshold) and isinstance(g, SymmetricThreshold):
        cube = _symmetric_cube_correlation(f, g, rho)
        mf, mg = _symmetric_mean(f), _symmetric_mean(g)
        inf = max(_symmetric_max_influence(f), _symmetric_max_influence(g))
    else:
        f = f.to_table() if isinstance(f, SymmetricThreshold) else f
        g = g.to_table() if isinstance(g, SymmetricThreshold) else g
        if not isinstance(f, BooleanFunction) or not isinstance(g, BooleanFunction):
            raise ValidationError("drift needs Boolean functions")
        cube = float(correlated_expectation(f, g, rho))
        mf, mg = f.mean, g.mean
        inf = float(max(influences(f).max(initial=0), influences(g).max(initial=0)))
    gauss = sign_correlation(norm_threshold(mf), norm_threshold(mg), rho)
    return DriftReport(float(cube), gauss, float(abs(cube - gauss)), inf, float(rho))
