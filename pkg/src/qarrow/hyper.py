"""Intersection probabilities of correlated cube inputs and the reverse
hypercontractive lower bound ``P[x in B1, y in B2] >= eps^(2/(1-rho))``."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .boolfn import MAX_N, BoundedFunction, correlated_expectation, cube_points
from .errors import InvalidCorrelation, ValidationError
from .gaussian import norm_sf, pair_agreement
from .montecarlo import block_stream

TAG_HYPER = 4
FAMILIES = ("random", "balls", "subcubes", "prefixes")


@dataclass(frozen=True, eq=False)
class IndicatorSet:
    n: int
    members: np.ndarray

    def __post_init__(self):
        if not 0 <= self.n <= MAX_N:
            raise ValidationError(f"n={self.n} outside 0..{MAX_N}")
        m = np.asarray(self.members, dtype=bool).reshape(-1)
        if m.size != 1 << self.n:
            raise ValidationError(f"membership table of length {m.size} does not match n={self.n}")
        m.flags.writeable = False
        object.__setattr__(self, "members", m)

    @property
    def measure(self) -> float:
        return np.count_nonzero(self.members) / self.members.size

    def indicator(self) -> BoundedFunction:
        return BoundedFunction(self.n, self.members.astype(np.float64))

    def negate_coords(self, coords) -> "IndicatorSet":
        """The image of the set under x_i -> -x_i for i in ``coords``."""
        mask = 0
        for i in coords:
            mask |= 1 << int(i)
        return IndicatorSet(self.n, self.members[np.arange(1 << self.n) ^ mask])

    @classmethod
    def full(cls, n: int) -> "IndicatorSet":
        return cls(n, np.ones(1 << n, dtype=bool))

    @classmethod
    def random(cls, n: int, stream: np.random.Generator, density: float = 0.5) -> "IndicatorSet":
        return cls(n, stream.random(1 << n) < density)

    @classmethod
    def hamming_ball(cls, n: int, center, radius: int) -> "IndicatorSet":
        c = np.asarray(center)
        dist = np.count_nonzero(cube_points(n) != c[None, :], axis=1)
        return cls(n, dist <= radius)

    @classmethod
    def subcube(cls, n: int, fixed: dict) -> "IndicatorSet":
        """Points with x_i = fixed[i] for each key i."""
        pts = cube_points(n)
        m = np.ones(1 << n, dtype=bool)
        for i, s in fixed.items():
            m &= pts[:, int(i)] == int(s)
        return cls(n, m)

    @classmethod
    def prefix(cls, n: int, size: int) -> "IndicatorSet":
        """The first ``size`` points in table order."""
        return cls(n, np.arange(1 << n) < size)


def _rho_list(n: int, rho) -> list[float]:
    r = [float(rho)] * n if np.ndim(rho) == 0 else [float(v) for v in rho]
    if len(r) != n:
        raise ValidationError(f"{len(r)} correlations for {n} coordinates")
    if any(abs(v) > 1 for v in r):
        raise InvalidCorrelation("correlations must lie in [-1, 1]")
    return r


def correlated_intersection(B1: IndicatorSet, B2: IndicatorSet, rho) -> float:
    """P[x in B1, y in B2] with uniform x, y and E[x_i y_i] = rho_i, from the Fourier expansion."""
    if B1.n != B2.n:
        raise ValidationError("sets live on different cubes")
    r = _rho_list(B1.n, rho)
    return float(correlated_expectation(B1.indicator(), B2.indicator(), r))


def hc_bound(epsilon: float, rho_bound: float) -> float:
    if not 0 <= rho_bound < 1:
        raise InvalidCorrelation(f"rho bound must lie in [0, 1), got {rho_bound}")
    return epsilon ** (2 / (1 - rho_bound)) if epsilon > 0 else 0.0


@dataclass
class HCReport:
    measure1: float
    measure2: float
    epsilon: float
    intersection: float
    bound: float
    slack: float
    violation: bool

    def to_json(self) -> dict:
        return dict(self.__dict__)

    def csv_row(self) -> list[float]:
        return [self.measure1, self.measure2, self.intersection, self.bound, self.slack]


def check_reverse_hc(B1: IndicatorSet, B2: IndicatorSet, rho_bound: float, rho=None) -> HCReport:
    """Exact intersection against eps^(2/(1-rho_bound)), eps the smaller measure.

    ``rho`` gives the per-coordinate correlations (default: ``rho_bound`` on
    every coordinate); each must satisfy |rho_i| <= rho_bound.
    """
    r = _rho_list(B1.n, rho_bound if rho is None else rho)
    if any(abs(v) > rho_bound + 1e-15 for v in r):
        raise InvalidCorrelation(f"a correlation exceeds the bound {rho_bound} in absolute value")
    m1, m2 = B1.measure, B2.measure
    eps = min(m1, m2)
    p = correlated_intersection(B1, B2, r)
    bound = hc_bound(eps, rho_bound)
    slack = p - bound
    return HCReport(m1, m2, eps, p, bound, slack, p < bound * (1 - 1e-9) - 1e-15)


def random_set(family: str, n: int, stream: np.random.Generator) -> IndicatorSet:
    if family == "random":
        return IndicatorSet.random(n, stream, float(stream.uniform(0.05, 0.95)))
    if family == "balls":
        center = np.where(stream.random(n) < 0.5, 1, -1)
        return IndicatorSet.hamming_ball(n, center, int(stream.integers(0, n + 1)))
    if family == "subcubes":
        size = int(stream.integers(0, n + 1))
        coords = stream.choice(n, size=size, replace=False)
        return IndicatorSet.subcube(n, {int(i): int(stream.choice((-1, 1))) for i in coords})
    if family == "prefixes":
        return IndicatorSet.prefix(n, int(stream.integers(1, (1 << n) + 1)))
    raise ValidationError(f"unknown set family {family!r}; choose from {FAMILIES}")


def random_pair_suite(
    n: int, pairs: int, rho: float, family: str = "random", seed: int = 0, threads: int = 1
) -> list[HCReport]:
    """Reports for ``pairs`` random set pairs; pair ``j`` uses its own stream, results stay in index order.

    Correlations equal ``rho`` on every coordinate and the bound uses |rho|.
    """
    if family not in FAMILIES:
        raise ValidationError(f"unknown set family {family!r}; choose from {FAMILIES}")

    def run(j):
        stream = block_stream(seed, TAG_HYPER, j)
        B1 = random_set(family, n, stream)
        B2 = random_set(family, n, stream)
        return check_reverse_hc(B1, B2, abs(rho), [rho] * n)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(run, range(pairs)))
    return [run(j) for j in range(pairs)]


def gaussian_half_line_check(a1: float, a2: float, rho: float) -> HCReport:
    """The one-dimensional Gaussian analogue with B1 = {N > a1}, B2 = {M > a2}."""
    if not -1 < rho < 1:
        raise InvalidCorrelation("need |rho| < 1")
    m1, m2 = norm_sf(a1), norm_sf(a2)
    eps = min(m1, m2)
    p = pair_agreement(a1, a2, rho)
    bound = hc_bound(eps, abs(rho))
    return HCReport(m1, m2, eps, p, bound, p - bound, p < bound * (1 - 1e-9) - 1e-15)

