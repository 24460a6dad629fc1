"""Randomized instance suites for the bound checks, shared by the CLI and the tests.

Every generator takes an explicit seed; instance ``j`` is drawn from its own
substream, so suites can be extended or split without changing earlier draws.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import boolfn
from .constitution import Constitution, canonical_pairs, evaluate, is_transitive, paradox_probability_exact
from .core import Ranking, VoteDistribution
from .family import project_to_family
from .montecarlo import block_stream
from .pivotal import JointPivotalCheck, barbera_from_constitution, check_joint_pivotal_bound, check_two_influential_bound

TAG_CONSTITUTION = 10
TAG_PERTURB = 12


def random_constitution(n: int, stream: np.random.Generator, k: int = 3) -> Constitution:
    """Independent pair functions; each is a random table, a dictator, a majority-like rule or a constant."""
    pairwise = {}
    for p in canonical_pairs(k):
        kind = stream.integers(0, 4)
        if kind == 0 or n == 0:
            f = boolfn.random_boolean(n, stream, float(stream.uniform(0.2, 0.8)))
        elif kind == 1:
            f = boolfn.dictator(n, int(stream.integers(0, n)), int(stream.choice((-1, 1))))
        elif kind == 2:
            f = boolfn.weighted_majority(stream.uniform(0.1, 1.0, size=n), float(stream.uniform(-0.3, 0.3)))
        else:
            f = boolfn.random_boolean(n, stream, 0.5)
        pairwise[p] = f
    return Constitution(k, n, pairwise)


def random_symmetric_mu(stream: np.random.Generator, k: int = 3, max_weight: int = 9) -> VoteDistribution:
    """Reversal-symmetric rational distribution with every atom positive."""
    weights = {}
    for r in range(math.factorial(k)):
        rk = Ranking.from_index(k, r)
        rev = rk.reversal()
        if rev.index < r:
            continue
        w = int(stream.integers(1, max_weight + 1))
        weights[rk] = w
        weights[rev] = w
    return VoteDistribution.from_weights(k, weights)


def perturbed_dictator(n: int, stream: np.random.Generator, flips: int, voter: int | None = None) -> Constitution:
    """Dictator of a random voter with ``flips`` random table entries negated across the three pair tables."""
    voter = int(stream.integers(0, n)) if voter is None else voter
    D = Constitution.dictator(3, n, voter)
    tables = {p: D.pairwise[p].values.copy() for p in D.pairs}
    for _ in range(flips):
        p = D.pairs[int(stream.integers(0, 3))]
        tables[p][int(stream.integers(0, 1 << n))] *= -1
    return Constitution(3, n, {p: boolfn.BooleanFunction(n, v) for p, v in tables.items()})


@dataclass
class BarberaSuite:
    attempted: int = 0
    constructed: int = 0
    cyclic: int = 0
    failures: list = field(default_factory=list)


def barbera_suite(count: int, n_max: int = 8, seed: int = 0) -> BarberaSuite:
    """Draw constitutions until ``count`` have distinct pivotal voters for f^{a>b} and f^{b>c}; build and check profiles."""
    out = BarberaSuite()
    j = 0
    while out.attempted < count:
        stream = block_stream(seed, TAG_CONSTITUTION, j)
        j += 1
        n = int(stream.integers(2, n_max + 1))
        F = random_constitution(n, stream)
        try:
            found = barbera_from_constitution(F)
        except Exception as exc:  # recorded, counted as a failure
            out.attempted += 1
            out.failures.append({"index": j - 1, "error": repr(exc)})
            continue
        if found is None:
            continue
        out.attempted += 1
        profile, _, _ = found
        out.constructed += 1
        if profile.n == n and not is_transitive(evaluate(F, profile)):
            out.cyclic += 1
        else:
            out.failures.append({"index": j - 1, "profile": profile.to_json()})
    return out


@dataclass
class BoundSuite:
    joint_pivotal: JointPivotalCheck = field(default_factory=JointPivotalCheck)
    two_influential_instances: int = 0
    two_influential_violations: list = field(default_factory=list)
    two_influential_min_ratio: float = float("inf")

    def to_json(self) -> dict:
        return {
            "joint_pivotal": {
                "instances": self.joint_pivotal.instances,
                "violations": len(self.joint_pivotal.violations),
                "min_slack": self.joint_pivotal.min_slack,
            },
            "two_influential": {
                "instances": self.two_influential_instances,
                "violations": len(self.two_influential_violations),
                "min_ratio": self.two_influential_min_ratio,
            },
        }


def pivotal_bound_suite(constitutions: int, n_max: int = 6, seed: int = 0, symmetric_share: float = 0.3) -> BoundSuite:
    """Joint-pivotal and two-influential checks on random constitutions, uniform or random symmetric votes."""
    out = BoundSuite()
    for j in range(constitutions):
        stream = block_stream(seed, TAG_CONSTITUTION, 1_000_000 + j)
        n = int(stream.integers(2, n_max + 1))
        F = random_constitution(n, stream)
        mu = random_symmetric_mu(stream) if stream.random() < symmetric_share else VoteDistribution.uniform(3)
        check_joint_pivotal_bound(F, mu, out.joint_pivotal)
        rep = check_two_influential_bound(F, mu)
        if not rep.vacuous:
            out.two_influential_instances += 1
            ratio = float(rep.paradox) / rep.bound
            out.two_influential_min_ratio = min(out.two_influential_min_ratio, ratio)
            if not rep.holds:
                out.two_influential_violations.append({"index": j, "report": rep.to_json()})
    return out


@dataclass
class ProjectionCase:
    n: int
    epsilon: float
    flips: int
    paradox: Fraction
    threshold: float
    distance: Fraction
    in_family: bool

    @property
    def ok(self) -> bool:
        return self.in_family and float(self.distance) <= 10 * self.epsilon


def projection_suite(count: int, epsilons=(0.01, 0.002), ns=(3, 4, 5), seed: int = 0, max_flips: int = 3):
    """Perturbed dictators with P(F) < eps^3 / (36 n^3), projected onto the family.

    Candidates are drawn with 0..max_flips flipped entries and kept only when
    their exact paradox probability is below the threshold. Returns the kept
    cases and the number of candidates drawn.
    """
    mu = VoteDistribution.uniform(3)
    cases = []
    drawn = 0
    while len(cases) < count:
        stream = block_stream(seed, TAG_PERTURB, drawn)
        drawn += 1
        n = int(stream.choice(ns))
        eps = float(stream.choice(epsilons))
        flips = int(stream.integers(0, max_flips + 1))
        F = perturbed_dictator(n, stream, flips)
        p = paradox_probability_exact(F, mu)
        threshold = eps**3 / (36 * n**3)
        if p >= threshold:
            continue
        res = project_to_family(F, eps, mu)
        cases.append(ProjectionCase(n, eps, flips, p, threshold, res.distance, res.in_family))
    return cases, drawn
