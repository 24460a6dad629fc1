"""Seeded Monte Carlo estimators.

Samples are cut into fixed blocks; block ``b`` draws from its own stream
derived from ``(seed, tag, b)``, and integer hit counts are summed in block
order. The sample set therefore does not depend on the thread count.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import ndtri

from .boolfn import SymmetricThreshold
from .constitution import Constitution, cyclic_mask, outcome_signs
from .core import VoteDistribution, above_signs, sample_rankings
from .errors import ShapeMismatch, ValidationError

MIN_SAMPLES = 1000
BLOCK = 1 << 16
Z99 = float(ndtri(0.995))

# stream tags keep different estimators on disjoint substreams
TAG_PARADOX = 1
TAG_DISTANCE = 2
TAG_GAUSS = 3


@dataclass(frozen=True)
class Estimate:
    mean: float
    stderr: float
    samples: int
    confidence: float

    @classmethod
    def from_count(cls, hits: int, samples: int) -> "Estimate":
        """Bernoulli estimate with the ddof=1 sample standard deviation."""
        if samples < MIN_SAMPLES:
            raise ValidationError(f"need at least {MIN_SAMPLES} samples, got {samples}")
        p = hits / samples
        sd = math.sqrt(samples / (samples - 1) * p * (1 - p))
        se = sd / math.sqrt(samples)
        return cls(p, se, samples, Z99 * se)

    def covers(self, value: float, sigmas: float = 4.0) -> bool:
        return abs(self.mean - value) <= sigmas * self.stderr + 1e-15

    def to_json(self) -> dict:
        return {"mean": self.mean, "stderr": self.stderr, "samples": self.samples, "confidence": self.confidence}


def block_stream(seed: int, tag: int, block: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(tag, block)))


def count_hits(
    samples: int,
    seed: int,
    tag: int,
    draw: Callable[[np.random.Generator, int], int],
    threads: int = 1,
) -> int:
    """Sum of ``draw(stream, size)`` over the fixed sample blocks."""
    sizes = [min(BLOCK, samples - s) for s in range(0, samples, BLOCK)]

    def run(b):
        return int(draw(block_stream(seed, tag, b), sizes[b]))

    if threads > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return sum(pool.map(run, range(len(sizes))))
    return sum(run(b) for b in range(len(sizes)))


def _all_symmetric(F: Constitution) -> bool:
    return all(isinstance(f, SymmetricThreshold) for f in F.pairwise.values())


def _signs_from_counts(F: Constitution, counts: np.ndarray) -> np.ndarray:
    out = np.empty((counts.shape[0], len(F.pairs)), dtype=np.int8)
    for col, (a, b) in enumerate(F.pairs):
        s = counts @ above_signs(F.k, a, b).astype(np.int64)
        out[:, col] = F.pairwise[(a, b)].from_sums(s)
    return out


def _outcome_sampler(constitutions, mu: VoteDistribution):
    """Returns draw(stream, size) -> list of outcome sign arrays, one per constitution."""
    k, n = constitutions[0].k, constitutions[0].n
    if all(_all_symmetric(F) for F in constitutions):
        probs = mu.as_float()

        def draw(stream, size):
            counts = stream.multinomial(n, probs, size=size)
            return [_signs_from_counts(F, counts) for F in constitutions]

    else:

        def draw(stream, size):
            digits = sample_rankings(mu, stream, (size, n))
            return [outcome_signs(F, digits) for F in constitutions]

    return draw


def _check(samples: int, mu: VoteDistribution, *constitutions):
    if samples < MIN_SAMPLES:
        raise ValidationError(f"need at least {MIN_SAMPLES} samples, got {samples}")
    F = constitutions[0]
    for G in constitutions:
        if (G.k, G.n) != (F.k, F.n):
            raise ShapeMismatch("constitutions differ in alternatives or voters")
    if mu.k != F.k:
        raise ShapeMismatch(f"distribution is over {mu.k} alternatives, constitution over {F.k}")


def estimate_paradox(F: Constitution, mu: VoteDistribution, samples: int = 100_000, seed: int = 0, threads: int = 1) -> Estimate:
    """Fraction of sampled profiles with a non-transitive outcome.

    When every pair function is a count threshold, a profile is summarized by
    its ranking counts, drawn as one multinomial vector.
    """
    _check(samples, mu, F)
    sampler = _outcome_sampler([F], mu)

    def draw(stream, size):
        (signs,) = sampler(stream, size)
        return np.count_nonzero(cyclic_mask(F.k, signs))

    return Estimate.from_count(count_hits(samples, seed, TAG_PARADOX, draw, threads), samples)


def estimate_distance(
    F: Constitution, G: Constitution, mu: VoteDistribution, samples: int = 100_000, seed: int = 0, threads: int = 1
) -> Estimate:
    """Fraction of sampled profiles on which F and G disagree on some pair."""
    _check(samples, mu, F, G)
    sampler = _outcome_sampler([F, G], mu)

    def draw(stream, size):
        sf, sg = sampler(stream, size)
        return np.count_nonzero((sf != sg).any(axis=1))

    return Estimate.from_count(count_hits(samples, seed, TAG_DISTANCE, draw, threads), samples)

