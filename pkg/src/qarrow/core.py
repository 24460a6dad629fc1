"""Rankings, profiles, vote distributions and pairwise sign encodings.

Conventions used throughout the package:

* Alternatives are the integers ``0..k-1``.
* A ranking is stored as ``ranks[a]`` = position of alternative ``a`` (0 = top).
* Rankings of ``k`` alternatives are indexed by the lexicographic rank of their
  one-line notation read top to bottom, so for ``k = 3`` index 0 is ``0>1>2``
  and index 5 is ``2>1>0``.
* ``x^{a>b}(i) = +1`` iff voter ``i`` ranks ``a`` above ``b``.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .errors import DegeneratePairs, IdenticalAlternatives, ShapeMismatch, ValidationError

ALPHABET = "abcdefghijklmnopqrstuvwxyz"


@lru_cache(maxsize=None)
def _orders(k: int) -> tuple[tuple[int, ...], ...]:
    return tuple(itertools.permutations(range(k)))


def permutation_orders(k: int) -> np.ndarray:
    """All orders (top to bottom) of ``k`` alternatives, lexicographic; shape (k!, k)."""
    return np.array(_orders(k), dtype=np.int64).reshape(math.factorial(k), k)


@lru_cache(maxsize=None)
def _rank_table(k: int) -> np.ndarray:
    orders = permutation_orders(k)
    ranks = np.empty_like(orders)
    rows = np.arange(orders.shape[0])[:, None]
    ranks[rows, orders] = np.arange(k)[None, :]
    ranks.flags.writeable = False
    return ranks


def rank_table(k: int) -> np.ndarray:
    """``ranks[r, a]`` = position of alternative ``a`` in ranking index ``r``."""
    return _rank_table(k)


def above_signs(k: int, a: int, b: int) -> np.ndarray:
    """+1/-1 per ranking index: whether ``a`` is ranked above ``b``."""
    ranks = _rank_table(k)
    return np.where(ranks[:, a] < ranks[:, b], 1, -1).astype(np.int8)


@dataclass(frozen=True)
class Ranking:
    ranks: tuple[int, ...]

    def __post_init__(self):
        k = len(self.ranks)
        if sorted(self.ranks) != list(range(k)):
            raise ValidationError(f"ranks {self.ranks} is not a bijection onto 0..{k - 1}")

    @classmethod
    def from_order(cls, order: Sequence[int]) -> "Ranking":
        ranks = [0] * len(order)
        for pos, alt in enumerate(order):
            ranks[alt] = pos
        return cls(tuple(ranks))

    @classmethod
    def parse(cls, text: str) -> "Ranking":
        """Parse ``"a>b>c"`` or ``"0>1>2"``."""
        parts = [p.strip() for p in text.split(">")]
        order = [int(p) if p.isdigit() else ALPHABET.index(p) for p in parts]
        return cls.from_order(order)

    @classmethod
    def from_index(cls, k: int, index: int) -> "Ranking":
        return cls.from_order(_orders(k)[index])

    @property
    def k(self) -> int:
        return len(self.ranks)

    @property
    def order(self) -> tuple[int, ...]:
        order = [0] * self.k
        for alt, pos in enumerate(self.ranks):
            order[pos] = alt
        return tuple(order)

    @property
    def index(self) -> int:
        return _orders(self.k).index(self.order)

    def reversal(self) -> "Ranking":
        return Ranking(tuple(self.k - 1 - r for r in self.ranks))

    def prefers(self, a: int, b: int) -> bool:
        return self.ranks[a] < self.ranks[b]

    def __str__(self):
        names = ALPHABET if self.k <= len(ALPHABET) else None
        return ">".join(names[a] if names else str(a) for a in self.order)


@dataclass(frozen=True)
class Profile:
    voters: tuple[Ranking, ...]

    def __post_init__(self):
        ks = {r.k for r in self.voters}
        if len(ks) > 1:
            raise ValidationError(f"rankings disagree on k: {sorted(ks)}")

    @classmethod
    def of(cls, rankings: Iterable[Ranking | str]) -> "Profile":
        return cls(tuple(r if isinstance(r, Ranking) else Ranking.parse(r) for r in rankings))

    @classmethod
    def from_indices(cls, k: int, indices: Iterable[int]) -> "Profile":
        return cls(tuple(Ranking.from_index(k, int(i)) for i in indices))

    @property
    def n(self) -> int:
        return len(self.voters)

    @property
    def k(self) -> int:
        return self.voters[0].k if self.voters else 0

    def indices(self) -> np.ndarray:
        return np.array([r.index for r in self.voters], dtype=np.int64)

    def to_json(self) -> list[str]:
        return [str(r) for r in self.voters]


@dataclass(frozen=True)
class PairEncoding:
    pair: tuple[int, int]
    bits: tuple[int, ...]

    @property
    def index(self) -> int:
        """Truth-table index: bit i set iff voter i has +1."""
        return sum(1 << i for i, s in enumerate(self.bits) if s > 0)

    def __neg__(self) -> "PairEncoding":
        return PairEncoding((self.pair[1], self.pair[0]), tuple(-s for s in self.bits))


def encode_pair(profile: Profile, a: int, b: int) -> PairEncoding:
    if a == b:
        raise IdenticalAlternatives(f"pair ({a}, {b}) repeats an alternative")
    k = profile.k
    if not (0 <= a < k and 0 <= b < k):
        raise ValidationError(f"alternatives must lie in 0..{k - 1}")
    return PairEncoding((a, b), tuple(1 if r.prefers(a, b) else -1 for r in profile.voters))


class VoteDistribution:
    """Distribution over the ``k!`` rankings, indexed lexicographically.

    Entries are either all :class:`fractions.Fraction` (rational mode, sums
    checked exactly) or all floats (sum checked to 1e-12). Zero atoms are
    allowed; ``alpha`` then reports 0 and callers needing ``alpha > 0`` check it.
    """

    __slots__ = ("k", "probs", "rational", "_float")

    def __init__(self, k: int, probs: Sequence):
        if len(probs) != math.factorial(k):
            raise ShapeMismatch(f"expected {math.factorial(k)} probabilities, got {len(probs)}")
        rational = all(isinstance(p, (Fraction, int)) for p in probs)
        if rational:
            probs = tuple(Fraction(p) for p in probs)
            if sum(probs) != 1:
                raise ValidationError(f"probabilities sum to {sum(probs)}, not 1")
        else:
            probs = tuple(float(p) for p in probs)
            if abs(math.fsum(probs) - 1.0) > 1e-12:
                raise ValidationError(f"probabilities sum to {math.fsum(probs)!r}, not 1")
        if any(p < 0 for p in probs):
            raise ValidationError("negative probability")
        self.k = k
        self.probs = probs
        self.rational = rational
        self._float = np.array([float(p) for p in probs])

    @classmethod
    def uniform(cls, k: int, exact: bool = True) -> "VoteDistribution":
        m = math.factorial(k)
        return cls(k, [Fraction(1, m) if exact else 1.0 / m] * m)

    @classmethod
    def point_mass(cls, ranking: Ranking) -> "VoteDistribution":
        probs = [Fraction(0)] * math.factorial(ranking.k)
        probs[ranking.index] = Fraction(1)
        return cls(ranking.k, probs)

    @classmethod
    def from_weights(cls, k: int, weights: dict) -> "VoteDistribution":
        """Build from ``{ranking-or-string: weight}``; weights are normalised exactly if integral."""
        probs = [0] * math.factorial(k)
        for key, w in weights.items():
            r = key if isinstance(key, Ranking) else Ranking.parse(key)
            probs[r.index] += w
        total = sum(probs)
        if all(isinstance(p, (int, Fraction)) for p in probs):
            return cls(k, [Fraction(p) / total for p in probs])
        return cls(k, [p / total for p in probs])

    @property
    def alpha(self):
        return min(self.probs)

    @property
    def symmetric(self) -> bool:
        rev = [Ranking.from_index(self.k, i).reversal().index for i in range(len(self.probs))]
        if self.rational:
            return all(self.probs[i] == self.probs[j] for i, j in enumerate(rev))
        return all(abs(self.probs[i] - self.probs[j]) <= 1e-12 for i, j in enumerate(rev))

    @property
    def is_uniform(self) -> bool:
        return len(set(self.probs)) == 1

    def as_float(self) -> np.ndarray:
        return self._float

    def prob(self, ranking: Ranking):
        return self.probs[ranking.index]

    def marginal(self, alternatives: Sequence[int]) -> "VoteDistribution":
        """Distribution of the induced ranking on ``alternatives`` (relabelled 0..m-1 in the given order)."""
        alts = list(alternatives)
        m = len(alts)
        zero = Fraction(0) if self.rational else 0.0
        out = [zero] * math.factorial(m)
        sub_index = {o: i for i, o in enumerate(_orders(m))}
        pos = {a: i for i, a in enumerate(alts)}
        for idx, order in enumerate(_orders(self.k)):
            induced = tuple(pos[a] for a in order if a in pos)
            out[sub_index[induced]] += self.probs[idx]
        return VoteDistribution(m, out)

    def to_json(self) -> dict:
        if self.rational:
            probs = [{"num": p.numerator, "den": p.denominator} for p in self.probs]
        else:
            probs = list(self.probs)
        return {"k": self.k, "probs": probs, "order": "lex-one-line"}

    @classmethod
    def from_json(cls, obj: dict) -> "VoteDistribution":
        if obj.get("order", "lex-one-line") != "lex-one-line":
            raise ValidationError(f"unsupported ranking order {obj.get('order')!r}")
        probs = []
        for p in obj["probs"]:
            if isinstance(p, dict):
                probs.append(Fraction(int(p["num"]), int(p["den"])))
            else:
                probs.append(float(p))
        if any(isinstance(p, float) for p in probs):
            probs = [float(p) for p in probs]
        return cls(int(obj["k"]), probs)

    @classmethod
    def load(cls, path) -> "VoteDistribution":
        with open(path) as fh:
            return cls.from_json(json.load(fh))

    def __eq__(self, other):
        return isinstance(other, VoteDistribution) and self.k == other.k and self.probs == other.probs

    def __hash__(self):
        return hash((self.k, self.probs))

    def __repr__(self):
        return f"VoteDistribution(k={self.k}, probs={list(self.probs)})"


def _zero(mu: VoteDistribution):
    return Fraction(0) if mu.rational else 0.0


def _check_pair(k: int, pair) -> tuple[int, int]:
    a, b = pair
    if a == b:
        raise IdenticalAlternatives(f"pair {pair} repeats an alternative")
    if not (0 <= a < k and 0 <= b < k):
        raise ValidationError(f"pair {pair} outside 0..{k - 1}")
    return int(a), int(b)


def pair_correlation(mu: VoteDistribution, p1, p2):
    """Single-voter ``E[x^{p1} x^{p2}]``; exact in rational mode."""
    a, b = _check_pair(mu.k, p1)
    c, d = _check_pair(mu.k, p2)
    s = above_signs(mu.k, a, b) * above_signs(mu.k, c, d)
    return sum((p * int(v) for p, v in zip(mu.probs, s)), start=_zero(mu))


def pair_mean(mu: VoteDistribution, pair):
    a, b = _check_pair(mu.k, pair)
    s = above_signs(mu.k, a, b)
    return sum((p * int(v) for p, v in zip(mu.probs, s)), start=_zero(mu))


def pair_joint(mu: VoteDistribution, p1, p2) -> dict:
    """Joint law of ``(x^{p1}, x^{p2})`` for one voter, keyed by sign pairs."""
    s1 = above_signs(mu.k, *_check_pair(mu.k, p1))
    s2 = above_signs(mu.k, *_check_pair(mu.k, p2))
    out = {(u, v): _zero(mu) for u in (1, -1) for v in (1, -1)}
    for p, u, v in zip(mu.probs, s1, s2):
        out[(int(u), int(v))] += p
    return out


def conditional_l2_squared(mu: VoteDistribution, target, given):
    """``||E[x^target | x^g1, x^g2]||_2^2`` for one voter; exact in rational mode."""
    pairs = [_check_pair(mu.k, target), _check_pair(mu.k, given[0]), _check_pair(mu.k, given[1])]
    alts = {a for p in pairs for a in p}
    unordered = {frozenset(p) for p in pairs}
    if len(alts) != 3 or len(unordered) != 3:
        raise DegeneratePairs(f"pairs {pairs} must be the three pairs of three distinct alternatives")
    st, s1, s2 = (above_signs(mu.k, *p) for p in pairs)
    zero = _zero(mu)
    mass = {}
    first = {}
    for p, t, u, v in zip(mu.probs, st, s1, s2):
        key = (int(u), int(v))
        mass[key] = mass.get(key, zero) + p
        first[key] = first.get(key, zero) + p * int(t)
    total = zero
    for key, m in mass.items():
        if m:
            total += first[key] * first[key] / m
    return total


def conditional_l2(mu: VoteDistribution, target, given) -> float:
    return math.sqrt(conditional_l2_squared(mu, target, given))


def sample_rankings(mu: VoteDistribution, stream: np.random.Generator, size: int) -> np.ndarray:
    """Draw ``size`` ranking indices.

    Rational distributions are sampled exactly: a uniform integer below the
    common denominator is located in the integer cumulative weights.
    """
    if mu.rational:
        den = math.lcm(*(p.denominator for p in mu.probs))
        weights = [int(p * den) for p in mu.probs]
        if den < 2**63:
            cum = np.cumsum(np.array(weights, dtype=np.int64))
            u = stream.integers(0, den, size=size, dtype=np.int64)
            return np.searchsorted(cum, u, side="right").astype(np.int64)
        # huge denominators: fall back to floating probabilities
    return stream.choice(len(mu.probs), size=size, p=mu.as_float()).astype(np.int64)


def sample_ranking(mu: VoteDistribution, stream: np.random.Generator) -> Ranking:
    return Ranking.from_index(mu.k, int(sample_rankings(mu, stream, 1)[0]))


def sample_profile(mu: VoteDistribution, n: int, stream: np.random.Generator) -> Profile:
    return Profile.from_indices(mu.k, sample_rankings(mu, stream, n))
