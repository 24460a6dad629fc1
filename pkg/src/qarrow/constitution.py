"""IIA constitutions: one Boolean function per unordered pair of alternatives.

The pair ``{a, b}`` is stored once under ``(min, max)``; the opposite orientation
is derived as ``f^{b>a}(x) = -f^{a>b}(-x)``.
"""
from __future__ import annotations

import itertools
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Mapping, Sequence

import numpy as np

from . import boolfn
from .boolfn import BooleanFunction, BoundedFunction, SymmetricThreshold
from .core import (
    Profile,
    Ranking,
    VoteDistribution,
    above_signs,
    encode_pair,
    pair_correlation,
    pair_mean,
)
from .errors import (
    AsymmetricDistribution,
    BudgetExceeded,
    ShapeMismatch,
    TooFewAlternatives,
    UnsupportedK,
    ValidationError,
)

DEFAULT_BUDGET = 10**8
CHUNK = 1 << 16

PairFunction = BooleanFunction | SymmetricThreshold


def canonical_pairs(k: int) -> list[tuple[int, int]]:
    return list(itertools.combinations(range(k), 2))


class Constitution:
    def __init__(self, k: int, n: int, pairwise: Mapping[tuple[int, int], PairFunction]):
        if k < 2:
            raise TooFewAlternatives("a constitution needs at least two alternatives")
        expected = canonical_pairs(k)
        got = {}
        for (a, b), f in pairwise.items():
            if a == b:
                raise ValidationError(f"pair ({a}, {b}) repeats an alternative")
            if a > b:
                raise ValidationError(f"pair ({a}, {b}) is not canonical (need a < b)")
            if f.n != n:
                raise ShapeMismatch(f"pair ({a}, {b}) has n={f.n}, expected {n}")
            got[(int(a), int(b))] = f
        missing = [p for p in expected if p not in got]
        extra = [p for p in got if p not in set(expected)]
        if missing or extra:
            raise ValidationError(f"missing pairs {missing}, unexpected pairs {extra}")
        self.k = k
        self.n = n
        self.pairwise = {p: got[p] for p in expected}

    # -- constructors ---------------------------------------------------------

    @classmethod
    def from_cyclic(cls, f_ab, f_bc, f_ca) -> "Constitution":
        """k = 3 from the cyclically oriented functions f^{a>b}, f^{b>c}, f^{c>a}."""
        return cls(3, f_ab.n, {(0, 1): f_ab, (1, 2): f_bc, (0, 2): -f_ca.negate_inputs()})

    @classmethod
    def dictator(cls, k: int, n: int, voter: int, sign: int = 1) -> "Constitution":
        f = boolfn.dictator(n, voter, sign)
        return cls(k, n, {p: f for p in canonical_pairs(k)})

    @classmethod
    def constant(cls, ranking: Ranking, n: int) -> "Constitution":
        k = ranking.k
        return cls(k, n, {(a, b): boolfn.constant(n, 1 if ranking.prefers(a, b) else -1) for a, b in canonical_pairs(k)})

    @classmethod
    def majority(cls, k: int, n: int, tabulate: bool | None = None) -> "Constitution":
        if tabulate is None:
            tabulate = n <= 15
        f = boolfn.majority(n) if tabulate else SymmetricThreshold(n, 0.0)
        return cls(k, n, {p: f for p in canonical_pairs(k)})

    @classmethod
    def uniform_rule(cls, k: int, f: PairFunction) -> "Constitution":
        return cls(k, f.n, {p: f for p in canonical_pairs(k)})

    # -- access ---------------------------------------------------------------

    @property
    def pairs(self) -> list[tuple[int, int]]:
        return list(self.pairwise)

    @property
    def tabulated(self) -> bool:
        return all(isinstance(f, BooleanFunction) for f in self.pairwise.values())

    def tables(self) -> "Constitution":
        """Same constitution with every pair function as a dense table."""
        if self.tabulated:
            return self
        return Constitution(
            self.k, self.n, {p: f if isinstance(f, BooleanFunction) else f.to_table() for p, f in self.pairwise.items()}
        )

    def oriented(self, a: int, b: int) -> BooleanFunction:
        """f^{a>b} as a function of x^{a>b}."""
        if a == b:
            raise ValidationError("identical alternatives")
        if a < b:
            return self.pairwise[(a, b)]
        f = self.pairwise[(b, a)]
        if isinstance(f, SymmetricThreshold):
            f = f.to_table()
        return -f.negate_inputs()

    def __eq__(self, other):
        return (
            isinstance(other, Constitution)
            and (self.k, self.n) == (other.k, other.n)
            and all(self.pairwise[p] == other.pairwise[p] for p in self.pairwise)
        )

    def __hash__(self):
        return hash((self.k, self.n, tuple(hash(f) for f in self.pairwise.values())))

    def __repr__(self):
        return f"Constitution(k={self.k}, n={self.n})"

    # -- files ----------------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "k": self.k,
            "n": self.n,
            "pairs": [{"a": a, "b": b, "table": f.to_json()} for (a, b), f in self.pairwise.items()],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Constitution":
        k, n = int(obj["k"]), int(obj["n"])
        pairwise = {}
        for entry in obj["pairs"]:
            a, b = int(entry["a"]), int(entry["b"])
            f = boolfn.function_from_json(entry["table"])
            if not isinstance(f, (BooleanFunction, SymmetricThreshold)):
                raise ValidationError(f"pair ({a}, {b}) table is not Boolean")
            if a > b:
                a, b = b, a
                f = -(f.to_table() if isinstance(f, SymmetricThreshold) else f).negate_inputs()
            if (a, b) in pairwise:
                raise ValidationError(f"pair ({a}, {b}) given twice")
            pairwise[(a, b)] = f
        return cls(k, n, pairwise)

    @classmethod
    def load(cls, path) -> "Constitution":
        with open(path) as fh:
            return cls.from_json(json.load(fh))


@dataclass(frozen=True)
class OutcomeTournament:
    """One sign per canonical pair: +1 means the lower-numbered alternative wins."""

    k: int
    prefers: tuple[int, ...]

    def sign(self, a: int, b: int) -> int:
        if a < b:
            return self.prefers[canonical_pairs(self.k).index((a, b))]
        return -self.sign(b, a)

    @classmethod
    def from_ranking(cls, r: Ranking) -> "OutcomeTournament":
        return cls(r.k, tuple(1 if r.prefers(a, b) else -1 for a, b in canonical_pairs(r.k)))

    def to_ranking(self) -> Ranking | None:
        if not is_transitive(self):
            return None
        wins = [sum(1 for b in range(self.k) if b != a and self.sign(a, b) > 0) for a in range(self.k)]
        return Ranking(tuple(self.k - 1 - w for w in wins))

    def describe(self) -> list[str]:
        names = "abcdefghijklmnopqrstuvwxyz"
        out = []
        for (a, b), s in zip(canonical_pairs(self.k), self.prefers):
            w, l = (a, b) if s > 0 else (b, a)
            out.append(f"{names[w]}>{names[l]}")
        return out


def evaluate(F: Constitution, profile: Profile) -> OutcomeTournament:
    if profile.n != F.n or profile.k != F.k:
        raise ShapeMismatch(f"profile is {profile.n} voters x {profile.k} alternatives, constitution is {F.n} x {F.k}")
    signs = []
    for a, b in F.pairs:
        bits = encode_pair(profile, a, b).bits
        signs.append(int(F.pairwise[(a, b)](np.array(bits))))
    return OutcomeTournament(F.k, tuple(signs))


def is_transitive(t: OutcomeTournament) -> bool:
    """A tournament is a total order iff it contains no 3-cycle."""
    for a, b, c in itertools.combinations(range(t.k), 3):
        ab, bc, ac = t.sign(a, b), t.sign(b, c), t.sign(a, c)
        if ab == bc and ac != ab:
            return False
    return True


# ----------------------------------------------------------------------------
# exhaustive profile enumeration


def _check_budget(k: int, n: int, budget: int) -> int:
    total = math.factorial(k) ** n
    if total > budget:
        raise BudgetExceeded(total, budget)
    return total


def _digits(k: int, n: int, start: int, stop: int) -> np.ndarray:
    m = math.factorial(k)
    idx = np.arange(start, stop, dtype=np.int64)
    out = np.empty((idx.size, n), dtype=np.int64)
    for i in range(n):
        out[:, i] = idx % m
        idx //= m
    return out


def _pair_indices(k: int, a: int, b: int, digits: np.ndarray) -> np.ndarray:
    plus = (above_signs(k, a, b) > 0).astype(np.int64)
    n = digits.shape[1]
    return (plus[digits] << np.arange(n, dtype=np.int64)[None, :]).sum(axis=1)


def outcome_signs(F: Constitution, digits: np.ndarray) -> np.ndarray:
    """Outcome sign per canonical pair for each profile row of ranking indices; shape (rows, pairs)."""
    out = np.empty((digits.shape[0], len(F.pairs)), dtype=np.int8)
    for col, (a, b) in enumerate(F.pairs):
        f = F.pairwise[(a, b)]
        if isinstance(f, SymmetricThreshold):
            s = above_signs(F.k, a, b).astype(np.int64)
            out[:, col] = f.from_sums(s[digits].sum(axis=1))
        else:
            out[:, col] = f.ints[_pair_indices(F.k, a, b, digits)]
    return out


def cyclic_mask(k: int, signs: np.ndarray) -> np.ndarray:
    pairs = canonical_pairs(k)
    col = {p: i for i, p in enumerate(pairs)}
    bad = np.zeros(signs.shape[0], dtype=bool)
    for a, b, c in itertools.combinations(range(k), 3):
        ab, bc, ac = signs[:, col[(a, b)]], signs[:, col[(b, c)]], signs[:, col[(a, c)]]
        bad |= (ab == bc) & (ac != ab)
    return bad


class _Mass:
    """Accumulates the probability of selected profile rows under mu^n."""

    def __init__(self, mu: VoteDistribution, n: int):
        self.mu = mu
        self.n = n
        self.m = len(mu.probs)
        self.uniform = mu.is_uniform

    def __call__(self, digits: np.ndarray):
        if digits.shape[0] == 0:
            return Fraction(0) if self.mu.rational else 0.0
        if not self.mu.rational:
            return float(np.prod(self.mu.as_float()[digits], axis=1).sum())
        if self.uniform:
            return digits.shape[0] * self.mu.probs[0] ** self.n
        rows = digits.shape[0]
        flat = (np.arange(rows, dtype=np.int64)[:, None] * self.m + digits).ravel()
        hist = np.bincount(flat, minlength=rows * self.m).reshape(rows, self.m)
        uniq, counts = np.unique(hist, axis=0, return_counts=True)
        total = Fraction(0)
        for h, c in zip(uniq, counts):
            w = Fraction(int(c))
            for p, e in zip(self.mu.probs, h):
                if e:
                    w *= p ** int(e)
            total += w
        return total


def enumerate_probability(
    k: int,
    n: int,
    mu: VoteDistribution,
    event: Callable[[np.ndarray], np.ndarray],
    budget: int = DEFAULT_BUDGET,
    workers: int = 1,
):
    """Probability under ``mu^n`` of the profiles where ``event(digits)`` is true.

    The profile range is cut into fixed contiguous chunks; per-chunk masses are
    added in chunk order, so the result does not depend on ``workers``.
    """
    if mu.k != k:
        raise ShapeMismatch(f"distribution is over {mu.k} alternatives, expected {k}")
    total = _check_budget(k, n, budget)
    mass = _Mass(mu, n)
    bounds = [(s, min(s + CHUNK, total)) for s in range(0, total, CHUNK)]

    def run(bound):
        d = _digits(k, n, *bound)
        return mass(d[event(d)])

    if workers > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, bounds))
    else:
        parts = [run(b) for b in bounds]
    if mu.rational:
        return sum(parts, Fraction(0))
    return math.fsum(parts)


def first_profile(k: int, n: int, event, budget: int = DEFAULT_BUDGET) -> Profile | None:
    total = _check_budget(k, n, budget)
    for s in range(0, total, CHUNK):
        d = _digits(k, n, s, min(s + CHUNK, total))
        hit = np.flatnonzero(event(d))
        if hit.size:
            return Profile.from_indices(k, d[hit[0]])
    return None


def paradox_probability_exact(F: Constitution, mu: VoteDistribution, budget: int = DEFAULT_BUDGET, workers: int = 1):
    """P(F): weighted count of profiles with a non-transitive outcome."""
    return enumerate_probability(F.k, F.n, mu, lambda d: cyclic_mask(F.k, outcome_signs(F, d)), budget, workers)


def transitivity_probability_exact(F: Constitution, mu: VoteDistribution, budget: int = DEFAULT_BUDGET):
    return 1 - paradox_probability_exact(F, mu, budget)


def find_paradox_profile(F: Constitution, budget: int = DEFAULT_BUDGET) -> Profile | None:
    """First profile (mixed-radix order, voter 0 least significant) with a cyclic outcome."""
    return first_profile(F.k, F.n, lambda d: cyclic_mask(F.k, outcome_signs(F, d)), budget)


def is_always_transitive(F: Constitution, budget: int = DEFAULT_BUDGET) -> bool:
    return find_paradox_profile(F, budget) is None


def distance(F: Constitution, G: Constitution, mu: VoteDistribution, budget: int = DEFAULT_BUDGET, workers: int = 1):
    """D(F, G) = P[F(sigma) != G(sigma)]."""
    if (F.k, F.n) != (G.k, G.n):
        raise ShapeMismatch("constitutions differ in k or n")

    def differ(d):
        return np.any(outcome_signs(F, d) != outcome_signs(G, d), axis=1)

    return enumerate_probability(F.k, F.n, mu, differ, budget, workers)


# ----------------------------------------------------------------------------
# Kalai's formula


def cyclic_functions(F: Constitution) -> tuple[BooleanFunction, BooleanFunction, BooleanFunction]:
    """(f^{a>b}, f^{b>c}, f^{c>a}) for k = 3."""
    if F.k != 3:
        raise UnsupportedK(f"needs k = 3, got {F.k}")
    G = F.tables()
    return G.oriented(0, 1), G.oriented(1, 2), G.oriented(2, 0)


CYCLIC_PAIRS = ((0, 1), (1, 2), (2, 0))


def kalai_terms(F: Constitution, mu: VoteDistribution) -> dict:
    """The three correlated expectations entering Kalai's formula.

    Keys ``"ab.bc"``, ``"bc.ca"``, ``"ca.ab"``; each is
    ``E[f^{p}(x^{p}) f^{q}(x^{q})]`` with per-voter correlation
    ``pair_correlation(mu, p, q)``.
    """
    if F.k != 3:
        raise UnsupportedK(f"Kalai's formula is for k = 3, got {F.k}")
    if mu.k != 3:
        raise ShapeMismatch("distribution must be over 3 alternatives")
    tol = 0 if mu.rational else 1e-12
    if any(abs(pair_mean(mu, p)) > tol for p in CYCLIC_PAIRS):
        raise AsymmetricDistribution("pairwise marginals are biased; the spectral formula needs unbiased pairs")
    fs = cyclic_functions(F)
    names = ("ab", "bc", "ca")
    out = {}
    for i in range(3):
        j = (i + 1) % 3
        rho = pair_correlation(mu, CYCLIC_PAIRS[i], CYCLIC_PAIRS[j])
        out[f"{names[i]}.{names[j]}"] = boolfn.correlated_expectation(fs[i], fs[j], rho, exact=mu.rational)
    return out


def paradox_probability_kalai(F: Constitution, mu: VoteDistribution):
    t = kalai_terms(F, mu)
    s = t["ab.bc"] + t["bc.ca"] + t["ca.ab"]
    if mu.rational:
        return (1 + s) / 4
    return 0.25 * (1.0 + s)


def paradox_functional(f1: BoundedFunction, f2: BoundedFunction, f3: BoundedFunction, rho=Fraction(-1, 3)):
    """``1/4 (1 + E[f1 f2] + E[f2 f3] + E[f3 f1])`` for [-1,1]-valued functions, consecutive pairs correlated ``rho``."""
    s = (
        boolfn.correlated_expectation(f1, f2, float(rho))
        + boolfn.correlated_expectation(f2, f3, float(rho))
        + boolfn.correlated_expectation(f3, f1, float(rho))
    )
    return 0.25 * (1.0 + s)


# ----------------------------------------------------------------------------
# restrictions


def restrict(F: Constitution, A: Sequence[int]) -> Constitution:
    """F_A with alternatives of A relabelled 0..|A|-1 in increasing order."""
    A = sorted(set(int(a) for a in A))
    if len(A) < 2:
        raise TooFewAlternatives("restriction needs at least two alternatives")
    if A[0] < 0 or A[-1] >= F.k:
        raise ValidationError(f"alternatives {A} outside 0..{F.k - 1}")
    return Constitution(len(A), F.n, {(i, j): F.pairwise[(A[i], A[j])] for i, j in canonical_pairs(len(A))})


def _pair_bits_from(b, k: int) -> dict:
    """Per canonical pair, the sign induced by a ranking or (k = 3) a cyclic sign triple."""
    if isinstance(b, Ranking):
        if b.k != k:
            raise ShapeMismatch("ranking has the wrong number of alternatives")
        return {(x, y): 1 if b.prefers(x, y) else -1 for x, y in canonical_pairs(k)}
    if isinstance(b, str):
        return _pair_bits_from(Ranking.parse(b), k)
    if k != 3 or len(b) != 3:
        raise ValidationError("sign triples are only meaningful for k = 3")
    s_ab, s_bc, s_ca = (int(v) for v in b)
    if s_ab == s_bc == s_ca:
        raise ValidationError(f"{tuple(b)} is not the sign pattern of a ranking")
    return {(0, 1): s_ab, (1, 2): s_bc, (0, 2): -s_ca}


def conditional_restriction(F: Constitution, voter: int, b) -> Constitution:
    """Fix ``voter``'s ballot to ``b``; the remaining voters keep their order."""
    if not 0 <= voter < F.n:
        raise ValidationError(f"voter {voter} outside 0..{F.n - 1}")
    bits = _pair_bits_from(b, F.k)
    G = F.tables()
    return Constitution(F.k, F.n - 1, {p: G.pairwise[p].fix(voter, bits[p]) for p in F.pairs})
