"""The family of transitive IIA constitutions.

Every member has a normal form: an ordered partition of the alternatives into
blocks ranked rigidly above one another, where a block of three or more
alternatives follows one voter (or that voter's reversed ballot), a block of
two is decided by an arbitrary non-constant function, and singletons carry no
function.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import boolfn
from .boolfn import BooleanFunction
from .constitution import (
    DEFAULT_BUDGET,
    Constitution,
    canonical_pairs,
    distance,
    evaluate,
    find_paradox_profile,
    is_transitive,
    _pair_indices,
)
from .core import Profile, Ranking, VoteDistribution, pair_mean
from .errors import (
    BudgetExceeded,
    ConstructionFailed,
    NotTransitive,
    UnsupportedK,
    ValidationError,
)


@dataclass(frozen=True)
class TopDictator:
    voter: int
    sign: int = 1

    def to_json(self):
        return {"type": "TopDictator", "voter": self.voter, "sign": self.sign}


@dataclass(frozen=True)
class FreePair:
    function: BooleanFunction

    def to_json(self):
        return {"type": "FreePair", "table": self.function.to_json()}


@dataclass(frozen=True)
class Singleton:
    def to_json(self):
        return {"type": "Singleton"}


BlockKind = TopDictator | FreePair | Singleton


@dataclass(frozen=True)
class FamilyStructure:
    blocks: tuple[tuple[int, ...], ...]
    kinds: tuple[BlockKind, ...]

    def __post_init__(self):
        flat = sorted(a for b in self.blocks for a in b)
        if flat != list(range(len(flat))):
            raise ValidationError(f"blocks {self.blocks} do not partition 0..{len(flat) - 1}")
        for block, kind in zip(self.blocks, self.kinds):
            size = len(block)
            ok = (
                (size == 1 and isinstance(kind, Singleton))
                or (size == 2 and isinstance(kind, FreePair) and not kind.function.is_constant())
                or (size >= 3 and isinstance(kind, TopDictator))
            )
            if not ok:
                raise ValidationError(f"block {block} cannot have kind {kind}")

    @property
    def k(self) -> int:
        return sum(len(b) for b in self.blocks)

    def to_json(self) -> dict:
        return {"blocks": [list(b) for b in self.blocks], "kinds": [kd.to_json() for kd in self.kinds]}

    @classmethod
    def from_json(cls, obj: dict) -> "FamilyStructure":
        kinds = []
        for kd in obj["kinds"]:
            t = kd["type"]
            if t == "TopDictator":
                kinds.append(TopDictator(int(kd["voter"]), int(kd.get("sign", 1))))
            elif t == "FreePair":
                kinds.append(FreePair(boolfn.function_from_json(kd["table"])))
            elif t == "Singleton":
                kinds.append(Singleton())
            else:
                raise ValidationError(f"unknown block kind {t!r}")
        return cls(tuple(tuple(int(a) for a in b) for b in obj["blocks"]), tuple(kinds))

    def signature(self) -> str:
        return "|".join(
            {TopDictator: "D", FreePair: "P", Singleton: "S"}[type(kd)] + str(len(b)) for b, kd in zip(self.blocks, self.kinds)
        )


@dataclass(frozen=True)
class NotInFamily:
    witness: Profile

    def to_json(self) -> dict:
        return {"not_in_family": True, "witness": self.witness.to_json()}


def build_constitution(structure: FamilyStructure, n: int) -> Constitution:
    """The member of the family with the given normal form."""
    k = structure.k
    block_of = {a: s for s, b in enumerate(structure.blocks) for a in b}
    pairwise = {}
    for a, b in canonical_pairs(k):
        sa, sb = block_of[a], block_of[b]
        if sa != sb:
            pairwise[(a, b)] = boolfn.constant(n, 1 if sa < sb else -1)
            continue
        kind = structure.kinds[sa]
        if isinstance(kind, TopDictator):
            pairwise[(a, b)] = boolfn.dictator(n, kind.voter, kind.sign)
        else:
            if kind.function.n != n:
                raise ValidationError(f"free pair function has n={kind.function.n}, expected {n}")
            lo, hi = sorted(structure.blocks[sa])
            pairwise[(a, b)] = kind.function if (a, b) == (lo, hi) else -kind.function.negate_inputs()
    return Constitution(k, n, pairwise)


def _components(k: int, edges) -> list[list[int]]:
    parent = list(range(k))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in edges:
        parent[find(a)] = find(b)
    groups = {}
    for a in range(k):
        groups.setdefault(find(a), []).append(a)
    return sorted(groups.values())


def _dictator_of(f: BooleanFunction) -> tuple[int, int] | None:
    for j in range(f.n):
        for s in (1, -1):
            if f == boolfn.dictator(f.n, j, s):
                return j, s
    return None


def structure_of(F: Constitution, mu: VoteDistribution | None = None, budget: int = DEFAULT_BUDGET):
    """Normal form of F, or :class:`NotInFamily` carrying a paradox profile.

    Membership means a transitive outcome on every profile (all rankings are
    treated as possible; ``mu`` is accepted for interface symmetry only).
    """
    witness = find_paradox_profile(F, budget)
    if witness is not None:
        return NotInFamily(witness)
    G = F.tables()
    k = G.k
    free = [(a, b) for a, b in G.pairs if not G.pairwise[(a, b)].is_constant()]
    blocks = _components(k, free)

    def above(A, B):
        return all(G.oriented(a, b).is_constant() and G.oriented(a, b).values[0] > 0 for a in A for b in B)

    ordered = sorted(blocks, key=lambda A: -sum(above(A, B) for B in blocks if B is not A))
    for s in range(len(ordered) - 1):
        if not above(ordered[s], ordered[s + 1]):
            raise ConstructionFailed(f"blocks {ordered} are not rigidly ordered; characterization violated")
    kinds = []
    for block in ordered:
        if len(block) == 1:
            kinds.append(Singleton())
        elif len(block) == 2:
            kinds.append(FreePair(G.pairwise[tuple(block)]))
        else:
            dicts = {_dictator_of(G.pairwise[(a, b)]) for a, b in itertools.combinations(block, 2)}
            if len(dicts) != 1 or None in dicts:
                raise ConstructionFailed(f"block {block} is not a dictator block; characterization violated")
            kinds.append(TopDictator(*dicts.pop()))
    return FamilyStructure(tuple(tuple(b) for b in ordered), tuple(kinds))


# ----------------------------------------------------------------------------
# one voter, three alternatives


@dataclass(frozen=True)
class SingleVoterClass:
    """One of: Constant(ranking), TopOrBottomFixed(alternative, position, pair, sign), Identity, Antidictator."""

    kind: str
    ranking: Ranking | None = None
    alternative: int | None = None
    position: str | None = None
    pair: tuple[int, int] | None = None
    sign: int | None = None


def classify_single_voter(F: Constitution) -> SingleVoterClass:
    if F.k != 3 or F.n != 1:
        raise UnsupportedK(f"classification is for one voter and three alternatives, got n={F.n}, k={F.k}")
    for r in range(6):
        ranking = Ranking.from_index(3, r)
        if not is_transitive(evaluate(F, Profile((ranking,)))):
            raise NotTransitive(f"outcome at ballot {ranking} is cyclic", ranking)
    G = F.tables()
    x = boolfn.dictator(1, 0)
    fs = G.pairwise
    if all(f.is_constant() for f in fs.values()):
        t = evaluate(G, Profile((Ranking.from_index(3, 0),)))
        return SingleVoterClass("Constant", ranking=t.to_ranking())
    if all(f == x for f in fs.values()):
        return SingleVoterClass("Identity")
    if all(f == -x for f in fs.values()):
        return SingleVoterClass("Antidictator")
    moving = [p for p, f in fs.items() if not f.is_constant()]
    if len(moving) != 1:
        raise ConstructionFailed(f"pairs {moving} vary; characterization violated")
    a, b = moving[0]
    c = 3 - a - b
    top = G.oriented(c, a).values[0] > 0
    sign = 1 if fs[(a, b)] == x else -1
    return SingleVoterClass("TopOrBottomFixed", alternative=c, position="top" if top else "bottom", pair=(a, b), sign=sign)


# ----------------------------------------------------------------------------
# generation and exhaustive cross-check


def ordered_partitions(items: Sequence[int]):
    items = list(items)
    if not items:
        yield ()
        return
    for r in range(1, len(items) + 1):
        for first in itertools.combinations(items, r):
            rest = [a for a in items if a not in first]
            for tail in ordered_partitions(rest):
                yield (first,) + tail


def _nonconstant_functions(n: int):
    size = 1 << n
    for code in range(1, (1 << size) - 1):
        bits = (code >> np.arange(size)) & 1
        yield BooleanFunction(n, np.where(bits == 1, 1.0, -1.0))


def generate_structures(k: int, n: int):
    """Every normal form on k alternatives and n voters."""
    for blocks in ordered_partitions(range(k)):
        options = []
        for b in blocks:
            if len(b) == 1:
                options.append([Singleton()])
            elif len(b) == 2:
                options.append([FreePair(f) for f in _nonconstant_functions(n)])
            else:
                options.append([TopDictator(j, s) for j in range(n) for s in (1, -1)])
        for kinds in itertools.product(*options):
            yield FamilyStructure(blocks, kinds)


def table_code(f: BooleanFunction) -> int:
    """Integer with bit t set iff f(index t) = +1."""
    return int(sum(1 << t for t, v in enumerate(f.values) if v > 0))


def constitution_key(F: Constitution) -> tuple[int, ...]:
    return tuple(table_code(F.pairwise[p]) for p in F.pairs)


def exhaustive_transitive_keys(n: int) -> set[tuple[int, int, int]]:
    """Keys (codes of f^{01}, f^{02}, f^{12}) of all transitive IIA constitutions on 3 alternatives."""
    if n > 2:
        raise BudgetExceeded((2 ** (2**n)) ** 3, (2 ** (2**2)) ** 3)
    size = 1 << n
    nf = 1 << size
    tables = np.where(((np.arange(nf)[:, None] >> np.arange(size)[None, :]) & 1) == 1, 1, -1).astype(np.int8)
    m = 6**n
    digits = np.array(list(itertools.product(range(6), repeat=n)), dtype=np.int64).reshape(m, n)
    i01 = _pair_indices(3, 0, 1, digits)
    i02 = _pair_indices(3, 0, 2, digits)
    i12 = _pair_indices(3, 1, 2, digits)
    v01 = tables[:, i01][:, None, None, :]
    v02 = tables[:, i02][None, :, None, :]
    v12 = tables[:, i12][None, None, :, :]
    cyclic = (v01 == v12) & (v02 != v01)
    ok = ~cyclic.any(axis=-1)
    return {(int(u), int(v), int(w)) for u, v, w in zip(*np.nonzero(ok))}


@dataclass
class FamilyEnumeration:
    k: int
    n: int
    members: list[Constitution]
    structures: list[FamilyStructure]
    counts: dict
    exhaustive_checked: bool = False
    exhaustive_total: int = 0
    survivors: int = 0
    sets_equal: bool | None = None

    def to_json(self) -> dict:
        return {
            "k": self.k,
            "n": self.n,
            "members": len(self.members),
            "counts": self.counts,
            "exhaustive_checked": self.exhaustive_checked,
            "exhaustive_total": self.exhaustive_total,
            "survivors": self.survivors,
            "sets_equal": self.sets_equal,
        }


def enumerate_family(k: int = 3, n: int = 1, budget: int = DEFAULT_BUDGET) -> FamilyEnumeration:
    """Generate the family from normal forms; for k = 3 and n <= 2 also filter all IIA constitutions."""
    if k != 3:
        raise UnsupportedK("family enumeration is provided for k = 3")
    if n > 3:
        nf = 2 ** (2**n)
        raise BudgetExceeded(6 * nf, budget)
    structures = list(generate_structures(k, n))
    members = [build_constitution(s, n) for s in structures]
    counts = {}
    for s in structures:
        counts[s.signature()] = counts.get(s.signature(), 0) + 1
    out = FamilyEnumeration(k, n, members, structures, counts)
    if n <= 2:
        survivors = exhaustive_transitive_keys(n)
        generated = {constitution_key(F) for F in members}
        out.exhaustive_checked = True
        out.exhaustive_total = (2 ** (2**n)) ** 3
        out.survivors = len(survivors)
        out.sets_equal = survivors == generated and len(generated) == len(members)
    return out


# ----------------------------------------------------------------------------
# projection


@dataclass
class ProjectionResult:
    G: Constitution
    distance: object
    exact: bool
    structure: object
    replaced: dict = field(default_factory=dict)
    stderr: float | None = None

    @property
    def in_family(self) -> bool:
        return isinstance(self.structure, FamilyStructure)

    def to_json(self) -> dict:
        return {
            "distance": self.distance,
            "exact": self.exact,
            "stderr": self.stderr,
            "replaced": self.replaced,
            "in_family": self.in_family,
            "structure": self.structure.to_json() if self.structure is not None else None,
        }


def project_to_family(
    F: Constitution,
    epsilon: float,
    mu: VoteDistribution,
    budget: int = DEFAULT_BUDGET,
    radius: float = 10.0,
    samples: int = 200_000,
    seed: int = 0,
) -> ProjectionResult:
    """Snap each pair function to its nearest constant/dictator when closer than ``radius * epsilon``.

    Distances to candidates use the pair's own marginal law under ``mu``.
    Returns G, D(F, G) (exact, or a Monte Carlo estimate past the budget) and
    G's normal form or paradox witness.
    """
    if F.k < 3:
        raise UnsupportedK("projection needs at least three alternatives")
    T = F.tables()
    pairwise = {}
    replaced = {}
    for p, f in T.pairwise.items():
        p_plus = (1 + float(pair_mean(mu, p))) / 2
        cand, d = boolfn.nearest_simple(f, p_plus)
        if d < radius * epsilon:
            pairwise[p] = cand.to_function(F.n)
            if d > 0:
                replaced[f"{p[0]},{p[1]}"] = {"candidate": str(cand), "distance": d}
        else:
            pairwise[p] = f
    G = Constitution(F.k, F.n, pairwise)
    try:
        D = distance(F, G, mu, budget)
        exact, stderr = True, None
    except BudgetExceeded:
        from .montecarlo import estimate_distance

        est = estimate_distance(F, G, mu, samples=samples, seed=seed)
        D, exact, stderr = est.mean, False, est.stderr
    try:
        structure = structure_of(G, mu, budget)
    except BudgetExceeded:
        structure = None
    return ProjectionResult(G, D, exact, structure, replaced, stderr)


def nearest_member(F: Constitution, mu: VoteDistribution, budget: int = DEFAULT_BUDGET) -> tuple[Constitution, object]:
    """Closest member of the family by exhaustive search; k = 3 and n <= 2 only."""
    if F.k != 3:
        raise UnsupportedK("exhaustive nearest-member search is provided for k = 3")
    if F.n > 2:
        raise BudgetExceeded(len(list(generate_structures(3, 2))), budget)
    best, best_d = None, None
    for G in enumerate_family(3, F.n).members:
        d = distance(F, G, mu, budget)
        if best_d is None or d < best_d:
            best, best_d = G, d
    return best, best_d
