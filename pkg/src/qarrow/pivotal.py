"""Pivotal voters, Barbera's paradox profile and the two-influential-voter bounds."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import boolfn
from .boolfn import BooleanFunction
from .constitution import (
    CYCLIC_PAIRS,
    DEFAULT_BUDGET,
    Constitution,
    cyclic_functions,
    evaluate,
    is_transitive,
    paradox_probability_exact,
)
from .core import Profile, Ranking, VoteDistribution, above_signs, pair_joint
from .errors import (
    AsymmetricDistribution,
    BudgetExceeded,
    ConstructionFailed,
    SameVoter,
    UnsupportedK,
    ValidationError,
)


@dataclass(frozen=True)
class PivotWitness:
    voter: int
    others: tuple[int, ...]

    def point(self, sign: int) -> np.ndarray:
        """Full input with the pivotal voter's bit set to ``sign``."""
        x = list(self.others)
        x.insert(self.voter, sign)
        return np.array(x, dtype=np.int8)


def pivotal_mask(f: BooleanFunction, i: int) -> np.ndarray:
    """Indicator over the cube of inputs at which flipping ``x_i`` changes ``f``."""
    if not 0 <= i < f.n:
        raise ValidationError(f"voter {i} outside 0..{f.n - 1}")
    idx = np.arange(1 << f.n)
    return f.values != f.values[idx ^ (1 << i)]


def find_pivot(f: BooleanFunction, i: int) -> PivotWitness | None:
    """Lowest-index assignment of the other voters at which voter ``i`` is pivotal."""
    mask = pivotal_mask(f, i)
    hits = np.flatnonzero(mask & (((np.arange(1 << f.n) >> i) & 1) == 0))
    if hits.size == 0:
        return None
    x = boolfn.cube_points(f.n)[hits[0]]
    return PivotWitness(i, tuple(int(v) for v in np.delete(x, i)))


_TRIPLE_TO_RANKING = {
    tuple(int(s) for s in col): r
    for r, col in enumerate(np.stack([above_signs(3, a, b) for a, b in CYCLIC_PAIRS], axis=1))
}


def ranking_from_triple(triple) -> Ranking:
    """The unique ranking of a, b, c with signs (x^{a>b}, x^{b>c}, x^{c>a}) = triple."""
    key = tuple(int(s) for s in triple)
    if key not in _TRIPLE_TO_RANKING:
        raise ValidationError(f"{key} is not the sign pattern of a ranking")
    return Ranking.from_index(3, _TRIPLE_TO_RANKING[key])


def barbera_construct(F: Constitution, w1: PivotWitness, w2: PivotWitness) -> Profile:
    """A profile with cyclic outcome, given voter ``w1.voter`` pivotal for f^{a>b}
    and a different voter ``w2.voter`` pivotal for f^{b>c}.

    x^{a>b} follows w1, x^{b>c} follows w2, and x^{c>a} is the negation of
    x^{a>b} except at w1's voter, where it negates x^{b>c}. The two free bits are
    tried +1 before -1 until all three pairwise outcomes agree.
    """
    if F.k != 3:
        raise UnsupportedK(f"construction needs k = 3, got {F.k}")
    if w1.voter == w2.voter:
        raise SameVoter(f"both witnesses use voter {w1.voter}")
    f_ab, f_bc, f_ca = cyclic_functions(F)
    i, j = w1.voter, w2.voter
    for f, w in ((f_ab, w1), (f_bc, w2)):
        p = w.point(1)
        q = w.point(-1)
        if f(p) == f(q):
            raise ValidationError(f"voter {w.voter} is not pivotal at the given witness")
    x0 = w1.point(1)
    y0 = w2.point(1)
    z = -x0.copy()
    z[i] = -y0[i]
    target = f_ca(z)
    for xs, ys in itertools.product((1, -1), repeat=2):
        x = x0.copy()
        y = y0.copy()
        x[i] = xs
        y[j] = ys
        if f_ab(x) == target and f_bc(y) == target:
            profile = Profile(tuple(ranking_from_triple((x[v], y[v], z[v])) for v in range(F.n)))
            if is_transitive(evaluate(F, profile)):
                raise ConstructionFailed(f"profile {profile.to_json()} evaluated transitive")
            return profile
    raise ConstructionFailed(f"no choice of free bits matches f^(c>a) = {target} at witnesses {w1}, {w2}")


def barbera_from_constitution(F: Constitution) -> tuple[Profile, PivotWitness, PivotWitness] | None:
    """Search voters i != j pivotal for f^{a>b} and f^{b>c} (lowest first) and build the profile."""
    f_ab, f_bc, _ = cyclic_functions(F)
    for i in range(F.n):
        w1 = find_pivot(f_ab, i)
        if w1 is None:
            continue
        for j in range(F.n):
            if j == i:
                continue
            w2 = find_pivot(f_bc, j)
            if w2 is not None:
                return barbera_construct(F, w1, w2), w1, w2
    return None


def _kernel_form(p1: np.ndarray, p2: np.ndarray, Q, n: int):
    """sum_{x,y} p1(x) p2(y) prod_l Q[x_l, y_l] with Q indexed by bit (0 = -1, 1 = +1)."""
    t = p2.reshape((2,) * n) if n else p2.reshape(())
    Qa = np.array(Q, dtype=object if isinstance(Q[0][0], Fraction) else np.float64)
    if Qa.dtype == object:
        t = t.astype(object)
    for ax in range(n):
        t = np.moveaxis(np.tensordot(Qa, t, axes=([1], [ax])), 0, ax)
    vals = t.reshape(-1)[np.flatnonzero(p1)]
    if Qa.dtype == object:
        return sum(vals, Fraction(0))
    return float(np.sum(vals))


def joint_pivotal_probability(
    F: Constitution,
    i: int,
    j: int,
    mu: VoteDistribution,
    pairs=((0, 1), (1, 2)),
    budget: int = DEFAULT_BUDGET,
):
    """P[i pivotal for f^{p} and j pivotal for f^{q}] for (p, q) = ``pairs``.

    Computed on pair-encoding space: the event is a product of an event on
    x^{p} and one on x^{q}, whose per-voter joint law comes from ``mu``.
    """
    if F.k != 3:
        raise UnsupportedK(f"needs k = 3, got {F.k}")
    if i == j:
        raise SameVoter("joint pivotality needs two distinct voters")
    if 4**F.n > budget:
        raise BudgetExceeded(4**F.n, budget)
    G = F.tables()
    f, g = G.oriented(*pairs[0]), G.oriented(*pairs[1])
    p1 = pivotal_mask(f, i)
    p2 = pivotal_mask(g, j).astype(np.int64)
    joint = pair_joint(mu, pairs[0], pairs[1])
    Q = [[joint[(-1, -1)], joint[(-1, 1)]], [joint[(1, -1)], joint[(1, 1)]]]
    if not mu.rational:
        Q = [[float(v) for v in row] for row in Q]
    return _kernel_form(p1, p2, Q, F.n)


def _bound_exponent(mu: VoteDistribution):
    if mu.k != 3:
        raise UnsupportedK("bounds are stated for three alternatives")
    if not mu.symmetric:
        raise AsymmetricDistribution("bounds need a reversal-symmetric distribution")
    if mu.alpha <= 0:
        raise ValidationError("bounds need every ranking to have positive probability")
    return 1 / (2 * mu.alpha)


@dataclass
class TwoInfluentialReport:
    epsilon: float
    paradox: object
    bound: float
    holds: bool
    vacuous: bool
    witness: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "paradox": self.paradox,
            "bound": self.bound,
            "holds": self.holds,
            "vacuous": self.vacuous,
            "witness": self.witness,
        }


def influence_table(F: Constitution) -> np.ndarray:
    """Row per cyclic function (ab, bc, ca), column per voter."""
    return np.array([boolfn.influences(f) for f in cyclic_functions(F)])


def two_influential_epsilon(F: Constitution) -> tuple[float, dict]:
    """max over distinct functions f, g and distinct voters i, j of min(I_i(f), I_j(g))."""
    inf = influence_table(F)
    names = ("ab", "bc", "ca")
    best, arg = 0.0, {}
    for p, q in itertools.permutations(range(3), 2):
        for i, j in itertools.permutations(range(F.n), 2):
            e = min(inf[p, i], inf[q, j])
            if e > best:
                best, arg = float(e), {"f": names[p], "g": names[q], "i": i, "j": j}
    return best, arg


def check_two_influential_bound(F: Constitution, mu: VoteDistribution, budget: int = DEFAULT_BUDGET) -> TwoInfluentialReport:
    """Compare P(F) with beta^2 eps^{1/(2 alpha)} (beta = alpha for k = 3; eps^3/36 when uniform)."""
    expo = _bound_exponent(mu)
    eps, arg = two_influential_epsilon(F)
    paradox = paradox_probability_exact(F, mu, budget)
    alpha = float(mu.alpha)
    bound = alpha**2 * eps ** float(expo) if eps > 0 else 0.0
    return TwoInfluentialReport(eps, paradox, bound, float(paradox) >= bound * (1 - 1e-12), eps == 0.0, arg)


@dataclass
class JointPivotalCheck:
    instances: int = 0
    violations: list = field(default_factory=list)
    min_slack: float = float("inf")


def check_joint_pivotal_bound(F: Constitution, mu: VoteDistribution, out: JointPivotalCheck | None = None) -> JointPivotalCheck:
    """P[B] >= min(I_i(f), I_j(g))^{1/(2 alpha)} over distinct cyclic pairs and distinct voters."""
    expo = float(_bound_exponent(mu))
    out = out or JointPivotalCheck()
    inf = influence_table(F)
    for p, q in itertools.permutations(range(3), 2):
        for i, j in itertools.permutations(range(F.n), 2):
            eps = min(inf[p, i], inf[q, j])
            if eps == 0:
                continue
            prob = float(joint_pivotal_probability(F, i, j, mu, (CYCLIC_PAIRS[p], CYCLIC_PAIRS[q])))
            bound = eps**expo
            out.instances += 1
            out.min_slack = min(out.min_slack, prob - bound)
            if prob < bound * (1 - 1e-12):
                out.violations.append({"pairs": (p, q), "voters": (i, j), "prob": prob, "bound": bound})
    return out
