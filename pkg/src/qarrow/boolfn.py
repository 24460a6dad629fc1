"""Dense functions on the discrete cube and their Walsh-Fourier analysis.

Index convention: a table of length ``2**n`` is indexed so that bit ``i`` of the
index is 1 exactly when coordinate ``x_i = +1``. Fourier coefficients use the
same layout with bit ``i`` set iff ``i`` belongs to the subset ``S``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import ShapeMismatch, ValidationError

MAX_N = 25
_TOL = 1e-12


def popcounts(n: int) -> np.ndarray:
    return np.bitwise_count(np.arange(1 << n, dtype=np.uint64)).astype(np.int64)


def cube_points(n: int) -> np.ndarray:
    """All points of {-1,1}^n as an int8 array of shape (2^n, n), table order."""
    if n < 0 or n > MAX_N:
        raise ValidationError(f"n={n} outside 0..{MAX_N}")
    idx = np.arange(1 << n, dtype=np.int64)[:, None]
    bits = (idx >> np.arange(n, dtype=np.int64)[None, :]) & 1
    return (2 * bits - 1).astype(np.int8)


def signs_to_index(bits) -> np.ndarray:
    """Map sign vectors (last axis = coordinates) to table indices."""
    bits = np.asarray(bits)
    n = bits.shape[-1]
    weights = np.left_shift(np.int64(1), np.arange(n, dtype=np.int64))
    return ((bits > 0).astype(np.int64) * weights).sum(axis=-1)


class BoundedFunction:
    """A function {-1,1}^n -> [-1,1] held as a read-only dense table."""

    def __init__(self, n: int, values):
        if n < 0 or n > MAX_N:
            raise ValidationError(f"n={n} outside 0..{MAX_N}")
        values = np.array(values, dtype=np.float64).reshape(-1)
        if values.size != 1 << n:
            raise ShapeMismatch(f"table of length {values.size} does not match n={n}")
        if values.size and (values.max() > 1 + _TOL or values.min() < -1 - _TOL):
            raise ValidationError("values must lie in [-1, 1]")
        values.flags.writeable = False
        self.n = n
        self.values = values
        self._check()

    def _check(self):
        pass

    def __call__(self, x) -> float:
        return float(self.values[int(signs_to_index(x))])

    def at(self, indices):
        return self.values[indices]

    @property
    def mean(self) -> float:
        return float(self.values.mean())

    @property
    def variance(self) -> float:
        return float(np.mean(self.values**2) - self.values.mean() ** 2)

    def __eq__(self, other):
        return (
            isinstance(other, BoundedFunction)
            and self.n == other.n
            and np.array_equal(self.values, other.values)
        )

    def __hash__(self):
        return hash((self.n, self.values.tobytes()))

    def __neg__(self):
        return type(self)(self.n, -self.values)

    def __repr__(self):
        return f"{type(self).__name__}(n={self.n})"

    def to_json(self) -> dict:
        return {"n": self.n, "values": [float(v) for v in self.values]}


class BooleanFunction(BoundedFunction):
    """A {-1,+1}-valued table."""

    def _check(self):
        if not np.all(np.abs(self.values) == 1.0):
            raise ValidationError("Boolean function values must be +1 or -1")

    @property
    def ints(self) -> np.ndarray:
        return self.values.astype(np.int8)

    def is_constant(self) -> bool:
        return bool(np.all(self.values == self.values[0]))

    def negate_inputs(self) -> "BooleanFunction":
        """x -> f(-x)."""
        return BooleanFunction(self.n, self.values[::-1])

    def fix(self, coord: int, sign: int) -> "BooleanFunction":
        """Restriction with coordinate ``coord`` fixed to ``sign``; remaining coordinates re-indexed."""
        if not 0 <= coord < self.n:
            raise ValidationError(f"coordinate {coord} outside 0..{self.n - 1}")
        t = self.values.reshape((2,) * self.n)
        axis = self.n - 1 - coord
        sub = np.take(t, 1 if sign > 0 else 0, axis=axis)
        return BooleanFunction(self.n - 1, sub.reshape(-1))

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "packed_bits": pack_bits(self.values > 0),
            "encoding": "msb-first over index 0..2^n-1",
        }


@dataclass(frozen=True)
class FourierExpansion:
    n: int
    coeffs: np.ndarray

    def to_function(self) -> BoundedFunction:
        return BoundedFunction(self.n, np.clip(_butterfly_inverse(self.coeffs), -1.0, 1.0))

    def weight(self, degree: int) -> float:
        return float(np.sum(self.coeffs[popcounts(self.n) == degree] ** 2))


@dataclass(frozen=True)
class SymmetricThreshold:
    """``x -> +1 if sum(x) > threshold else -1`` for arbitrary ``n``.

    Stands in for a truth table when ``n`` is far beyond the dense cap
    (majority on 1001 voters); ``threshold = 0`` with odd ``n`` is majority.
    """

    n: int
    threshold: float = 0.0

    def from_sums(self, sums):
        return np.where(np.asarray(sums) > self.threshold, 1, -1).astype(np.int8)

    def __call__(self, x) -> int:
        return int(self.from_sums(np.sum(x)))

    def to_table(self) -> BooleanFunction:
        if self.n > MAX_N:
            raise ValidationError(f"n={self.n} too large to tabulate")
        sums = 2 * popcounts(self.n) - self.n
        return BooleanFunction(self.n, self.from_sums(sums))

    def is_constant(self) -> bool:
        return self.threshold >= self.n or self.threshold < -self.n

    def negate_inputs(self):
        raise ValidationError("negated-input threshold rules are not representable; tabulate first")

    def to_json(self) -> dict:
        return {"n": self.n, "rule": "count-threshold", "threshold": self.threshold}


# ----------------------------------------------------------------------------
# transforms


def _butterfly(values: np.ndarray) -> np.ndarray:
    """Unnormalised Walsh transform: out[S] = sum_x f(x) chi_S(x)."""
    a = np.array(values, copy=True)
    n = int(a.size).bit_length() - 1
    for i in range(n):
        v = a.reshape(-1, 2, 1 << i)
        lo = v[:, 0, :].copy()
        hi = v[:, 1, :]
        v[:, 0, :] = lo + hi
        v[:, 1, :] = hi - lo
    return a


def _butterfly_inverse(coeffs: np.ndarray) -> np.ndarray:
    a = np.array(coeffs, dtype=np.float64, copy=True)
    n = int(a.size).bit_length() - 1
    for i in range(n):
        v = a.reshape(-1, 2, 1 << i)
        c0 = v[:, 0, :].copy()
        c1 = v[:, 1, :]
        v[:, 0, :] = c0 - c1
        v[:, 1, :] = c0 + c1
    return a


def fwht(f: BoundedFunction) -> FourierExpansion:
    """Walsh-Fourier coefficients ``E[f(x) chi_S(x)]`` in O(n 2^n)."""
    return FourierExpansion(f.n, _butterfly(f.values) / (1 << f.n))


def walsh_int(f: BooleanFunction) -> np.ndarray:
    """Integer coefficients ``sum_x f(x) chi_S(x)`` (exact; divide by 2^n for f-hat)."""
    return _butterfly(np.rint(f.values).astype(np.int64))


# ----------------------------------------------------------------------------
# influences


def _check_coord(f, i):
    if not 0 <= i < f.n:
        raise ValidationError(f"coordinate {i} outside 0..{f.n - 1}")


def influence(f: BoundedFunction, i: int) -> float:
    """Influence of coordinate ``i``.

    Boolean functions use the flip probability; bounded functions the spectral
    sum over sets containing ``i`` (the two agree on Boolean inputs).
    """
    _check_coord(f, i)
    if isinstance(f, BooleanFunction):
        idx = np.arange(1 << f.n)
        return float(np.mean(f.values != f.values[idx ^ (1 << i)]))
    return spectral_influence(f, i)


def spectral_influence(f: BoundedFunction, i: int, expansion: FourierExpansion | None = None) -> float:
    _check_coord(f, i)
    c = (expansion or fwht(f)).coeffs
    mask = (np.arange(1 << f.n) >> i) & 1
    return float(np.sum(c[mask == 1] ** 2))


def influences(f: BoundedFunction) -> np.ndarray:
    return np.array([influence(f, i) for i in range(f.n)])


def low_degree_influence(f: BoundedFunction, i: int, d: int, expansion: FourierExpansion | None = None) -> float:
    """``sum_{S: |S| <= d, i in S} f-hat(S)^2``."""
    _check_coord(f, i)
    if d < 0:
        raise ValidationError("degree must be nonnegative")
    c = (expansion or fwht(f)).coeffs
    idx = np.arange(1 << f.n)
    mask = (((idx >> i) & 1) == 1) & (popcounts(f.n) <= d)
    return float(np.sum(c[mask] ** 2))


# ----------------------------------------------------------------------------
# noise and correlation


def _product_weights(rho: Sequence[float]) -> np.ndarray:
    w = np.ones(1)
    for r in rho:
        w = np.concatenate([w, w * r])
    return w


def _rho_vector(n, rho):
    if np.isscalar(rho) or isinstance(rho, Fraction):
        rho = [rho] * n
    rho = list(rho)
    if len(rho) != n:
        raise ShapeMismatch(f"need {n} correlations, got {len(rho)}")
    if any(abs(r) > 1 for r in rho):
        raise ValidationError("correlations must lie in [-1, 1]")
    return rho


def noise_operator(f: BoundedFunction, rho) -> BoundedFunction:
    """Bonami-Beckner operator: scales ``f-hat(S)`` by ``prod_{i in S} rho_i``."""
    rho = _rho_vector(f.n, rho)
    coeffs = fwht(f).coeffs * _product_weights([float(r) for r in rho])
    return FourierExpansion(f.n, coeffs).to_function()


def correlated_expectation(f: BoundedFunction, g: BoundedFunction, rho, exact: bool = False):
    """``E[f(X) g(Y)]`` with (X_i, Y_i) independent, uniform marginals, ``E[X_i Y_i] = rho_i``.

    Evaluated as ``sum_S f-hat(S) g-hat(S) prod_{i in S} rho_i``. With
    ``exact=True`` both functions must be integer valued and the result is a
    :class:`~fractions.Fraction` (rho entries are converted exactly).
    """
    if f.n != g.n:
        raise ShapeMismatch(f"functions on {f.n} and {g.n} coordinates")
    n = f.n
    rho = _rho_vector(n, rho)
    if not exact:
        return float(np.dot(fwht(f).coeffs * fwht(g).coeffs, _product_weights([float(r) for r in rho])))
    F = walsh_int(f).astype(object)
    G = walsh_int(g).astype(object)
    h = F * G
    for i in reversed(range(n)):
        r = Fraction(rho[i])
        h = h.reshape(2, -1)
        h = h[0] + r * h[1]
    return Fraction(h.reshape(-1)[0]) / (4**n)


def average_over_coords(f: BoundedFunction, S: Iterable[int]) -> BoundedFunction:
    """``x -> E[f(Y) | Y_j = x_j for j not in S]``."""
    S = sorted(set(S))
    for i in S:
        _check_coord(f, i)
    if not S:
        return f
    t = f.values.reshape((2,) * f.n)
    axes = tuple(f.n - 1 - i for i in S)
    avg = t.mean(axis=axes, keepdims=True)
    return BoundedFunction(f.n, np.broadcast_to(avg, t.shape).reshape(-1))


# ----------------------------------------------------------------------------
# nearest constant / dictator


@dataclass(frozen=True)
class SimpleCandidate:
    """Constant ``sign`` (voter None) or ``sign * x_voter``."""

    sign: int
    voter: int | None = None

    def to_function(self, n: int) -> BooleanFunction:
        if self.voter is None:
            return constant(n, self.sign)
        return dictator(n, self.voter, self.sign)

    def __str__(self):
        if self.voter is None:
            return f"const({self.sign:+d})"
        return f"{'' if self.sign > 0 else '-'}x_{self.voter}"


def simple_candidates(n: int) -> list[SimpleCandidate]:
    """Constants, then x_j by j, then -x_j by j."""
    return (
        [SimpleCandidate(1), SimpleCandidate(-1)]
        + [SimpleCandidate(1, j) for j in range(n)]
        + [SimpleCandidate(-1, j) for j in range(n)]
    )


def cube_weights(n: int, p_plus=None) -> np.ndarray:
    """Probability of each cube point under independent coordinates with P[x_i=+1] = p_plus."""
    if p_plus is None:
        return np.full(1 << n, 1.0 / (1 << n))
    p = float(p_plus)
    ones = popcounts(n)
    return p**ones * (1 - p) ** (n - ones)


def distance(f: BooleanFunction, g: BooleanFunction, p_plus=None) -> float:
    if f.n != g.n:
        raise ShapeMismatch("functions on different cubes")
    return float(np.sum(cube_weights(f.n, p_plus)[f.values != g.values]))


def nearest_simple(f: BooleanFunction, p_plus=None) -> tuple[SimpleCandidate, float]:
    """Closest of the 2n+2 constants/dictators/anti-dictators; first in candidate order on ties."""
    best, best_d = None, math.inf
    for cand in simple_candidates(f.n):
        d = distance(f, cand.to_function(f.n), p_plus)
        if d < best_d - 1e-15:
            best, best_d = cand, d
    return best, best_d


# ----------------------------------------------------------------------------
# constructors


def constant(n: int, sign: int = 1) -> BooleanFunction:
    return BooleanFunction(n, np.full(1 << n, 1.0 if sign > 0 else -1.0))


def dictator(n: int, i: int, sign: int = 1) -> BooleanFunction:
    if not 0 <= i < n:
        raise ValidationError(f"voter {i} outside 0..{n - 1}")
    return BooleanFunction(n, sign * cube_points(n)[:, i].astype(np.float64))


def parity(n: int, coords: Iterable[int] | None = None) -> BooleanFunction:
    coords = range(n) if coords is None else list(coords)
    pts = cube_points(n)
    vals = np.ones(1 << n)
    for i in coords:
        vals = vals * pts[:, i]
    return BooleanFunction(n, vals)


def weighted_majority(weights: Sequence[float], threshold: float = 0.0) -> BooleanFunction:
    """``sgn(w . x - threshold)`` with ties sent to +1."""
    w = np.asarray(weights, dtype=np.float64)
    s = cube_points(len(w)) @ w
    return BooleanFunction(len(w), np.where(s - threshold >= 0, 1.0, -1.0))


def majority(n: int) -> BooleanFunction:
    if n % 2 == 0:
        raise ValidationError("majority needs an odd number of voters")
    return weighted_majority(np.ones(n))


def from_callable(n: int, fn: Callable[[np.ndarray], float]) -> BooleanFunction:
    return BooleanFunction(n, [fn(x) for x in cube_points(n)])


def random_boolean(n: int, rng: np.random.Generator, p_plus: float = 0.5) -> BooleanFunction:
    return BooleanFunction(n, np.where(rng.random(1 << n) < p_plus, 1.0, -1.0))


# ----------------------------------------------------------------------------
# truth-table files


def pack_bits(bits) -> str:
    """Hex of the bit string b_0 b_1 ... (index 0 is the most significant bit), zero padded to whole bytes."""
    return np.packbits(np.asarray(bits, dtype=np.uint8), bitorder="big").tobytes().hex()


def unpack_bits(hexstr: str, count: int) -> np.ndarray:
    raw = np.frombuffer(bytes.fromhex(hexstr), dtype=np.uint8)
    bits = np.unpackbits(raw, bitorder="big")
    if bits.size < count:
        raise ValidationError(f"packed_bits holds {bits.size} bits, need {count}")
    if np.any(bits[count:]):
        raise ValidationError("nonzero padding in packed_bits")
    return bits[:count]


def function_from_json(obj: dict):
    n = int(obj["n"])
    if "packed_bits" in obj:
        enc = obj.get("encoding", "msb-first over index 0..2^n-1").replace("−", "-")
        if not enc.startswith("msb-first"):
            raise ValidationError(f"unsupported encoding {enc!r}")
        bits = unpack_bits(obj["packed_bits"], 1 << n)
        return BooleanFunction(n, np.where(bits == 1, 1.0, -1.0))
    if "values" in obj:
        vals = np.asarray(obj["values"], dtype=np.float64)
        if np.all(np.abs(vals) == 1.0):
            return BooleanFunction(n, vals)
        return BoundedFunction(n, vals)
    if obj.get("rule") == "count-threshold":
        return SymmetricThreshold(n, float(obj.get("threshold", 0.0)))
    raise ValidationError("truth-table object needs packed_bits, values or rule")


def load_function(path):
    with open(path) as fh:
        return function_from_json(json.load(fh))
