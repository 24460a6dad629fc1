"""Brute-force oracles shared by the tests.

These walk profiles one at a time with plain Python loops and never touch the
vectorized enumeration, so they give an independent check of it.
"""
import itertools
from fractions import Fraction

import numpy as np
import pytest

ACCEPTANCE_LINES = []


def orders(k):
    return list(itertools.permutations(range(k)))


def brute_outcome(F, profile_orders):
    """{(a, b): sign} for canonical pairs, evaluating each pair function on its sign vector."""
    out = {}
    for a, b in itertools.combinations(range(F.k), 2):
        x = np.array([1 if o.index(a) < o.index(b) else -1 for o in profile_orders])
        out[(a, b)] = int(F.pairwise[(a, b)](x))
    return out


def brute_transitive(k, outcome):
    """True iff some linear order agrees with every pairwise decision."""
    for perm in itertools.permutations(range(k)):
        pos = {a: i for i, a in enumerate(perm)}
        if all((pos[a] < pos[b]) == (s > 0) for (a, b), s in outcome.items()):
            return True
    return False


def brute_probability(k, n, mu, event):
    """Sum of mu-weights over profiles (tuples of orders) where ``event`` holds."""
    idx = {o: i for i, o in enumerate(orders(k))}
    total = Fraction(0) if mu.rational else 0.0
    for prof in itertools.product(orders(k), repeat=n):
        if event(prof):
            w = Fraction(1) if mu.rational else 1.0
            for o in prof:
                w *= mu.probs[idx[o]]
            total += w
    return total


def brute_paradox(F, mu):
    return brute_probability(F.k, F.n, mu, lambda p: not brute_transitive(F.k, brute_outcome(F, p)))


def brute_correlated(f, g, rho):
    """E[f(X) g(Y)] summed over all 4^n pairs with P(x_i, y_i) = (1 + rho_i x_i y_i) / 4."""
    n = f.n
    rho = [rho] * n if np.ndim(rho) == 0 else list(rho)
    pts = list(itertools.product((-1, 1), repeat=n))
    total = 0.0
    for x in pts:
        fx = f(np.array(x))
        for y in pts:
            w = 1.0
            for i in range(n):
                w *= (1 + rho[i] * x[i] * y[i]) / 4
            total += w * fx * g(np.array(y))
    return total


@pytest.fixture
def record_acceptance():
    def record(number, ok, detail):
        line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
