"""End-to-end acceptance checks, one test per criterion.

Each test records a one-line PASS/FAIL summary that pytest prints in an
"acceptance criteria" section at the end of the run.
"""
import math
import time
from fractions import Fraction

import numpy as np
import pytest

from qarrow.boolfn import SymmetricThreshold
from qarrow.cli import dumps, to_data
from qarrow.constitution import Constitution, paradox_probability_exact, paradox_probability_kalai
from qarrow.core import VoteDistribution
from qarrow.errors import HypothesisFailed
from qarrow.family import classify_single_voter, enumerate_family
from qarrow.gaussian import ThresholdFunction, check_gaussian_arrow_bound, hypercube_vs_gaussian_drift
from qarrow.hyper import FAMILIES, random_pair_suite
from qarrow.montecarlo import block_stream, estimate_paradox
from qarrow.suites import barbera_suite, pivotal_bound_suite, projection_suite, random_constitution, random_symmetric_mu

UNIFORM = VoteDistribution.uniform(3)
GAUSS_LIMIT = 0.25 - 1.5 / math.pi * math.asin(1 / 3)

# Monte Carlo runs shared with the determinism criterion: name -> (args, serialized estimate)
MC_RUNS = {}


def mc_run(name, F, samples, seed, threads):
    est = estimate_paradox(F, UNIFORM, samples=samples, seed=seed, threads=threads)
    MC_RUNS[name] = ((F, samples, seed), dumps(to_data(est)))
    return est


def test_criterion_01_kalai_equals_enumeration(record_acceptance):
    start = time.perf_counter()
    mismatches = 0
    for j in range(500):
        stream = block_stream(1, 10, j)
        F = random_constitution(int(stream.integers(1, 6)), stream)
        mismatches += paradox_probability_kalai(F, UNIFORM) != paradox_probability_exact(F, UNIFORM)
    uniform_time = time.perf_counter() - start
    sym_mismatches = 0
    for j in range(100):
        stream = block_stream(1, 12, j)
        F = random_constitution(int(stream.integers(1, 6)), stream)
        mu = random_symmetric_mu(stream)
        sym_mismatches += paradox_probability_kalai(F, mu) != paradox_probability_exact(F, mu)
    ok = mismatches == 0 and sym_mismatches == 0 and uniform_time < 120
    record_acceptance(
        1, ok, f"500 uniform + 100 symmetric constitutions, mismatches {mismatches}+{sym_mismatches}, uniform run {uniform_time:.1f}s"
    )
    assert ok


def test_criterion_02_condorcet_fixture(record_acceptance):
    F = Constitution.majority(3, 3)
    exact = paradox_probability_exact(F, UNIFORM)
    est = mc_run("majority_n3", F, 1_000_000, 2, threads=1)
    ok = exact == Fraction(1, 18) and est.covers(1 / 18, sigmas=4)
    record_acceptance(2, ok, f"exact {exact}, MC {est.mean:.6f} +- {est.stderr:.6f} at 1e6 samples")
    assert ok


def test_criterion_03_gaussian_limit(record_acceptance):
    start = time.perf_counter()
    est = mc_run("majority_n1001", Constitution.majority(3, 1001), 1_000_000, 3, threads=1)
    elapsed = time.perf_counter() - start
    ok = abs(est.mean - GAUSS_LIMIT) <= 0.004 and elapsed < 300
    record_acceptance(3, ok, f"n=1001 MC {est.mean:.5f} vs limit {GAUSS_LIMIT:.5f}, {elapsed:.1f}s")
    assert ok


def test_criterion_04_barbera(record_acceptance):
    suite = barbera_suite(1000, n_max=8, seed=4)
    ok = suite.attempted == suite.constructed == suite.cyclic == 1000 and not suite.failures
    record_acceptance(4, ok, f"{suite.cyclic}/{suite.attempted} constructed profiles cyclic")
    assert ok


def test_criterion_05_bounds(record_acceptance):
    piv = pivotal_bound_suite(120, n_max=6, seed=5)
    hc = []
    for family in FAMILIES:
        for rho in (1 / 3, -1 / 3):
            n = 12 if family != "random" else 10
            hc.extend(random_pair_suite(n, 1250, rho, family, seed=5, threads=4))
    hc_violations = sum(r.violation for r in hc)
    total = piv.joint_pivotal.instances + piv.two_influential_instances + len(hc)
    violations = len(piv.joint_pivotal.violations) + len(piv.two_influential_violations) + hc_violations
    ok = violations == 0 and total >= 10_000
    record_acceptance(
        5,
        ok,
        f"{total} instances (joint pivotal {piv.joint_pivotal.instances}, two-influential "
        f"{piv.two_influential_instances}, reverse HC {len(hc)}), {violations} violations",
    )
    assert ok


def test_criterion_06_characterization(record_acceptance):
    fams = {n: enumerate_family(3, n) for n in (1, 2)}
    kinds = set()
    for F in fams[1].members:
        kinds.add(classify_single_voter(F).kind)
    ok = (
        all(f.sets_equal for f in fams.values())
        and fams[1].exhaustive_total == 64
        and fams[2].exhaustive_total == 4096
        and kinds == {"Constant", "TopOrBottomFixed", "Identity", "Antidictator"}
    )
    record_acceptance(
        6, ok, f"survivors {fams[1].survivors}/64 and {fams[2].survivors}/4096 equal generated family; n=1 classified into {len(kinds)} kinds"
    )
    assert ok


def test_criterion_07_projection(record_acceptance):
    cases, drawn = projection_suite(200, seed=7)
    failures = [c for c in cases if not c.ok]
    perturbed = sum(c.flips > 0 for c in cases)
    worst = max(float(c.distance) for c in cases)
    ok = len(cases) == 200 and not failures
    record_acceptance(
        7,
        ok,
        f"{len(cases)} cases ({perturbed} with flipped entries) from {drawn} draws, {len(failures)} failures, max D {worst:.4g}",
    )
    assert ok


def test_criterion_08_gaussian_arrow(record_acceptance):
    rng = np.random.default_rng(8)
    eps = 0.5
    reports = []
    while len(reports) < 100:
        fs = [ThresholdFunction(float(t)) for t in rng.uniform(-1.5, 1.5, 3)]
        try:
            reports.append(check_gaussian_arrow_bound(*fs, epsilon=eps))
        except HypothesisFailed:
            continue
    ok = all(r.holds for r in reports)
    lowest = min(r.paradox for r in reports)
    record_acceptance(8, ok, f"100 triples, smallest paradox {lowest:.4g} vs bound {(eps / 2) ** 18:.3g}")
    assert ok


def test_criterion_09_invariance_drift(record_acceptance):
    gaps = {n: hypercube_vs_gaussian_drift(SymmetricThreshold(n, 0), SymmetricThreshold(n, 0), -1 / 3).gap for n in (11, 51, 101)}
    ok = gaps[101] <= 0.02 and gaps[11] > gaps[51] > gaps[101]
    record_acceptance(9, ok, "gaps " + ", ".join(f"n={n}: {g:.5f}" for n, g in gaps.items()))
    assert ok


def test_criterion_10_determinism(record_acceptance):
    if len(MC_RUNS) < 2:
        pytest.skip("needs the Monte Carlo criteria to run first")
    same = []
    for name, ((F, samples, seed), first) in sorted(MC_RUNS.items()):
        for threads in (1, 4):
            again = dumps(to_data(estimate_paradox(F, UNIFORM, samples=samples, seed=seed, threads=threads)))
            same.append(again == first)
    ok = all(same)
    record_acceptance(10, ok, f"{sum(same)}/{len(same)} reruns byte-identical at 1 and 4 threads")
    assert ok
