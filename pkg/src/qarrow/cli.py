"""Paradox probabilities, family structure and bound checks for IIA constitutions.

Every report is one JSON document (or CSV for ``hyper``) carrying the tool
version, the seed and a sha256 of each input, written with sorted keys so
identical runs produce identical bytes. Exit status: 0 on success, 2 on
invalid input, 3 when an enumeration budget is exceeded.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import io
import json
import math
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__, boolfn
from .constitution import (
    DEFAULT_BUDGET,
    Constitution,
    evaluate,
    is_transitive,
    kalai_terms,
    paradox_probability_exact,
    paradox_probability_kalai,
    transitivity_probability_exact,
)
from .core import Ranking, VoteDistribution
from .errors import AsymmetricDistribution, QArrowError, UnsupportedK, ValidationError
from .family import NotInFamily, enumerate_family, project_to_family, structure_of
from .gaussian import (
    GaussianTripleSpec,
    ThresholdFunction,
    disagreement_probabilities,
    gaussian_paradox_mc,
    gaussian_paradox_probability,
)
from .hyper import FAMILIES, random_pair_suite
from .montecarlo import estimate_distance, estimate_paradox
from .pivotal import barbera_from_constitution
from .suites import pivotal_bound_suite, projection_suite

COMMANDS = ("analyze", "structure", "project", "barbera", "enumerate-family", "mc", "gauss", "hyper", "bounds")


@dataclass
class RunConfig:
    subcommand: str
    inputs: list = field(default_factory=list)
    epsilon: float | None = None
    rho: float | None = None
    seed: int = 0
    samples: int = 100_000
    budget: int = DEFAULT_BUDGET
    output_format: str = "json"
    threads: int = 1
    floats: bool = False
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.subcommand not in COMMANDS:
            raise ValidationError(f"unknown subcommand {self.subcommand!r}")
        if self.budget < 1:
            raise ValidationError("budget must be at least 1")
        if self.threads < 1:
            raise ValidationError("threads must be at least 1")
        if self.output_format not in ("json", "csv"):
            raise ValidationError(f"unknown output format {self.output_format!r}")


# ----------------------------------------------------------------------------
# serialization


def to_data(obj, floats: bool = False):
    """JSON-ready form; rationals become {"num", "den", "float"} unless ``floats``."""
    if isinstance(obj, Fraction):
        if floats:
            return float(obj)
        return {"num": obj.numerator, "den": obj.denominator, "float": float(obj)}
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(obj, dict):
        return {str(k): to_data(v, floats) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_data(v, floats) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_data(v, floats) for v in obj.tolist()]
    if hasattr(obj, "to_json"):
        return to_data(obj.to_json(), floats)
    if dataclasses.is_dataclass(obj):
        return to_data(dataclasses.asdict(obj), floats)
    if obj is None or isinstance(obj, str):
        return obj
    return str(obj)


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


# ----------------------------------------------------------------------------
# inputs


def _read_bytes(source: str) -> bytes:
    """A path, or ``@name`` for a bundled fixture."""
    if source.startswith("@"):
        res = resources.files("qarrow") / "data" / f"{source[1:]}.json"
        if not res.is_file():
            raise ValidationError(f"no bundled fixture named {source[1:]!r}")
        return res.read_bytes()
    try:
        return Path(source).read_bytes()
    except OSError as exc:
        raise ValidationError(f"cannot read {source}: {exc.strerror}") from exc


class Inputs:
    def __init__(self):
        self.hashes = {}

    def json(self, source: str):
        raw = _read_bytes(source)
        self.hashes[source] = hashlib.sha256(raw).hexdigest()
        try:
            return json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{source} is not valid JSON: {exc.msg}") from exc

    def constitution(self, source: str) -> Constitution:
        try:
            return Constitution.from_json(self.json(source))
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"{source} is not a constitution file: missing {exc}") from exc

    def distribution(self, source: str | None, k: int) -> VoteDistribution:
        if source is None or source == "uniform":
            return VoteDistribution.uniform(k)
        try:
            return VoteDistribution.from_json(self.json(source))
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"{source} is not a distribution file: missing {exc}") from exc


# ----------------------------------------------------------------------------
# fixtures


def fixture_constitutions() -> dict[str, Constitution]:
    """The canonical constitutions used by the acceptance tests."""
    out = {
        "dictator_n3_v0": Constitution.dictator(3, 3, 0),
        "dictator_n3_v2": Constitution.dictator(3, 3, 2),
        "antidictator_n3_v1": Constitution.dictator(3, 3, 1, -1),
        "constant_abc_n3": Constitution.constant(Ranking.parse("a>b>c"), 3),
        "constant_cab_n3": Constitution.constant(Ranking.parse("c>a>b"), 3),
        "parity_n3": Constitution.uniform_rule(3, boolfn.parity(3)),
    }
    for n in (1, 3, 5):
        out[f"majority_n{n}"] = Constitution.majority(3, n, tabulate=True)
    for voter, entry in ((0, 3), (1, 6)):
        D = Constitution.dictator(3, 3, voter)
        v = D.pairwise[(0, 1)].values.copy()
        v[entry] *= -1
        pairwise = dict(D.pairwise)
        pairwise[(0, 1)] = boolfn.BooleanFunction(3, v)
        out[f"perturbed_dictator_n3_v{voter}"] = Constitution(3, 3, pairwise)
    return out


def emit_fixtures(directory) -> list[str]:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    written = []
    for name, F in fixture_constitutions().items():
        (d / f"{name}.json").write_text(dumps(F.to_json()))
        written.append(f"{name}.json")
    (d / "uniform3.json").write_text(dumps(VoteDistribution.uniform(3).to_json()))
    written.append("uniform3.json")
    return sorted(written)


# ----------------------------------------------------------------------------
# subcommands


def _influences(F: Constitution) -> dict:
    out = {}
    for (a, b), f in F.tables().pairwise.items():
        out[f"{a},{b}"] = [float(v) for v in boolfn.influences(f)]
    return out


def cmd_analyze(cfg: RunConfig, inp: Inputs):
    F = inp.constitution(cfg.inputs[0])
    mu = inp.distribution(cfg.options.get("mu"), F.k)
    out = {
        "k": F.k,
        "n": F.n,
        "paradox_exact": paradox_probability_exact(F, mu, cfg.budget, cfg.threads),
        "transitive_exact": transitivity_probability_exact(F, mu, cfg.budget),
        "influences": _influences(F),
        "paradox_kalai": None,
        "kalai_terms": None,
    }
    try:
        out["kalai_terms"] = kalai_terms(F, mu)
        out["paradox_kalai"] = paradox_probability_kalai(F, mu)
    except (UnsupportedK, AsymmetricDistribution) as exc:
        out["kalai_note"] = str(exc)
    return out


def _witness_report(F: Constitution, w: NotInFamily) -> dict:
    return {"in_family": False, "witness": w.witness.to_json(), "outcome": evaluate(F, w.witness).describe()}


def cmd_structure(cfg: RunConfig, inp: Inputs):
    F = inp.constitution(cfg.inputs[0])
    s = structure_of(F, budget=cfg.budget)
    if isinstance(s, NotInFamily):
        return _witness_report(F, s)
    return {"in_family": True, "structure": s.to_json()}


def cmd_project(cfg: RunConfig, inp: Inputs):
    if cfg.epsilon is None:
        raise ValidationError("project needs --epsilon")
    F = inp.constitution(cfg.inputs[0])
    mu = inp.distribution(cfg.options.get("mu"), F.k)
    res = project_to_family(F, cfg.epsilon, mu, cfg.budget, samples=cfg.samples, seed=cfg.seed)
    out = res.to_json()
    out["projected"] = res.G.to_json()
    out["within_radius"] = float(res.distance) <= 10 * cfg.epsilon
    return out


def cmd_barbera(cfg: RunConfig, inp: Inputs):
    F = inp.constitution(cfg.inputs[0])
    found = barbera_from_constitution(F)
    if found is None:
        raise ValidationError("no two distinct voters are pivotal for f^(a>b) and f^(b>c)")
    profile, w1, w2 = found
    t = evaluate(F, profile)
    return {
        "profile": profile.to_json(),
        "outcome": t.describe(),
        "cyclic": not is_transitive(t),
        "witnesses": [{"voter": w.voter, "others": list(w.others)} for w in (w1, w2)],
    }


def cmd_enumerate_family(cfg: RunConfig, inp: Inputs):
    e = enumerate_family(3, int(cfg.options.get("n", 1)), cfg.budget)
    out = e.to_json()
    if cfg.options.get("list"):
        out["structures"] = [s.to_json() for s in e.structures]
    return out


def cmd_mc(cfg: RunConfig, inp: Inputs):
    F = inp.constitution(cfg.inputs[0])
    mu = inp.distribution(cfg.options.get("mu"), F.k)
    against = cfg.options.get("against")
    if against:
        G = inp.constitution(against)
        est = estimate_distance(F, G, mu, cfg.samples, cfg.seed, cfg.threads)
        return {"quantity": "distance", "estimate": est}
    return {"quantity": "paradox", "estimate": estimate_paradox(F, mu, cfg.samples, cfg.seed, cfg.threads)}


def _parse_threshold(text: str) -> float:
    t = text.strip().lower()
    if t in ("inf", "+inf"):
        return math.inf
    if t == "-inf":
        return -math.inf
    try:
        return float(t)
    except ValueError as exc:
        raise ValidationError(f"bad threshold {text!r}") from exc


def cmd_gauss(cfg: RunConfig, inp: Inputs):
    rho = -1 / 3 if cfg.rho is None else cfg.rho
    spec = GaussianTripleSpec(int(cfg.options.get("n", 1)), rho)
    raw = cfg.options.get("thresholds", "0,0,0")
    ts = [_parse_threshold(t) for t in (raw.split(",") if isinstance(raw, str) else raw)]
    if len(ts) != 3:
        raise ValidationError("gauss needs exactly three thresholds")
    fs = [ThresholdFunction(t) for t in ts]
    eps = 0.5 if cfg.epsilon is None else cfg.epsilon
    closed = gaussian_paradox_probability(*fs, spec)
    est = gaussian_paradox_mc(*fs, spec, cfg.samples, cfg.seed, cfg.threads)
    worst = max(disagreement_probabilities(*fs, spec).values())
    return {
        "closed_form": closed,
        "mc_estimate": est.mean,
        "mc_stderr": est.stderr,
        "epsilon": eps,
        "bound": (eps / 2) ** 18,
        "hypothesis_ok": worst <= 1 - eps + 1e-12,
        "hypothesis_max": worst,
        "thresholds": ts,
        "rho": rho,
    }


def cmd_hyper(cfg: RunConfig, inp: Inputs):
    rho = 1 / 3 if cfg.rho is None else cfg.rho
    reports = random_pair_suite(
        int(cfg.options.get("n", 8)), int(cfg.options.get("pairs", 100)), rho, cfg.options.get("family", "random"), cfg.seed, cfg.threads
    )
    return {"rho": rho, "rows": [r.csv_row() for r in reports], "violations": sum(r.violation for r in reports)}


def cmd_bounds(cfg: RunConfig, inp: Inputs):
    o = cfg.options
    piv = pivotal_bound_suite(int(o.get("constitutions", 40)), int(o.get("n_max", 6)), cfg.seed)
    hc_n = int(o.get("hyper_n", 10))
    hc = []
    for family in FAMILIES:
        for rho in (1 / 3, -1 / 3):
            hc.extend(random_pair_suite(hc_n, int(o.get("hyper_pairs", 250)), rho, family, cfg.seed, cfg.threads))
    cases, drawn = projection_suite(int(o.get("projections", 20)), seed=cfg.seed)
    out = piv.to_json()
    out["reverse_hc"] = {
        "instances": len(hc),
        "violations": sum(r.violation for r in hc),
        "min_slack": min(r.slack for r in hc),
    }
    out["projection"] = {
        "drawn": drawn,
        "kept": len(cases),
        "failures": sum(not c.ok for c in cases),
        "max_distance": max((c.distance for c in cases), default=0),
    }
    out["total_violations"] = (
        out["joint_pivotal"]["violations"]
        + out["two_influential"]["violations"]
        + out["reverse_hc"]["violations"]
        + out["projection"]["failures"]
    )
    return out


HANDLERS = {
    "analyze": cmd_analyze,
    "structure": cmd_structure,
    "project": cmd_project,
    "barbera": cmd_barbera,
    "enumerate-family": cmd_enumerate_family,
    "mc": cmd_mc,
    "gauss": cmd_gauss,
    "hyper": cmd_hyper,
    "bounds": cmd_bounds,
}


def _csv(cfg: RunConfig, result: dict, hashes: dict) -> str:
    buf = io.StringIO()
    buf.write(f"# qarrow {__version__} {cfg.subcommand} seed={cfg.seed}\n")
    for name in sorted(hashes):
        buf.write(f"# input {name} sha256={hashes[name]}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["measure1", "measure2", "intersection", "bound", "slack"])
    for row in result["rows"]:
        writer.writerow([repr(float(v)) for v in row])
    return buf.getvalue()


def run(cfg: RunConfig, out=None) -> int:
    """Execute one subcommand, writing the report to ``out`` (stdout by default)."""
    out = out or sys.stdout
    inp = Inputs()
    result = HANDLERS[cfg.subcommand](cfg, inp)
    if cfg.output_format == "csv":
        if cfg.subcommand != "hyper":
            raise ValidationError("csv output is available for hyper only")
        out.write(_csv(cfg, result, inp.hashes))
        return 0
    report = {
        "tool": "qarrow",
        "version": __version__,
        "command": cfg.subcommand,
        "seed": cfg.seed,
        "inputs": inp.hashes,
        "result": to_data(result, cfg.floats),
    }
    out.write(dumps(report))
    return 0


# ----------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--samples", type=int, default=100_000)
    common.add_argument("--budget", type=int, default=DEFAULT_BUDGET, help="largest profile count to enumerate")
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--format", dest="output_format", choices=("json", "csv"), default=None)
    common.add_argument("--float", dest="floats", action="store_true", help="write rationals as plain floats")

    p = argparse.ArgumentParser(prog="qarrow", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"qarrow {__version__}")
    p.add_argument("--emit-fixtures", metavar="DIR", help="write the canonical fixture files and exit")
    sub = p.add_subparsers(dest="subcommand")

    def with_constitution(name, help_text):
        s = sub.add_parser(name, parents=[common], help=help_text)
        s.add_argument("constitution", help="constitution JSON path, or @name for a bundled fixture")
        return s

    s = with_constitution("analyze", "exact paradox probability, influences and Kalai terms")
    s.add_argument("--mu", help="distribution JSON (default uniform)")
    with_constitution("structure", "normal form in the transitive family, or a paradox witness")
    s = with_constitution("project", "snap pair functions to constants or dictators")
    s.add_argument("--epsilon", type=float, required=True)
    s.add_argument("--mu")
    with_constitution("barbera", "cyclic profile from two distinct pivotal voters")
    s = sub.add_parser("enumerate-family", parents=[common], help="list the transitive family for k = 3")
    s.add_argument("--n", type=int, default=1)
    s.add_argument("--list", action="store_true", help="include every normal form")
    s = with_constitution("mc", "Monte Carlo paradox probability or distance")
    s.add_argument("--mu")
    s.add_argument("--against", help="second constitution; estimates the distance instead")
    s = sub.add_parser("gauss", parents=[common], help="Gaussian half-space paradox probability")
    s.add_argument("--rho", type=float, default=-1 / 3)
    s.add_argument(
        "--thresholds", default="0,0,0", metavar="T1,T2,T3", help="comma-separated; write --thresholds=-inf,0,0 for infinities"
    )
    s.add_argument("--n", type=int, default=1)
    s.add_argument("--epsilon", type=float, default=0.5)
    s = sub.add_parser("hyper", parents=[common], help="reverse hypercontractivity on random set pairs (CSV)")
    s.add_argument("--n", type=int, default=8)
    s.add_argument("--pairs", type=int, default=100)
    s.add_argument("--rho", type=float, default=1 / 3)
    s.add_argument("--family", choices=FAMILIES, default="random")
    s = sub.add_parser("bounds", parents=[common], help="randomized bound-check suites")
    s.add_argument("--constitutions", type=int, default=40)
    s.add_argument("--n-max", type=int, default=6)
    s.add_argument("--hyper-n", type=int, default=10)
    s.add_argument("--hyper-pairs", type=int, default=250)
    s.add_argument("--projections", type=int, default=20)
    return p


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    d = vars(ns).copy()
    sub = d.pop("subcommand")
    d.pop("emit_fixtures", None)
    inputs = [d.pop("constitution")] if "constitution" in d else []
    against = d.get("against")
    if against:
        inputs.append(against)
    fmt = d.pop("output_format") or ("csv" if sub == "hyper" else "json")
    known = {f.name for f in dataclasses.fields(RunConfig)}
    top = {k: d.pop(k) for k in list(d) if k in known}
    return RunConfig(sub, inputs, output_format=fmt, options=d, **top)


def _error(exc: Exception, code: int) -> int:
    obj = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    for attr in ("required", "budget", "details"):
        if hasattr(exc, attr):
            obj[attr] = to_data(getattr(exc, attr))
    sys.stderr.write(json.dumps(obj, sort_keys=True) + "\n")
    return code


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        if ns.emit_fixtures:
            files = emit_fixtures(ns.emit_fixtures)
            sys.stdout.write(dumps({"tool": "qarrow", "version": __version__, "written": files}))
            return 0
        if ns.subcommand is None:
            parser.print_usage(sys.stderr)
            return 2
        return run(config_from_args(ns))
    except QArrowError as exc:
        return _error(exc, exc.exit_code)
    except ValueError as exc:
        return _error(exc, 2)


if __name__ == "__main__":
    sys.exit(main())
