import json
import math
import shutil
import subprocess
from importlib import resources

import pytest

from qarrow import __version__
from qarrow.cli import main
from qarrow.constitution import Constitution, evaluate, is_transitive
from qarrow.core import Profile


def run_cli(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def report(capsys, *argv):
    code, out, err = run_cli(capsys, *argv)
    assert code == 0, err
    return json.loads(out)


def test_analyze_majority_fixture(capsys):
    rep = report(capsys, "analyze", "@majority_n3")
    assert rep["tool"] == "qarrow" and rep["version"] == __version__ and rep["command"] == "analyze"
    assert "majority_n3" in next(iter(rep["inputs"]))
    res = rep["result"]
    assert res["paradox_exact"] == {"num": 1, "den": 18, "float": pytest.approx(1 / 18)}
    assert res["paradox_kalai"] == res["paradox_exact"]
    assert res["transitive_exact"]["num"] == 17
    assert res["influences"]["0,1"] == [0.5, 0.5, 0.5]
    assert set(res["kalai_terms"]) == {"ab.bc", "bc.ca", "ca.ab"}


def test_analyze_float_mode(capsys):
    res = report(capsys, "analyze", "@majority_n3", "--float")["result"]
    assert res["paradox_exact"] == pytest.approx(1 / 18)


def test_analyze_with_distribution_file(capsys, tmp_path):
    path = tmp_path / "mu.json"
    path.write_text(json.dumps({"k": 3, "probs": [0.5, 0, 0, 0, 0, 0.5]}))
    res = report(capsys, "analyze", "@majority_n3", "--mu", str(path))["result"]
    # every voter reports a>b>c or c>b>a, so majority is always transitive
    assert res["paradox_exact"] == 0


def test_structure_dictator(capsys):
    res = report(capsys, "structure", "@dictator_n3_v0")["result"]
    assert res["in_family"]
    assert res["structure"]["blocks"] == [[0, 1, 2]]
    assert res["structure"]["kinds"] == [{"type": "TopDictator", "voter": 0, "sign": 1}]


def test_structure_majority_gives_witness(capsys):
    res = report(capsys, "structure", "@majority_n3")["result"]
    assert not res["in_family"]
    prof = Profile.of(res["witness"])
    assert not is_transitive(evaluate(Constitution.majority(3, 3), prof))


def test_barbera_profile_is_cyclic(capsys):
    res = report(capsys, "barbera", "@majority_n3")["result"]
    assert res["cyclic"]
    assert [w["voter"] for w in res["witnesses"]] == [0, 1]
    prof = Profile.of(res["profile"])
    assert not is_transitive(evaluate(Constitution.majority(3, 3), prof))


def test_project_perturbed_dictator(capsys):
    res = report(capsys, "project", "@perturbed_dictator_n3_v0", "--epsilon", "0.02")["result"]
    assert res["in_family"] and res["within_radius"]
    assert res["distance"]["num"] == 1 and res["distance"]["den"] == 8


def test_enumerate_family(capsys):
    res = report(capsys, "enumerate-family", "--n", "1")["result"]
    assert res["members"] == 20 and res["survivors"] == 20 and res["sets_equal"]
    assert res["exhaustive_total"] == 64


def test_mc_paradox_and_distance(capsys):
    res = report(capsys, "mc", "@majority_n3", "--samples", "200000", "--seed", "3")["result"]
    est = res["estimate"]
    assert abs(est["mean"] - 1 / 18) <= 4 * est["stderr"]
    res = report(capsys, "mc", "@dictator_n3_v0", "--against", "@dictator_n3_v2", "--samples", "100000")["result"]
    assert res["quantity"] == "distance"
    assert abs(res["estimate"]["mean"] - 5 / 6) <= 4 * res["estimate"]["stderr"]


def test_mc_rerun_is_byte_identical_across_threads(capsys):
    args = ["mc", "@majority_n5", "--samples", "300000", "--seed", "9"]
    _, a, _ = run_cli(capsys, *args)
    _, b, _ = run_cli(capsys, *args)
    _, c, _ = run_cli(capsys, *args, "--threads", "4")
    assert a == b
    assert json.loads(a)["result"] == json.loads(c)["result"]


def test_gauss_report_keys(capsys):
    res = report(capsys, "gauss", "--samples", "200000", "--epsilon", "0.6")["result"]
    assert {"closed_form", "mc_estimate", "mc_stderr", "bound", "hypothesis_ok"} <= set(res)
    assert res["closed_form"] == pytest.approx(0.0877398, abs=1e-7)
    assert abs(res["mc_estimate"] - res["closed_form"]) <= 4 * res["mc_stderr"]
    assert res["hypothesis_ok"]


def test_gauss_infinite_threshold(capsys):
    res = report(capsys, "gauss", "--thresholds=-inf,0,0", "--samples", "10000")["result"]
    assert res["thresholds"] == ["-inf", 0.0, 0.0]
    assert res["closed_form"] == pytest.approx(0.25 * (1 + 2 / math.pi * math.asin(-1 / 3)), abs=1e-12)


def test_hyper_csv(capsys):
    code, out, _ = run_cli(capsys, "hyper", "--n", "5", "--pairs", "12", "--seed", "1")
    assert code == 0
    lines = out.splitlines()
    assert lines[0].startswith("# qarrow") and "seed=1" in lines[0]
    header = next(i for i, line in enumerate(lines) if not line.startswith("#"))
    assert lines[header] == "measure1,measure2,intersection,bound,slack"
    rows = [list(map(float, line.split(","))) for line in lines[header + 1 :]]
    assert len(rows) == 12
    assert all(r[4] >= -1e-12 for r in rows)


def test_hyper_json(capsys):
    res = report(capsys, "hyper", "--n", "4", "--pairs", "5", "--format", "json")["result"]
    assert res["violations"] == 0 and len(res["rows"]) == 5


def test_small_bounds_run(capsys):
    res = report(
        capsys, "bounds", "--constitutions", "6", "--n-max", "4", "--hyper-n", "5", "--hyper-pairs", "10", "--projections", "3"
    )["result"]
    assert res["total_violations"] == 0
    assert res["reverse_hc"]["instances"] == 80


def test_emitted_fixtures_match_bundled_data(capsys, tmp_path):
    code, out, _ = run_cli(capsys, "--emit-fixtures", str(tmp_path))
    assert code == 0
    written = json.loads(out)["written"]
    data = resources.files("qarrow") / "data"
    assert written
    for name in written:
        assert (tmp_path / name).read_text() == (data / name).read_text()


def test_validation_error_exit_code(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"k": 3, "n": 1, "pairs": []}))
    code, out, err = run_cli(capsys, "analyze", str(bad))
    assert code == 2 and out == ""
    obj = json.loads(err)
    assert obj["exit_code"] == 2 and obj["error"]


def test_unknown_fixture_is_a_validation_error(capsys):
    code, _, err = run_cli(capsys, "analyze", "@no_such_fixture")
    assert code == 2 and json.loads(err)["exit_code"] == 2


def test_budget_exit_code(capsys):
    code, _, err = run_cli(capsys, "analyze", "@majority_n5", "--budget", "100")
    obj = json.loads(err)
    assert code == 3 and obj["error"] == "BudgetExceeded"
    assert obj["required"] == 6**5 and obj["budget"] == 100


def test_csv_only_for_hyper(capsys):
    code, _, err = run_cli(capsys, "structure", "@dictator_n3_v0", "--format", "csv")
    assert code == 2


def test_console_script():
    exe = shutil.which("qarrow")
    if exe is None:
        pytest.skip("console script not on PATH")
    proc = subprocess.run([exe, "structure", "@dictator_n3_v2"], capture_output=True, text=True, check=True)
    assert json.loads(proc.stdout)["result"]["structure"]["kinds"][0]["voter"] == 2
