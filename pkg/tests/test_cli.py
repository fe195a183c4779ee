import csv
import io
import json
import os
import subprocess
import sys

import pytest

from sinai import __version__
from sinai.cli import ESTIMATE_COLUMNS, main
from sinai.errors import DomainError, InvalidLaw, StepBudgetExceeded
from sinai.experiments import ExperimentConfig, run


def run_cli(tmp_path, *argv):
    out = tmp_path / "report.json"
    code = main([*argv, "--out", str(out)])
    return code, (json.loads(out.read_text()) if out.exists() and out.suffix == ".json" else None)


def test_localize_smoke(tmp_path):
    code, rep = run_cli(tmp_path, "localize", "--n", "100", "--trials", "10", "--seed", "3")
    assert code == 0
    assert rep["version"] == __version__ and rep["config"]["seed"] == 3
    (est,) = rep["estimates"]
    assert est["params"] == {"n": 100, "eta": 1.0}
    assert est["n"] + est["discarded"] == 10
    assert 0 <= est["ci"][0] <= est["point"] <= est["ci"][1] <= 1


def test_degenerate_law_is_usage_error(tmp_path, capsys):
    code = main(["localize", "--n", "100", "--trials", "2", "--law", "three-point", "--p", "0.5"])
    assert code == 1
    assert "degenerate" in capsys.readouterr().err


def test_bad_flag_is_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["localize", "--n", "1x0"])
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        main(["no-such-experiment"])
    assert exc.value.code == 1


def test_aging_rwre_h_one_is_certain():
    rep = run(ExperimentConfig("aging-rwre", n=[50, 200], h=1.0, trials=20, seed=1))
    assert all(e["point"] == 1.0 for e in rep["estimates"])
    assert {c["params"]["eta"] for c in rep["eta_curve"]} == {0.1, 0.25, 0.5}


def test_aging_rwre_step_budget(monkeypatch):
    monkeypatch.setenv("SINAI_MAX_STEPS", "5000")
    with pytest.raises(StepBudgetExceeded, match="n <= 70"):
        run(ExperimentConfig("aging-rwre", n=[100], h=2.0, trials=2))
    assert main(["aging-rwre", "--n", "100", "--trials", "2"]) == 1


def test_aging_brownian_near_one():
    rep = run(ExperimentConfig("aging-brownian", h=1 + 1e-6, trials=200, dt=1e-3, seed=2, cross_check=0))
    est = rep["estimates"][0]
    assert est["ci"][0] <= 1.0 <= est["ci"][1]
    assert rep["limit"] == pytest.approx(1.0, abs=1e-5)


def test_laws_check_smoke_is_inconclusive(tmp_path):
    code, rep = run_cli(tmp_path, "laws-check", "--trials", "10", "--dt", "1e-3")
    assert code == 0
    names = [c["name"] for c in rep["checks"]]
    assert names[:4] == ["h1-uniform", "mw-surface", "joint-h", "q-function"]
    assert len(names) == 7 and all(c["passed"] is None for c in rep["checks"])


def test_laws_selector_validation():
    with pytest.raises(DomainError):
        run(ExperimentConfig("laws-check", laws=["bogus"], trials=2))


def test_env_diagnose_smoke_and_samples(tmp_path):
    dump = tmp_path / "s.csv"
    code, rep = run_cli(tmp_path, "env-diagnose", "--trials", "10", "--dt", "1e-3", "--J", "10,40",
                        "--delta", "0.1,0.02", "--dump-samples", str(dump))
    assert code == 0
    assert len(rep["estimates"]) == 10
    rows = list(csv.DictReader(dump.open()))
    assert len(rows) == 20
    assert {"a", "b", "c", "depth", "threshold", "same_bottom", "all"} <= set(rows[0])


def test_env_diagnose_trends():
    cfg = ExperimentConfig("env-diagnose", J=[10, 40], delta=[0.1, 0.02], trials=300, dt=1e-3, seed=4)
    rep = run(cfg)
    alls = [e["point"] for e in rep["estimates"] if e["params"]["component"] == "all"]
    same = [e["point"] for e in rep["estimates"] if e["params"]["component"] == "same_bottom"]
    assert alls[1] > alls[0]
    assert same[1] > same[0] and same[1] > 0.9


def test_csv_format(tmp_path):
    out = tmp_path / "r.csv"
    assert main(["aging-brownian", "--trials", "5", "--dt", "1e-3", "--format", "csv", "--out", str(out)]) == 0
    rows = list(csv.reader(io.StringIO(out.read_text())))
    assert tuple(rows[0]) == ESTIMATE_COLUMNS and len(rows) == 2
    assert json.loads(rows[1][1]) == {"dt": 0.001, "h": 2.0}


def test_replay_verify(tmp_path):
    first = tmp_path / "a.json"
    assert main(["aging-rwre", "--n", "60,80", "--trials", "12", "--seed", "99", "--out", str(first)]) == 0
    second = tmp_path / "b.json"
    assert main(["replay", str(first), "--verify", "--out", str(second), "--workers", "2"]) == 0
    assert first.read_bytes() == second.read_bytes()
    tampered = json.loads(first.read_text())
    tampered["estimates"][0]["point"] = -1
    first.write_text(json.dumps(tampered, sort_keys=True, indent=2) + "\n")
    assert main(["replay", str(first), "--verify", "--out", str(tmp_path / "c.json")]) == 2


def test_statistical_failure_exits_two(tmp_path):
    # a zero tolerance cannot be met by a Monte Carlo estimate
    code, rep = run_cli(tmp_path, "aging-brownian", "--trials", "1000", "--dt", "1e-2", "--tol", "0",
                        "--cross-check", "0")
    assert code == 2 and rep["passed"] is False


def test_quenched_mode_shares_environments():
    cfg = ExperimentConfig("localize", n=[200], trials=20, mode="quenched", walks_per_env=10, seed=5)
    rep = run(cfg)
    bbars = [s["bbar"] for s in rep["_samples"] if not s["discarded"]]
    assert len(set(bbars[:10])) == 1 and len(set(bbars)) <= 2


def test_sigma_scaling_flag_changes_bottom_scale():
    base = run(ExperimentConfig("localize", n=[500], trials=5, seed=8))
    scaled = run(ExperimentConfig("localize", n=[500], trials=5, seed=8, sigma_scaling=True))
    assert [s["x"] for s in base["_samples"]] == [s["x"] for s in scaled["_samples"]]


def test_invalid_law_parameters():
    with pytest.raises(InvalidLaw):
        run(ExperimentConfig("localize", n=[100], trials=1, epsilon=0.7))


def test_module_entry_point_and_pure_python_backend(tmp_path):
    env = dict(os.environ, SINAI_PURE_PYTHON="1")
    args = ["localize", "--n", "100", "--trials", "4", "--seed", "6"]
    pure = subprocess.run([sys.executable, "-m", "sinai", *args], env=env, capture_output=True, text=True)
    fast = subprocess.run([sys.executable, "-m", "sinai", *args], capture_output=True, text=True)
    assert pure.returncode == fast.returncode == 0
    assert pure.stdout == fast.stdout
