import json
import subprocess
import sys

import pytest

from infocost import io
from infocost.cli import main
from infocost.experiments import bernoulli


@pytest.fixture
def files(tmp_path):
    b1 = tmp_path / "b1.json"
    b1.write_text(json.dumps(io.experiment_to_json(bernoulli(1.0))))
    asym = tmp_path / "asym.json"
    asym.write_text(json.dumps({"states": ["t0", "t1"], "signals": ["a", "b"],
                                "channel": [[0.7, 0.3], [0.2, 0.8]]}))
    point = tmp_path / "point.json"
    point.write_text(json.dumps({"atoms": [{"w": 1.0, "q": [0.3, 0.7]}]}))
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"channel": [[0.5, 0.6], [0.5, 0.5]]}))
    return {"b1": str(b1), "asym": str(asym), "point": str(point), "bad": str(bad), "dir": tmp_path}


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def run_json(capsys, *argv):
    code, out, _ = run(capsys, *argv)
    return code, json.loads(out)


class TestCostEval:
    def test_mi(self, capsys, files):
        code, rep = run_json(capsys, "cost", "eval", "--cost", "mi", "--experiment", files["b1"], "--prior", "0.5,0.5")
        assert code == 0 and rep["value"] == pytest.approx(0.110944, abs=1e-6) and rep["forms_agree"]

    def test_wald(self, capsys, files):
        code, rep = run_json(capsys, "cost", "eval", "--cost", "wald", "--experiment", files["b1"], "--prior", "0.5,0.5")
        assert code == 0 and rep["value"] == pytest.approx(0.462117, abs=1e-6)

    def test_point_mass(self, capsys, files):
        code, rep = run_json(capsys, "cost", "eval", "--cost", "wald", "--posterior", files["point"])
        assert code == 0 and rep["value"] == 0

    def test_schema_error(self, capsys, files):
        code, _, err = run(capsys, "cost", "eval", "--cost", "wald", "--experiment", files["bad"])
        assert code == 2 and "error" in err

    def test_unknown_cost(self, capsys, files):
        assert run(capsys, "cost", "eval", "--cost", "nope", "--experiment", files["b1"])[0] == 2

    def test_prior_mismatch(self, capsys, files):
        assert run(capsys, "cost", "eval", "--cost", "mi", "--experiment", files["b1"], "--prior", "1")[0] == 2


class TestAxioms:
    def test_slp_wald(self, capsys):
        code, rep = run_json(capsys, "axioms", "check", "--cost", "wald", "--axiom", "slp", "--trials", "300")
        assert code == 0 and rep["verdict"] == "pass"

    def test_cmc_mlr_fails(self, capsys):
        code, rep = run_json(capsys, "axioms", "check", "--cost", "mlr", "--axiom", "cmc", "--trials", "300")
        assert code == 1 and rep["verdict"] == "fail" and rep["witness"] is not None

    def test_pi_llr(self, capsys):
        code, rep = run_json(capsys, "axioms", "check", "--cost", "llr", "--axiom", "pi", "--trials", "300")
        assert code == 0 and rep["worst_violation"] == 0

    def test_unknown_axiom(self, capsys):
        assert run(capsys, "axioms", "check", "--cost", "wald", "--axiom", "bogus")[0] == 2

    def test_seed_recorded_and_env_fallback(self, capsys, monkeypatch):
        monkeypatch.setenv("INFOCOST_SEED", "17")
        _, rep = run_json(capsys, "axioms", "check", "--cost", "mlr", "--axiom", "pi", "--trials", "20")
        assert rep["seed"] == 17 and rep["config"]["seed"] == 17
        _, rep = run_json(capsys, "axioms", "check", "--cost", "mlr", "--axiom", "pi", "--trials", "20", "--seed", "3")
        assert rep["seed"] == 3

    def test_byte_identical(self, capsys):
        args = ("axioms", "check", "--cost", "mlr", "--axiom", "cmc", "--trials", "50", "--seed", "5")
        assert run(capsys, *args)[1] == run(capsys, *args)[1]

    def test_table_and_csv(self, capsys):
        _, out, _ = run(capsys, "axioms", "check", "--cost", "wald", "--axiom", "pi", "--trials", "20", "--format", "table")
        assert "verdict" in out and "fail" in out
        _, out, _ = run(capsys, "axioms", "check", "--cost", "wald", "--axiom", "pi", "--trials", "20", "--format", "csv")
        assert out.startswith("key,value")


def test_trilemma(capsys):
    code, rep = run_json(capsys, "trilemma", "--trials", "200", "--budget", "2000", "--seed", "0")
    assert code == 0 and rep["matches"]


def test_kernel_estimate(capsys):
    code, rep = run_json(capsys, "kernel", "estimate", "--cost", "wald", "--prior", "0.5,0.5", "--ladder", "1e-2:1e-4")
    assert code == 0 and rep["kernel"][0][0] == pytest.approx(4, rel=1e-3)
    code, rep = run_json(capsys, "kernel", "estimate", "--cost", "mlr", "--prior", "0.5,0.5")
    assert code == 3 and rep["kinked"]
    assert run(capsys, "kernel", "estimate", "--cost", "wald", "--ladder", "abc")[0] == 2


def test_phi_iterate(capsys, files):
    out = files["dir"] / "table.csv"
    code, rep = run_json(capsys, "phi", "iterate", "--cost", "wald", "--grid-n", "11", "--tol", "1e-8",
                         "--out", str(out))
    assert code == 0 and rep["converged"] and rep["iterations"] == 1
    rows = io.read_table_csv(out)
    assert len(rows) == sum((hi - lo - 1) for lo in range(11) for hi in range(lo + 2, 11))


def test_phi_nonconvergence_inconclusive(capsys):
    code, rep = run_json(capsys, "phi", "iterate", "--cost", "bernoulli_direct", "--grid", "logodds",
                         "--grid-n", "11", "--max-iters", "1")
    assert code == 3 and not rep["converged"]


def test_walk(capsys):
    code, rep = run_json(capsys, "walk", "--f", "l2", "--ell", "1", "--n", "12")
    assert code == 0 and rep["decreasing"]
    assert rep["values"][12] == pytest.approx(0.924234, abs=1e-3)


def test_poisson_cover(capsys, files):
    code, rep = run_json(capsys, "poisson-cover", "--experiment", files["asym"])
    assert code == 0 and rep["lambda_hat"] == pytest.approx(0.693147, abs=1e-6) and rep["dominates"]


@pytest.mark.parametrize("cost,verdict", [("bernoulli_direct", "UPS"), ("mi", "UPS"), ("poisson_direct", "non-LQ")])
def test_pipeline(capsys, cost, verdict):
    code, rep = run_json(capsys, "pipeline", "--cost", cost, "--grid-n", "21")
    assert code == 0 and rep["verdict"] == verdict


def test_experiment_validate(capsys, files):
    code, rep = run_json(capsys, "experiment", "validate", "--experiment", files["b1"])
    assert code == 0 and rep["valid"] and len(rep["posterior"]["atoms"]) == 2
    assert run(capsys, "experiment", "validate", "--experiment", files["bad"])[0] == 2


def test_out_writes_report(capsys, files):
    path = files["dir"] / "rep.json"
    code, out, _ = run(capsys, "walk", "--n", "2", "--out", str(path))
    assert code == 0 and out == "" and json.loads(path.read_text())["n"] == [0, 1, 2]


def test_console_script():
    out = subprocess.run([sys.executable, "-m", "infocost.cli", "walk", "--n", "1"],
                         capture_output=True, text=True, check=True)
    assert json.loads(out.stdout)["values"][1] == pytest.approx(0.9434094, abs=1e-7)
