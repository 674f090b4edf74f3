import json
import subprocess
import sys

import pytest

from qgmix.cli import DEFAULT_SEED, main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv)
    return code, json.loads(out), err


def test_density_example(capsys):
    code, doc, _ = run_json(capsys, "density", "--q", "1", "--x", "0")
    assert code == 0
    assert doc["result"]["density"] == [pytest.approx(0.564189584, abs=1e-9)]
    assert doc["config"]["subcommand"] == "density" and doc["config"]["q"] == 1.0


def test_density_exact_digits(capsys):
    _, out, _ = run(capsys, "density", "--q", "1", "--x", "0")
    assert "0.56418958354775628" in out


def test_cdf_csv(capsys):
    code, out, _ = run(capsys, "cdf", "--q", "2", "--x", "1", "--format", "csv")
    lines = out.splitlines()
    assert code == 0 and lines[1] == "x,cdf" and lines[2] == "1,0.75"
    assert json.loads(lines[0][len("# config: "):])["format"] == "csv"


def test_verify_mixture(capsys):
    code, doc, _ = run_json(capsys, "verify-mixture", "--q", "2", "--tol", "1e-8")
    assert code == 0 and doc["result"]["sup_error"] < 1e-8 and doc["result"]["pass"]


def test_verify_mixture_laplace(capsys):
    code, doc, _ = run_json(capsys, "verify-mixture", "--q", "1.5", "--laplace", "--grid=-5:5:11", "--tol", "1e-9")
    assert code == 0 and doc["result"]["n_points"] == 11


def test_cm_check_exit_codes(capsys):
    assert run(capsys, "cm-check", "--q", "1.5")[0] == 0
    code, doc, _ = run_json(capsys, "cm-check", "--q", "0.5")
    assert code == 0 and not doc["result"]["is_cm_consistent"] and not doc["result"]["predicted_cm"]


def test_mixing_summary(capsys):
    code, doc, _ = run_json(capsys, "mixing", "--q", "2", "--x", "1")
    assert code == 0 and doc["result"]["dof"] == 1 and doc["result"]["second_moment"] == "inf"


def test_default_seed_is_announced(capsys):
    code, doc, err = run_json(capsys, "sample", "--q", "1.5", "--n", "10", "--format", "json")
    assert code == 0 and str(DEFAULT_SEED) in err and doc["config"]["seed"] == DEFAULT_SEED


def test_clt_determinism_and_workers(capsys):
    argv = ("clt", "--model", "scale", "--q", "1.5", "--n", "1000", "--reps", "2000", "--seed", "7", "--format", "json")
    a = run(capsys, *argv)
    b = run(capsys, *argv)
    c = run(capsys, *argv, "--workers", "2")
    assert a[0] == 0 and a[1] == b[1] == c[1]
    assert "workers" not in json.loads(a[1])["config"]


def test_clt_csv_rows(capsys, tmp_path):
    out = tmp_path / "clt.csv"
    code, _, _ = run(capsys, "clt", "--model", "shift", "--latent", "uniform", "--mixand", "normal",
                     "--n", "1000", "--reps", "300", "--seed", "3", "--format", "csv", "--out", str(out))
    lines = out.read_text().splitlines()
    assert code == 0 and lines[1] == "replication,y,value" and len(lines) == 300 + 3


def test_statistical_failure_exits_2(capsys):
    # zero burn-in from v0 = 10 cannot match the stationary law
    code, doc, _ = run_json(capsys, "langevin", "--beta", "1", "--burn-in", "0", "--v0", "10", "--n", "20000",
                            "--seed", "1")
    assert code == 2 and not doc["result"]["pass"]


def test_langevin_pass(capsys):
    code, _, _ = run(capsys, "langevin", "--q", "1.5", "--n", "20000", "--seed", "2")
    assert code == 0


def test_triangle_leibnitz(capsys):
    code, doc, _ = run_json(capsys, "triangle", "--mode", "leibnitz", "--mixing", "beta:2,3", "--n-max", "10",
                            "--format", "json")
    assert code == 0 and doc["result"]["rule_residual"] < 1e-12


def test_qbm(capsys):
    code, doc, _ = run_json(capsys, "qbm", "--q", "2", "--n", "20000", "--seed", "4", "--format", "json")
    assert code == 0 and doc["result"]["marginal"]["pass"]


def test_fpe_small(capsys):
    code, doc, _ = run_json(capsys, "fpe", "--q", "1.5", "--nodes", "257", "--half-width", "500",
                            "--snapshots", "2")
    assert code == 0 and doc["result"]["max_mass_error"] < 1e-6


def test_superstat(capsys):
    code, doc, _ = run_json(capsys, "superstat", "--shape", "2", "--scale", "0.5", "--tol", "1e-9")
    assert code == 0 and doc["result"]["max_error_vs_closed_form"] < 1e-9


def test_price(capsys):
    code, doc, _ = run_json(capsys, "price", "--q", "1.5", "--mc", "200000", "--seed", "5")
    r = doc["result"]
    assert code == 0 and r["mc"]["within_3se"] and r["inputs"]["kind"] == "call"
    code, doc, _ = run_json(capsys, "price", "--q", "1")
    assert doc["result"]["price"] == pytest.approx(doc["result"]["bs_price_at_base_vol"], abs=1e-12)


@pytest.mark.parametrize("argv", [
    ("density", "--bogus"),
    ("nosuch",),
    ("density", "--q", "3"),
    ("clt", "--workers", "0"),
    ("clt", "--model", "shift", "--latent", "weird"),
    ("density", "--grid", "1:2"),
    ("mixing", "--q", "0.5"),
])
def test_usage_and_domain_errors_exit_1(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 1 and err


def test_output_file_matches_stdout(capsys, tmp_path):
    out = tmp_path / "d.json"
    _, stdout, _ = run(capsys, "density", "--q", "1.5", "--grid=-1:1:5")
    run(capsys, "density", "--q", "1.5", "--grid=-1:1:5", "--out", str(out))
    assert out.read_text() == stdout
    assert "out" not in json.loads(stdout)["config"]


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "qgmix", "density", "--q", "2", "--x", "0"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["result"]["density"][0] == pytest.approx(1 / 3.141592653589793)
