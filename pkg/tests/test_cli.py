import json
import os
import subprocess
import sys

import numpy as np
import pytest

from toral_rigidity.cli import run
from toral_rigidity.pipeline import PRECISION_ENV, RunConfig

CUBIC_TEXT = "3\n0 0 1\n1 0 3\n0 1 0\n"
CAT_TEXT = "2\n2 1\n1 1\n"


@pytest.fixture
def files(tmp_path):
    paths = {}
    for name, text in {"cubic.txt": CUBIC_TEXT, "cat.txt": CAT_TEXT, "bad.txt": "2\n2 1\n1 q\n",
                       "pert.txt": CAT_TEXT + "mode direct\n1 0 : 0.05 0.02\n"}.items():
        (tmp_path / name).write_text(text)
        paths[name] = str(tmp_path / name)
    return paths


def invoke(capsys, *argv):
    code = run(list(argv))
    return code, capsys.readouterr().out


def test_analyze_cubic_passes_all_hypotheses(capsys, files):
    code, out = invoke(capsys, "analyze", files["cubic.txt"])
    report = json.loads(out)
    assert code == 0 and not report["errors"]
    assert report["matrices"][0]["dirichlet_rank"] == 2
    assert [report["hypotheses"][f"verdict_{k}"]["status"] for k in ("i", "ii", "iii", "iv")] == ["Pass"] * 4
    assert report["config"]["precision_bits"] == RunConfig().precision_bits


def test_analyze_cat_reports_rank_violation_as_finding(capsys, files):
    code, out = invoke(capsys, "analyze", files["cat.txt"])
    report = json.loads(out)
    assert code == 0
    assert report["matrices"][0]["dirichlet_rank"] == 1
    assert report["findings"]["theorem_1_1"]["error"] == "HypothesisViolation"


def test_malformed_file_gives_parse_error_with_line(capsys, files):
    code, out = invoke(capsys, "analyze", files["bad.txt"])
    diag = json.loads(out)["errors"][0]
    assert code == 1 and diag["error"] == "ParseError" and diag["line"] == 3


def test_missing_file_is_a_structured_error(capsys, tmp_path):
    code, out = invoke(capsys, "analyze", str(tmp_path / "absent.txt"))
    assert code == 1 and json.loads(out)["errors"]


def test_chambers_csv_for_cat(capsys, files):
    code, out = invoke(capsys, "chambers", files["cat.txt"])
    lines = out.strip().splitlines()
    assert code == 0 and lines[0].startswith("chamber,") and len(lines) == 3


def test_certify_stable_bundle_of_cat(capsys, files):
    code, out = invoke(capsys, "certify", files["cat.txt"], "--resolution", "32")
    report = json.loads(out)
    assert code == 0 and report["certified"] and report["result"]["N"] == 1


def test_certify_perturbation(capsys, files):
    code, out = invoke(capsys, "certify", files["pert.txt"], "--resolution", "32")
    report = json.loads(out)
    assert code == 0 and report["certified"] and report["result"]["sup_a_N"] < 0


def test_fit_recovers_power_law(capsys, tmp_path):
    x = np.linspace(0.2, 3.0, 30)
    rows = "\n".join(f"{float(a)!r},{float(1.3 * a ** 0.7)!r}" for a in x)
    path = tmp_path / "samples.csv"
    path.write_text("x,h\n" + rows + "\n")
    code, out = invoke(capsys, "fit", str(path))
    fit = json.loads(out)["fit"]
    assert code == 0 and abs(fit["t"] - 0.7) < 1e-9 and abs(fit["alpha_plus"] - 1.3) < 1e-9


def test_conjugate_writes_grid(capsys, files, tmp_path):
    prefix = tmp_path / "conj"
    code, out = invoke(capsys, "conjugate", files["pert.txt"], "--resolution", "32", "--output", str(prefix))
    report = json.loads(out)
    assert code == 0 and report["result"]["residual"] < 1e-9
    assert np.load(str(prefix) + ".npy").shape == (32, 32, 2)


def test_rigidity_with_linear_perturbation_passes(capsys, files, tmp_path):
    csv_path = tmp_path / "orbits.csv"
    code, out = invoke(capsys, "rigidity", files["cat.txt"], files["cat.txt"], "--resolution", "32",
                       "--period-bound", "2", "--csv-output", str(csv_path))
    report = json.loads(out)
    assert code == 0
    assert report["verdict"]["exponents_match"] and report["verdict"]["stable_dimensions_agree"]
    assert len(csv_path.read_text().strip().splitlines()) == 1 + 3


def test_reruns_are_byte_identical(capsys, files, tmp_path):
    outs = []
    path = tmp_path / "report.json"
    for _ in range(2):
        invoke(capsys, "analyze", files["cubic.txt"], "--output", str(path))
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]


def test_invalid_config_is_rejected(capsys, files):
    code, out = invoke(capsys, "conjugate", files["pert.txt"], "--resolution", "100")
    assert code == 1 and "power of two" in json.loads(out)["errors"][0]["message"]


def test_precision_environment_variable(files):
    env = dict(os.environ, **{PRECISION_ENV: "160"})
    proc = subprocess.run([sys.executable, "-m", "toral_rigidity.cli", "analyze", files["cat.txt"]],
                          capture_output=True, text=True, env=env, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["config"]["precision_bits"] == 160
