import csv
import io
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from ckvlab import report
from ckvlab.cli import main


def run_cli(tmp_path, *args, name="out"):
    out = tmp_path / name
    code = main([*args, "--out", str(out)])
    return code, (out.read_text() if out.exists() else None)


def test_ckv_count_json(tmp_path):
    code, text = run_cli(tmp_path, "ckv-count", "--metric", "flat", "--n", "3", "--degree", "3", "--mode", "conformal")
    assert code == 0
    doc = json.loads(text)
    assert doc["schema"] == "ckv-lab/1"
    assert doc["report"]["nullity"] == 10
    assert doc["report"]["ambiguous"] is False
    assert len(doc["report"]["singular_values"]) == 30


def test_ckv_count_csv(tmp_path):
    code, text = run_cli(tmp_path, "ckv-count", "--metric", "sphere-stereo", "--mode", "killing", "--format", "csv")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(text)))
    assert rows[0]["nullity"] == "6" and rows[0]["ambiguous"] == "false"


def test_jet_scan_csv(tmp_path):
    code, text = run_cli(tmp_path, "jet-scan", "--n", "2..6", "--k", "0..10", "--format", "csv")
    assert code == 0
    lines = text.splitlines()
    assert lines[0] == "n,k,dim_metric_jets,dim_factor_jets,dim_diffeo_jets_k_plus_1,dim_domain,holds"
    assert "3,4,210,35,165,203,true" in lines
    assert len(lines) == 1 + 5 * 11


def test_jet_scan_json(tmp_path):
    code, text = run_cli(tmp_path, "jet-scan", "--n", "2..8", "--k", "0..10")
    doc = json.loads(text)
    assert code == 0
    assert doc["frontier"]["3"] == 4 and "2" not in doc["frontier"]


def test_perturb_run(tmp_path):
    code, text = run_cli(tmp_path, "perturb-run", "--metric", "flat", "--n", "3", "--eps", "0.05",
                         "--trials", "3", "--seed", "42", "--degree", "2")
    assert code == 0
    doc = json.loads(text)
    assert doc["summary"]["valid"] == 3
    assert doc["summary"]["after_nullity_zero"] == 3
    assert [t["seed"] for t in doc["trials"]] == [42, 43, 44]
    assert all(t["after"]["nullity"] == 0 for t in doc["trials"])


def test_perturb_run_csv_marks_invalid(tmp_path):
    code, text = run_cli(tmp_path, "perturb-run", "--eps", "80", "--trials", "2", "--degree", "2", "--format", "csv")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(text)))
    assert [r["valid"] for r in rows] == ["false", "false"]


def test_invariance_check(tmp_path):
    code, text = run_cli(tmp_path, "invariance-check", "--n", "2", "--degree", "3")
    assert code == 0
    doc = json.loads(text)
    assert [r["factor"] for r in doc["summary"]] == ["const-2", "exp-x1", "sphere"]
    assert all(r["nullity_g"] == r["nullity_cg"] == 8 for r in doc["summary"])


def test_identical_runs_are_byte_identical(tmp_path):
    args = ("perturb-run", "--metric", "sphere-stereo", "--trials", "2", "--seed", "7", "--degree", "2")
    _, a = run_cli(tmp_path, *args, name="a.json")
    _, b = run_cli(tmp_path, *args, name="b.json")
    assert a == b


@pytest.mark.parametrize("argv", [
    ["ckv-count", "--n", "1"],
    ["ckv-count", "--degree", "1"],
    ["ckv-count", "--metric", "torus"],
    ["ckv-count", "--mode", "affine"],
    ["ckv-count", "--rel-tol", "2"],
    ["ckv-count", "--rel-tol", "-1"],
    ["ckv-count", "--gap-min", "0.5"],
    ["ckv-count", "--grid", "2", "--degree", "4"],
    ["ckv-count", "--grid", "100", "--n", "4"],
    ["ckv-count", "--n", "three"],
    ["ckv-count", "--eps", "0.1"],
    ["jet-scan", "--n", "5..2"],
    ["jet-scan", "--n", "1..3"],
    ["jet-scan", "--k", "x"],
    ["jet-scan", "--degree", "3"],
    ["perturb-run", "--trials", "0"],
    ["perturb-run", "--seed", "-3"],
    ["perturb-run", "--eps", "nan"],
    ["invariance-check", "--factor", "cosh"],
    ["ckv-count", "--format", "xml"],
    ["frobnicate"],
    [],
])
def test_malformed_flags_exit_2(argv, capsys):
    with pytest.raises(SystemExit) as info:
        code = main(argv)
        raise SystemExit(code)
    assert info.value.code == 2
    assert capsys.readouterr().err.strip()


def test_numerical_error_exit_3(tmp_path, monkeypatch, capsys):
    from ckvlab import cli
    from ckvlab.metrics import diag_poly
    from ckvlab.tensor_core import Patch

    def degenerate(label, n):
        return diag_poly(n, Patch.cube(n, 0.5), entries=[{(0,) * n: 1.0}] + [{(2,) + (0,) * (n - 1): 1.0}] * (n - 1))

    monkeypatch.setattr(cli, "get_metric", degenerate)
    code, text = run_cli(tmp_path, "ckv-count", "--metric", "diag-poly", "--grid", "5")  # node on x1 = 0
    assert code == 3 and text is None
    assert "singular" in capsys.readouterr().err


def test_strict_ambiguous_exit_4(tmp_path):
    # tolerance placed inside the spread of the diag-poly spectrum
    code, text = run_cli(tmp_path, "ckv-count", "--metric", "diag-poly", "--rel-tol", "1e-3", "--gap-min", "1e9",
                         "--strict")
    assert code == 4
    assert json.loads(text)["report"]["ambiguous"] is True
    code, _ = run_cli(tmp_path, "ckv-count", "--metric", "diag-poly", "--rel-tol", "1e-3", "--gap-min", "1e9",
                      name="loose")
    assert code == 0


def test_module_entry_point_writes_stdout():
    proc = subprocess.run([sys.executable, "-m", "ckvlab", "jet-scan", "--n", "3", "--k", "4", "--format", "csv"],
                          capture_output=True, text=True, check=True)
    assert proc.stdout.splitlines()[1] == "3,4,210,35,165,203,true"


def test_canonical_json_formatting():
    text = report.dumps({"b": 0.1, "a": [1, True, None, math.inf], "c": {"z": np.float64(1 / 3), "y": "s"}})
    assert text.index('"a"') < text.index('"b"') < text.index('"c"')
    assert "0.10000000000000001" in text
    assert "0.33333333333333331" in text
    assert '"inf"' in text
    doc = json.loads(text)
    assert doc["a"] == [1, True, None, "inf"]
    assert float(doc["c"]["z"]) == 1 / 3


def test_perturb_run_full_example(tmp_path):
    code, text = run_cli(tmp_path, "perturb-run", "--metric", "flat", "--n", "3", "--eps", "0.05",
                         "--trials", "20", "--seed", "42")
    summary = json.loads(text)["summary"]
    assert code == 0
    assert summary["valid"] == 20 and summary["after_nullity_zero"] == 20
    assert summary["before_nullity"] == 10 and summary["after_ambiguous"] == 0
