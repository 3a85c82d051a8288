import io
import json
import math
import os
import subprocess
import sys

import pytest

from recbound import factpoly
from recbound.cli import main, run_selftest
from recbound.config import ConfigError, validate_config


def write_config(tmp_path, name, doc):
    path = tmp_path / name
    path.write_text(json.dumps(doc, indent=2))
    return str(path)


GEO = {
    "kind": "expsum",
    "phase": "0.3*n",
    "horizon": 20000,
    "tail_majorant": 0,
}


# ---------------------------------------------------------------------------
# config validation
# ---------------------------------------------------------------------------

def test_unknown_top_level_key_rejected():
    with pytest.raises(ConfigError, match="unknown key"):
        validate_config({"kind": "expsum", "phase": "0", "horizont": 10})


def test_unknown_nested_key_rejected():
    with pytest.raises(ConfigError, match="unknown key"):
        validate_config(
            {"kind": "scalar", "rho": 1.0, "phi": 0.0,
             "input": {"phase": "0", "extra": 1}}
        )


def test_missing_required_key():
    with pytest.raises(ConfigError, match="missing required key"):
        validate_config({"kind": "expsum"})


def test_bad_kind():
    with pytest.raises(ConfigError, match="must be one of"):
        validate_config({"kind": "spectral"})


def test_majorant_must_declare_monotonicity():
    with pytest.raises(ConfigError, match="monotone_decreasing"):
        validate_config({"kind": "expsum", "phase": "0",
                         "tail_majorant": {"expr": "n^(-2)", "monotone_decreasing": False}})


def test_sweep_empty_grid_rejected():
    with pytest.raises(ConfigError, match="empty"):
        validate_config({"kind": "expsum", "phase": "0",
                         "sweep": {"parameter": "a", "values": []}})


# ---------------------------------------------------------------------------
# analyze
# ---------------------------------------------------------------------------

def test_analyze_geometric_fixture(tmp_path, capsys):
    cfg = write_config(tmp_path, "geo.json", GEO)
    out = str(tmp_path / "out")
    assert main(["analyze", cfg, "--out", out]) == 0
    report = (tmp_path / "out" / "geo.report.txt").read_text()
    assert "verdict" in report and "BoundedCertified" in report
    assert "horizon" in report and "20000" in report
    assert "certificate_class" in report  # no silent extrapolation
    sup_line = [l for l in report.splitlines() if l.startswith("sup_abs")][0]
    sup = float(sup_line.split()[-1])
    assert abs(sup - 1.0 / math.sin(0.3 * math.pi)) < 1e-9
    csv = (tmp_path / "out" / "geo.samples.csv").read_text()
    assert csv.splitlines()[0] == "n,abs,re,im"


def test_analyze_is_deterministic(tmp_path):
    cfg = write_config(tmp_path, "geo.json", GEO)
    outs = []
    for sub in ("a", "b"):
        out = str(tmp_path / sub)
        assert main(["analyze", cfg, "--out", out]) == 0
        outs.append(
            (tmp_path / sub / "geo.report.txt").read_bytes()
            + (tmp_path / sub / "geo.samples.csv").read_bytes()
        )
    assert outs[0] == outs[1]


def test_analyze_renders_figure_when_asked(tmp_path):
    cfg = write_config(tmp_path, "geo.json", dict(GEO, plot=True))
    out = str(tmp_path / "out")
    assert main(["analyze", cfg, "--out", out]) == 0
    png = tmp_path / "out" / "geo.png"
    assert png.exists() and png.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_analyze_jordan_cell_fixture(tmp_path):
    doc = {
        "kind": "jordan-cell",
        "phi": 0.0,
        "order": 2,
        "ytilde": [{"values": [[0, 0]] * 10000}, {"phase": "0.5*n"}],
        "horizon": 10000,
        "tolerance": 1e-6,
        "probe_horizon": 10000,
        "perturb_delta": 0.1,
        "perturb_row": 2,
        "perturb_horizon": 10000,
    }
    cfg = write_config(tmp_path, "cell.json", doc)
    out = str(tmp_path / "out")
    assert main(["analyze", cfg, "--out", out]) == 0
    report = (tmp_path / "out" / "cell.report.txt").read_text()
    init_line = [l for l in report.splitlines() if l.startswith("init_row_2")][0]
    assert abs(float(init_line.split()[1]) - math.log(2)) < 1e-6
    ratio_line = [l for l in report.splitlines()
                  if l.startswith("perturbation.row1_final_ratio")][0]
    assert 0.08 <= float(ratio_line.split()[-1]) <= 0.12


def test_analyze_jordan_system(tmp_path):
    doc = {
        "kind": "jordan-system",
        "horizon": 1000,
        "tolerance": 1e-18,
        "blocks": [
            {"rho": 0.5, "phi": 0.0, "order": 1, "inputs": [{"phase": "0"}]},
            {"rho": 2.0, "phi": 0.0, "order": 2,
             "inputs": [{"values": [[0, 0]] * 300}, {"phase": "0"}]},
        ],
        "transform": [[2, 0, 0], [0, 1, 0], [0, 0, 0.5]],
    }
    cfg = write_config(tmp_path, "system.json", doc)
    out = str(tmp_path / "out")
    assert main(["analyze", cfg, "--out", out]) == 0
    report = (tmp_path / "out" / "system.report.txt").read_text()
    assert "SplitSolvable" in report
    row1 = [l for l in report.splitlines() if l.startswith("block_1.required_x1_row_1")][0]
    assert float(row1.split()[1]) == 1.0
    assert "transform_condition" in report


def test_analyze_flag_overrides(tmp_path):
    cfg = write_config(tmp_path, "geo.json", GEO)
    out = str(tmp_path / "out")
    assert main(["analyze", cfg, "--out", out, "--horizon", "5000", "--tol", "1e-6"]) == 0
    report = (tmp_path / "out" / "geo.report.txt").read_text()
    assert [l for l in report.splitlines() if l.startswith("horizon")][0].split()[-1] == "5000"
    assert [l for l in report.splitlines() if l.startswith("tolerance")][0].split()[-1] == "1e-06"


def test_analyze_malformed_config_exits_2_without_outputs(tmp_path, capsys):
    cfg = write_config(tmp_path, "bad.json", {"kind": "expsum"})
    out = str(tmp_path / "out")
    assert main(["analyze", cfg, "--out", out]) == 2
    assert not os.path.exists(out)
    assert "missing required key" in capsys.readouterr().err


def test_analyze_numeric_failure_exits_3(tmp_path, capsys):
    cfg = write_config(tmp_path, "dom.json",
                       {"kind": "expsum", "phase": "log(n - 1)", "horizon": 2000})
    assert main(["analyze", cfg, "--out", str(tmp_path / "out")]) == 3


def test_analyze_refusal_exits_4(tmp_path, capsys):
    doc = {
        "kind": "jordan-cell",
        "phi": 0.0,
        "order": 2,
        "ytilde": [{"values": [[0, 0]] * 100}, {"phase": "0"}],
        "horizon": 5000,
        "probe_horizon": 5000,
    }
    cfg = write_config(tmp_path, "refuse.json", doc)
    assert main(["analyze", cfg, "--out", str(tmp_path / "out")]) == 4
    assert "partial sums grow" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------

SWEEP = {
    "kind": "expsum",
    "phase": "n^{alpha}",
    "horizon": 20000,
    "declared_psi": 0,
    "sweep": {"parameter": "alpha", "values": [0.3, 0.5, 0.7]},
}


def test_sweep_runs_grid_in_order(tmp_path):
    cfg = write_config(tmp_path, "sweep.json", SWEEP)
    out = str(tmp_path / "out")
    assert main(["sweep", cfg, "--out", out]) == 0
    lines = (tmp_path / "out" / "sweep.sweep.csv").read_text().splitlines()
    assert lines[0] == ("index,parameter,value,status,verdict,sup_abs,final_abs,"
                       "growth_exponent,bound_value,detail")
    assert len(lines) == 4
    values = [float(l.split(",")[2]) for l in lines[1:]]
    assert values == [0.3, 0.5, 0.7]
    verdicts = [l.split(",")[4] for l in lines[1:]]
    assert all(v == "UnboundedCertified" for v in verdicts)
    betas = [float(l.split(",")[7]) for l in lines[1:]]
    for beta, alpha in zip(betas, values):
        assert abs(beta - (1 - alpha)) < 0.15


def test_sweep_identical_across_jobs(tmp_path):
    cfg = write_config(tmp_path, "sweep.json", SWEEP)
    blobs = []
    for jobs, sub in ((1, "j1"), (8, "j8")):
        out = str(tmp_path / sub)
        assert main(["sweep", cfg, "--jobs", str(jobs), "--out", out]) == 0
        blobs.append((tmp_path / sub / "sweep.sweep.csv").read_bytes())
    assert blobs[0] == blobs[1]


def test_sweep_records_failing_point(tmp_path):
    doc = dict(SWEEP, phase="sqrt(n - {alpha})")
    doc["sweep"] = {"parameter": "alpha", "values": [0.0, 50.0]}
    cfg = write_config(tmp_path, "sweep.json", doc)
    out = str(tmp_path / "out")
    assert main(["sweep", cfg, "--out", out]) == 0  # one point still succeeded
    lines = (tmp_path / "out" / "sweep.sweep.csv").read_text().splitlines()
    statuses = [int(l.split(",")[3]) for l in lines[1:]]
    assert statuses == [0, 3]
    assert "sqrt of negative value" in lines[2]


def test_sweep_rotation_grid_with_majorant(tmp_path):
    doc = {
        "kind": "expsum",
        "phase": "{phi}*n + sqrt(n)*log(n)",
        "horizon": 20000,
        "tail_majorant": {"expr": "0.3*log(n)*n^(-1.5)", "monotone_decreasing": True},
        "sweep": {"parameter": "phi", "values": [0.1, 0.25]},
    }
    cfg = write_config(tmp_path, "rot.json", doc)
    out = str(tmp_path / "out")
    assert main(["sweep", cfg, "--out", out]) == 0
    lines = (tmp_path / "out" / "rot.sweep.csv").read_text().splitlines()
    verdicts = [l.split(",")[4] for l in lines[1:]]
    assert verdicts == ["BoundedCertified", "BoundedCertified"]


def test_sweep_without_grid_is_config_error(tmp_path, capsys):
    cfg = write_config(tmp_path, "nogrid.json", GEO)
    assert main(["sweep", cfg, "--out", str(tmp_path / "out")]) == 2


# ---------------------------------------------------------------------------
# selftest
# ---------------------------------------------------------------------------

def test_selftest_passes_and_is_deterministic():
    bufs = []
    for _ in range(2):
        buf = io.StringIO()
        assert run_selftest(buf) == 0
        bufs.append(buf.getvalue())
    assert bufs[0] == bufs[1]
    assert "PASS" in bufs[0] and "FAIL" not in bufs[0]


def test_selftest_detects_corrupted_kernel(monkeypatch):
    # mutation check: a corrupted raising factorial must not pass unnoticed
    original = factpoly.raising

    def corrupted(x, n):
        out = original(x, n)
        return out + 1 if n == 2 else out

    monkeypatch.setattr(factpoly, "raising", corrupted)
    buf = io.StringIO()
    assert run_selftest(buf) == 1
    assert "FAIL" in buf.getvalue()


def test_cli_subprocess_entry_point(tmp_path):
    cfg = write_config(tmp_path, "geo.json", dict(GEO, horizon=2000))
    proc = subprocess.run(
        [sys.executable, "-m", "recbound", "analyze", str(cfg), "--out",
         str(tmp_path / "out")],
        capture_output=True,
        text=True,
        cwd=str(tmp_path),
    )
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "out" / "geo.report.txt").exists()
