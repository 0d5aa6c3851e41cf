"""End-to-end CLI tests: exit codes, artifact layout, config merging,
reproducibility, and the parallel worker path."""

import io
import json
import os
from contextlib import redirect_stderr

import pytest

from zoresid.cli import main


def test_run_writes_artifacts(tmp_path):
    out = tmp_path / "run"
    code = main(["run", "--problem", "quadratic", "--d", "4", "--setting", "det_smooth_cvx",
                 "--T", "100", "--seeds", "0,1", "--out", str(out)])
    assert code == 0
    assert (out / "run_0.csv").exists() and (out / "run_1.csv").exists()
    assert (out / "run_gap.png").exists()
    summary = json.loads((out / "summary.json").read_text())
    assert summary["seeds"] == [0, 1]
    assert len(summary["runs"]) == 2
    assert summary["mean_final_metric"] >= 0.0


def test_rerun_is_byte_identical(tmp_path):
    args = ["run", "--problem", "norm", "--d", "4", "--setting", "det_nonsmooth_cvx",
            "--T", "80", "--seeds", "3", "--no-figures"]
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b)]) == 0
    assert (a / "run_3.csv").read_bytes() == (b / "run_3.csv").read_bytes()
    assert (a / "summary.json").read_bytes() == (b / "summary.json").read_bytes()


def test_parallel_matches_sequential(tmp_path):
    args = ["run", "--problem", "norm", "--d", "4", "--setting", "det_nonsmooth_cvx",
            "--T", "60", "--seeds", "0,1,2", "--no-figures"]
    seq, par = tmp_path / "seq", tmp_path / "par"
    assert main(args + ["--out", str(seq)]) == 0
    os.environ["ZO_THREADS"] = "3"
    try:
        assert main(args + ["--out", str(par)]) == 0
    finally:
        del os.environ["ZO_THREADS"]
    for seed in (0, 1, 2):
        assert (seq / f"run_{seed}.csv").read_bytes() == (par / f"run_{seed}.csv").read_bytes()


def test_missing_sigma0_exits_2(tmp_path):
    err = io.StringIO()
    with redirect_stderr(err):
        code = main(["run", "--problem", "norm", "--d", "4", "--setting", "sto_nonsmooth_cvx",
                     "--T", "50", "--out", str(tmp_path / "x"), "--no-figures"])
    assert code == 2
    assert "sigma0" in err.getvalue()


def test_config_file_merge_cli_wins(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"problem": "norm", "d": 4, "T": 50, "seeds": "7"}))
    out = tmp_path / "out"
    code = main(["run", "--config", str(cfg), "--T", "25", "--out", str(out), "--no-figures"])
    assert code == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["T"] == 25  # command line wins over the config's 50
    assert summary["seeds"] == [7]


def test_unknown_config_field_exits_2(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"mystery_field": 1}))
    with pytest.raises(SystemExit) as exc:
        main(["run", "--config", str(cfg), "--out", str(tmp_path / "x")])
    assert exc.value.code == 2


def test_unknown_diagnose_suite_exits_2(tmp_path):
    assert main(["diagnose", "mystery", "--out", str(tmp_path / "d")]) == 2


def test_sweep_eps_writes_table(tmp_path):
    out = tmp_path / "se"
    code = main(["sweep-eps", "--problem", "norm", "--d", "4", "--setting", "det_nonsmooth_cvx",
                 "--eps-list", "0.8,0.4,0.2", "--seeds", "0", "--out", str(out),
                 "--T-max", "4096", "--no-figures"])
    assert code == 0
    lines = (out / "sweep.csv").read_text().splitlines()
    assert lines[0] == "epsilon,T_eps,metric,censored"
    assert len(lines) == 4
    summary = json.loads((out / "sweep_summary.json").read_text())
    assert summary["fitted_slope"] is not None


def test_sweep_d_requires_three_values(tmp_path):
    code = main(["sweep-d", "--problem", "norm", "--setting", "det_nonsmooth_cvx",
                 "--eps", "0.5", "--d-sweep", "2,4", "--out", str(tmp_path / "sd")])
    assert code == 2


def test_estimate_constants_writes_json(tmp_path):
    out = tmp_path / "ec"
    code = main(["estimate-constants", "--problem", "norm", "--d", "4", "--alpha", "0.1",
                 "--n-draws", "50000", "--out", str(out)])
    assert code == 0
    payload = json.loads((out / "constants.json").read_text())
    assert payload["c0_hat"] > 0
