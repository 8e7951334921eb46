"""CLI surface tests: subcommands, wire formats, exit codes, determinism."""

import json

import numpy as np
import pytest

from hrlmc import cli


def run_cli(argv):
    return cli.main(argv)


def test_sample_writes_trace_csv(tmp_path):
    out = tmp_path / "trace.csv"
    code = run_cli([
        "sample", "--entropy", "burg", "--target", "gamma:a=5,b=1",
        "--h", "0.05", "--steps", "20", "--chains", "2", "--seed", "3",
        "--x0", "1.0", "--out", str(out),
    ])
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "chain,step,h,x_1"
    assert len(lines) == 1 + 2 * 21
    first = lines[1].split(",")
    assert first[:3] == ["0", "0", "0"]
    assert float(lines[2].split(",")[2]) == 0.05


def test_sample_rerun_byte_identical(tmp_path):
    args = [
        "sample", "--entropy", "burg", "--target", "gamma:a=5,b=1",
        "--h", "0.05", "--steps", "50", "--chains", "3", "--seed", "11",
        "--x0", "0.5", "--burn-in", "10", "--thin", "5",
    ]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run_cli(args + ["--out", str(a)]) == 0
    assert run_cli(args + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_sample_gate_failure_exit_code(tmp_path):
    code = run_cli([
        "sample", "--entropy", "burg", "--target", "gamma:a=5,b=1",
        "--h", "0.5", "--steps", "5", "--x0", "1.0",
        "--out", str(tmp_path / "t.csv"),
    ])
    assert code == 2


def test_sample_override_gate(tmp_path):
    code = run_cli([
        "sample", "--entropy", "burg", "--target", "gamma:a=5,b=1",
        "--h", "0.5", "--steps", "5", "--x0", "1.0", "--override-gate",
        "--out", str(tmp_path / "t.csv"),
    ])
    assert code == 0


def test_sample_harmonic_schedule(tmp_path):
    out = tmp_path / "t.csv"
    code = run_cli([
        "sample", "--entropy", "logit", "--target", "beta:a1=4,a2=4",
        "--schedule", "harmonic:a=0.3", "--steps", "10", "--x0", "0.5",
        "--out", str(out),
    ])
    assert code == 0
    rows = out.read_text().splitlines()[1:]
    assert float(rows[1].split(",")[2]) == 0.3  # h_1 = a
    assert float(rows[2].split(",")[2]) == 0.15  # h_2 = a / 2


def test_distance_command(tmp_path):
    rng = np.random.default_rng(0)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    np.savetxt(a, rng.gamma(5.0, size=(64, 1)), delimiter=",")
    np.savetxt(b, rng.gamma(5.0, size=(64, 1)), delimiter=",")
    out = tmp_path / "d.json"
    code = run_cli([
        "distance", "--entropy", "burg", "--a", str(a), "--b", str(b),
        "--method", "auto", "--out", str(out),
    ])
    assert code == 0
    payload = json.loads(out.read_text())
    assert payload["method"] == "exact-1d"
    assert payload["value"] >= 0.0
    assert payload["n_points"] == 64


def test_check_then_bound_round_trip(tmp_path):
    report_path = tmp_path / "report.json"
    code = run_cli([
        "check", "--entropy", "burg", "--target", "gamma:a=5,b=1",
        "--pairs", "2000", "--seed", "4", "--out", str(report_path),
    ])
    assert code == 0
    report = json.loads(report_path.read_text())
    assert report["admissible"] is True
    assert report["kappa_tilde"] == pytest.approx(np.sqrt(2.0), rel=1e-12)

    bound_path = tmp_path / "bound.json"
    code = run_cli([
        "bound", "--report", str(report_path), "--h", "0.05", "--p", "1",
        "--eps", "0.01", "--out", str(bound_path),
    ])
    assert code == 0
    bound = json.loads(bound_path.read_text())
    assert bound["rho"] == pytest.approx(np.sqrt(0.74), rel=1e-12)
    assert bound["step_window"] == pytest.approx(0.375, rel=1e-12)
    assert bound["k_eps"] >= 1
    assert "formulas" in bound


def test_bound_step_out_of_window_exit_code(tmp_path):
    report_path = tmp_path / "report.json"
    run_cli([
        "check", "--entropy", "burg", "--target", "gamma:a=5,b=1",
        "--pairs", "500", "--seed", "4", "--out", str(report_path),
    ])
    code = run_cli([
        "bound", "--report", str(report_path), "--h", "0.4", "--p", "1",
        "--out", str(tmp_path / "b.json"),
    ])
    assert code == 2


def test_experiment_command_and_determinism(tmp_path):
    cfg = tmp_path / "exp.ini"
    cfg.write_text(
        "entropy = burg\n"
        "target = gamma:a=5;b=1\n"
        "schedule = constant:h=0.05\n"
        "steps = 30\n"
        "chains = 128\n"
        "x0 = 0.2\n"
        "checkpoints = 0,10,20,30\n"
        "base_seed = 2\n"
        "reference_seeds = 5\n"
    )
    out1, out2 = tmp_path / "r1.csv", tmp_path / "r2.csv"
    assert run_cli(["experiment", "--config", str(cfg), "--out", str(out1)]) == 0
    assert run_cli(["experiment", "--config", str(cfg), "--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()
    header = out1.read_text().splitlines()[0]
    assert header == "checkpoint_k,w2phi_median,w2phi_iqr,bound_value,floor"


def test_sweep_command(tmp_path):
    cfg = tmp_path / "sweep.ini"
    cfg.write_text(
        "entropy = burg\n"
        "target = gamma:a=5;b=1\n"
        "schedule = constant:h=0.2\n"
        "steps = 60\n"
        "chains = 128\n"
        "x0 = 1.0\n"
        "checkpoints = 40,60\n"
        "base_seed = 2\n"
        "reference_seeds = 5\n"
        "plateau_window = 2\n"
    )
    out = tmp_path / "sweep.csv"
    assert run_cli(["sweep", "--config", str(cfg), "--dims", "1,2", "--out", str(out)]) == 0
    text = out.read_text()
    assert text.splitlines()[0] == "p,plateau,raw_median,baseline_median"
    assert "# loglog_slope = " in text


def test_numerical_breakdown_exit_code(monkeypatch, tmp_path):
    from hrlmc.errors import NumericalBreakdown

    def explode(entropy, target, schedule, x0, n_steps, base_seed, n_chains, **kw):
        raise NumericalBreakdown("synthetic")

    monkeypatch.setattr(cli, "run_parallel_chains", explode)
    code = run_cli([
        "sample", "--entropy", "burg", "--target", "gamma:a=5,b=1",
        "--h", "0.05", "--steps", "5", "--x0", "1.0",
        "--out", str(tmp_path / "t.csv"),
    ])
    assert code == 3


def test_sweep_rerun_byte_identical(tmp_path):
    cfg = tmp_path / "sweep.ini"
    cfg.write_text(
        "entropy = burg\ntarget = gamma:a=5;b=1\nschedule = constant:h=0.2\n"
        "steps = 60\nchains = 128\nx0 = 1.0\ncheckpoints = 40,60\n"
        "base_seed = 2\nreference_seeds = 5\nplateau_window = 2\n"
    )
    blobs = []
    for name in ("s1.csv", "s2.csv"):
        out = tmp_path / name
        assert run_cli(["sweep", "--config", str(cfg), "--dims", "1,2", "--out", str(out)]) == 0
        blobs.append(out.read_bytes())
    assert blobs[0] == blobs[1]
