"""Experiment-layer tests: config round trips, traces, sweeps, plateaus."""

import math

import numpy as np
import pytest

from hrlmc import experiments as exp, target as tgt
from hrlmc.errors import InvalidParameters


def small_gamma_config(**overrides):
    base = dict(
        entropy="burg",
        target="gamma:a=5;b=1",
        schedule="constant:h=0.05",
        steps=60,
        chains=256,
        x0=(0.2,),
        checkpoints=(0, 10, 20, 40, 60),
        base_seed=5,
        reference_seeds=10,
    )
    base.update(overrides)
    return exp.ExperimentConfig(**base)


# -------------------------------------------------------------------- config


def test_config_round_trip_is_lossless():
    cfg = small_gamma_config(x0=(0.2, 0.3), dims=(1, 2, 4), out="trace.csv")
    assert exp.ExperimentConfig.from_text(cfg.to_text()) == cfg


def test_config_file_round_trip(tmp_path):
    cfg = small_gamma_config()
    path = tmp_path / "exp.ini"
    cfg.to_file(path)
    assert exp.ExperimentConfig.from_file(path) == cfg


def test_config_accepts_comments_and_rejects_unknown_keys():
    text = "# comment\nentropy = burg\ntarget = gamma:a=5;b=1\nschedule = constant:h=0.05\nsteps = 10\nchains = 8\n"
    cfg = exp.ExperimentConfig.from_text(text)
    assert cfg.steps == 10 and cfg.reference_seeds == 20
    with pytest.raises(InvalidParameters):
        exp.ExperimentConfig.from_text(text + "colour = blue\n")
    with pytest.raises(InvalidParameters):
        exp.ExperimentConfig.from_text("entropy burg\n")


# ---------------------------------------------------------------- experiment


@pytest.fixture(scope="module")
def gamma_result():
    return exp.run_convergence_experiment(small_gamma_config())


def test_experiment_rows_shape(gamma_result):
    res = gamma_result
    assert list(res.checkpoints) == [0, 10, 20, 40, 60]
    assert res.medians.shape == res.iqrs.shape == res.bound_values.shape == (5,)
    assert res.total_rejections >= 0


def test_bound_row_at_zero_is_w0_plus_floor(gamma_result):
    res = gamma_result
    assert res.bound_values[0] == pytest.approx(res.w0_hat + res.floor, rel=1e-12)


def test_bound_values_reproducible_from_report(gamma_result):
    # Every bound row must follow from the stored report and formulas alone.
    res = gamma_result
    expect = res.rho ** res.checkpoints.astype(float) * res.w0_hat + res.floor
    np.testing.assert_allclose(res.bound_values, expect, rtol=1e-12)


def test_experiment_distance_decreases_toward_plateau(gamma_result):
    res = gamma_result
    assert res.medians[0] > res.medians[1] > res.medians[2]
    assert res.medians[-1] < 0.2


def test_experiment_csv_deterministic():
    cfg = small_gamma_config()
    a = exp.run_convergence_experiment(cfg).to_csv()
    b = exp.run_convergence_experiment(cfg).to_csv()
    assert a == b
    assert a.splitlines()[0] == "checkpoint_k,w2phi_median,w2phi_iqr,bound_value,floor"


def test_experiment_validates_checkpoints():
    with pytest.raises(InvalidParameters):
        exp.run_convergence_experiment(small_gamma_config(checkpoints=(10, 20)))
    with pytest.raises(InvalidParameters):
        exp.run_convergence_experiment(small_gamma_config(checkpoints=(0, 100)))


def test_harmonic_schedule_has_no_bound_curve():
    cfg = small_gamma_config(schedule="harmonic:a=0.37", checkpoints=(0, 30, 60))
    res = exp.run_convergence_experiment(cfg)
    assert np.all(np.isnan(res.bound_values))
    assert math.isnan(res.floor)


def test_harmonic_run_beats_constant_floor_late():
    # Qualitative decreasing-step check: by k = 500 the harmonic run sits
    # below the constant-step bound floor for h = h_1.
    a = 0.37
    cfg = small_gamma_config(
        schedule=f"harmonic:a={a}", steps=500, chains=512,
        checkpoints=(0, 250, 500), reference_seeds=10,
    )
    res = exp.run_convergence_experiment(cfg)
    const = exp.run_convergence_experiment(
        small_gamma_config(schedule=f"constant:h={a}", steps=10, chains=64,
                           checkpoints=(0, 10), reference_seeds=4)
    )
    assert res.medians[-1] < const.floor


# --------------------------------------------------------------------- sweep


def test_sweep_needs_gamma_template():
    cfg = small_gamma_config(target="beta:a1=4,a2=4", checkpoints=(40, 60))
    with pytest.raises(InvalidParameters):
        exp.run_dimension_sweep(cfg, dims=[1, 2])


def test_sweep_small_dims_monotone():
    cfg = exp.ExperimentConfig(
        entropy="burg", target="gamma:a=5;b=1", schedule="constant:h=0.2",
        steps=80, chains=256, x0=(1.0,), checkpoints=(60, 80),
        base_seed=3, reference_seeds=8, plateau_window=2,
    )
    res = exp.run_dimension_sweep(cfg, dims=[1, 4])
    assert res.plateaus[1] > res.plateaus[0] > 0.0
    csv = res.to_csv()
    assert csv.splitlines()[0] == "p,plateau,raw_median,baseline_median"
    assert "# loglog_slope = " in csv


# ------------------------------------------------------------------ plateaus


def test_moment_plateau_gaussian_matches_theory():
    # For h = 0.1 on A = diag(1, 2) the stationary chain covariance is
    # diag(1/(1 - h/2), (1/2)/(1 - h)) and the distance follows in closed form.
    gauss = tgt.gaussian_target(np.diag([1.0, 2.0]))
    got = exp.moment_plateau_gaussian(gauss, 0.1, n_chains=1024, n_steps=2400,
                                      burn_in=800, seed=9, record_every=4)
    sig = np.sqrt(np.array([1.0 / (1.0 - 0.05), 0.5 / (1.0 - 0.1)]))
    expect = math.sqrt(np.sum((sig - np.sqrt([1.0, 0.5])) ** 2))
    assert got == pytest.approx(expect, abs=0.02)


def test_fit_decay_slope_recovers_synthetic_rate():
    ks = np.arange(0, 101, 5)
    med = 3.0 * np.exp(-0.12 * ks) + 0.05
    slope = exp.fit_decay_slope(ks, med, plateau=0.05, k_max=100, min_gap=0.01)
    assert slope == pytest.approx(-0.12, rel=1e-6)
    with pytest.raises(InvalidParameters):
        exp.fit_decay_slope(ks, med, plateau=0.05, k_max=4, min_gap=0.01)


def test_sweep_per_dimension_entries_are_independent():
    cfg = exp.ExperimentConfig(
        entropy="burg", target="gamma:a=5;b=1", schedule="constant:h=0.2",
        steps=60, chains=128, x0=(1.0,), checkpoints=(40, 60),
        base_seed=3, reference_seeds=5, plateau_window=2,
    )
    solo = exp.run_dimension_sweep(cfg, dims=[2])
    both = exp.run_dimension_sweep(cfg, dims=[1, 2])
    assert solo.plateaus[0] == both.plateaus[1]
