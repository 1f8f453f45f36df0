import math

import numpy as np
import pandas as pd
import pytest

from models.experiment_models import ExperimentConfig, ExperimentKind, SchemeKind
from services import experiments
from services.experiments import (
    fit_slope,
    map_trajectories,
    run_convergence,
    run_experiment,
    run_plane_wave,
    run_soliton,
    run_two_form_audit,
)
from utils.errors import ExperimentAborted


def plane_wave_config(**overrides) -> ExperimentConfig:
    values = dict(
        experiment="plane-wave",
        initial_condition="plane",
        x_left=0.0,
        x_right=2.0 * math.pi,
        dx=2.0 * math.pi / 16,
        boundary="periodic",
        dt=0.01,
        T=0.5,
        alpha=0.1,
        epsilon=math.sqrt(2.0),
        amplitude=0.5,
        noise_kind="scalar",
        noise_modes=1,
        paths=4,
    )
    values.update(overrides)
    return ExperimentConfig(**values)


def soliton_config(**overrides) -> ExperimentConfig:
    values = dict(
        experiment="soliton",
        x_left=-10.0,
        x_right=10.0,
        dx=0.2,
        dt=0.01,
        T=0.2,
        alpha=0.1,
        epsilon=0.5,
        noise_modes=8,
        paths=2,
    )
    values.update(overrides)
    return ExperimentConfig(**values)


def convergence_config(**overrides) -> ExperimentConfig:
    values = dict(
        experiment="convergence",
        initial_condition="sine",
        x_left=-1.0,
        x_right=1.0,
        dx=1.0 / 32,
        T=0.25,
        alpha=0.1,
        epsilon=0.0,
        noise_modes=1,
        paths=1,
        reference_level=11,
        coarse_levels=[9, 7, 5],
        fixed_point_tol=1e-12,
    )
    values.update(overrides)
    return ExperimentConfig(**values)


def test_plane_wave_amplitude_is_exact():
    result = run_plane_wave(plane_wave_config())
    assert result.trajectories == 4
    assert len(result.series.times) == 51
    assert max(abs(e) for e in result.amplitude_error) < 1e-12
    assert result.final_amplitude_error < 1e-12
    assert result.final_phase_error > 1e6 * max(result.final_amplitude_error, 1e-18)
    assert len(result.phase_error_abs) == 51
    assert result.phase_error_abs[0] == 0.0
    assert result.phase_error_abs[-1] == result.final_phase_error > 0.0


def test_plane_wave_without_noise_or_damping():
    result = run_plane_wave(plane_wave_config(alpha=0.0, epsilon=0.0, paths=1))
    np.testing.assert_allclose(result.series.amplitude, 0.5, atol=1e-12)


@pytest.mark.parametrize("scheme", [SchemeKind.MS, SchemeKind.CN])
def test_plane_wave_other_schemes(scheme):
    result = run_plane_wave(plane_wave_config(scheme=scheme, paths=2))
    assert result.final_amplitude_error < 1e-3


def test_soliton_charge_and_energy():
    result = run_soliton(soliton_config())
    assert result.max_cms_residual < 1e-9
    assert result.max_charge_ratio_error < 1e-9
    assert result.max_energy_residual_cms < 1e-9
    assert result.max_cn_charge_law < 1e-10
    assert result.max_cn_residual > 100.0 * max(result.max_cms_residual, 1e-15)
    assert math.isnan(result.cms.charge_residual[0])
    np.testing.assert_allclose(result.cms.charge, result.charge_exact, rtol=1e-9)


def test_deterministic_convergence_is_second_order():
    report = run_convergence(convergence_config())
    assert report.trajectories == 1
    assert report.failures == 0
    assert report.dts == [2.0**-9, 2.0**-7, 2.0**-5]
    assert 1.8 <= report.slope <= 2.2


def test_fit_slope_recovers_power_law():
    dts = [2.0**-k for k in (3, 5, 7, 9)]
    assert fit_slope(dts, [3.0 * dt**1.5 for dt in dts]) == pytest.approx(1.5)


def test_stochastic_convergence_records_per_truncation_rows():
    cfg = convergence_config(epsilon=0.5, paths=2, reference_level=8, coarse_levels=[7, 5], m_values=[1, 2])
    report = run_convergence(cfg)
    assert [row.truncation_M for row in report.per_M] == [1, 2]
    assert all(e > 0 for row in report.per_M for e in row.errors)
    assert report.trajectories == 2


def test_stochastic_convergence_tabulates_eight_truncations_by_default():
    cfg = convergence_config(epsilon=0.5, noise_modes=1, paths=2, reference_level=6, coarse_levels=[5, 4])
    assert cfg.m_values == []
    report = run_convergence(cfg)
    assert [row.truncation_M for row in report.per_M] == list(range(1, 9))
    assert report.per_M[0].errors == report.errors


def test_deterministic_convergence_has_no_truncation_table():
    report = run_convergence(convergence_config(reference_level=6, coarse_levels=[5, 4]))
    assert report.per_M is None


@pytest.mark.parametrize("system", ["nls", "kdv"])
def test_two_form_audit(system):
    cfg = ExperimentConfig(
        experiment="two-form-audit", system=system, x_left=-5.0, x_right=5.0, dx=0.5, dt=0.01, T=0.1, paths=2
    )
    result = run_two_form_audit(cfg)
    assert len(result.step_max) == 10
    assert np.array(result.defects).shape == (10, 20)
    assert result.max_defect < 1e-9


def test_step_failure_aborts_and_writes_ledger(tmp_path):
    cfg = plane_wave_config(max_iterations=1, paths=2, out_dir=str(tmp_path))
    with pytest.raises(ExperimentAborted):
        run_plane_wave(cfg)
    ledger = pd.read_csv(tmp_path / "failures.csv")
    assert list(ledger.columns) == ["seed", "trajectory_index", "step", "residual"]
    assert ledger["trajectory_index"].tolist() == [0, 1]
    assert (ledger["step"] == 0).all()


def test_convergence_failure_threshold():
    with pytest.raises(ExperimentAborted):
        run_convergence(convergence_config(max_iterations=1, reference_level=6, coarse_levels=[5, 4]))


def test_run_experiment_writes_expected_files(tmp_path):
    outcome = run_experiment(soliton_config(paths=1, out_dir=str(tmp_path)))
    assert outcome.experiment == ExperimentKind.SOLITON
    assert sorted(p.rsplit("/", 1)[-1] for p in outcome.files) == ["charge.csv", "energy.csv"]
    charge = pd.read_csv(tmp_path / "charge.csv")
    assert list(charge.columns) == ["t", "Q_cms", "Q_cn", "Q_exact", "r_cms", "r_cn"]
    energy = pd.read_csv(tmp_path / "energy.csv")
    assert list(energy.columns) == ["t", "E_grad", "E_quartic", "E_noise_cum"]
    assert "max_cms_residual" in outcome.summary


def test_outputs_are_byte_identical_across_runs(tmp_path):
    first, second = tmp_path / "a", tmp_path / "b"
    run_experiment(plane_wave_config(out_dir=str(first)))
    run_experiment(plane_wave_config(out_dir=str(second)))
    for name in ("amplitude.csv", "phase.csv"):
        assert (first / name).read_bytes() == (second / name).read_bytes()


def test_convergence_and_audit_csv_layout(tmp_path):
    run_experiment(convergence_config(reference_level=7, coarse_levels=[6, 5], out_dir=str(tmp_path / "c")))
    table = pd.read_csv(tmp_path / "c" / "convergence.csv")
    assert list(table.columns) == ["M", "dt", "error"]
    assert len(table) == 3
    assert math.isnan(table["dt"].iloc[-1])

    audit = ExperimentConfig(
        experiment="two-form-audit", x_left=-2.0, x_right=2.0, dx=0.5, dt=0.01, T=0.02, paths=1,
        out_dir=str(tmp_path / "a"),
    )
    run_experiment(audit)
    table = pd.read_csv(tmp_path / "a" / "audit.csv")
    assert list(table.columns) == ["n", "j", "defect"]
    assert len(table) == 2 * 8


def test_trajectory_order_does_not_change_statistics():
    cfg = soliton_config(paths=3)
    serial = map_trajectories(lambda i: experiments.soliton_trajectory(cfg, i), range(3))
    shuffled = [experiments.soliton_trajectory(cfg, i) for i in (2, 0, 1)]
    shuffled.sort(key=lambda o: o.index)
    for a, b in zip(serial, shuffled):
        np.testing.assert_array_equal(a.values["q_cms"], b.values["q_cms"])
    parallel = run_soliton(cfg.model_copy(update={"workers": 2}))
    assert parallel.cms.charge == run_soliton(cfg).cms.charge
