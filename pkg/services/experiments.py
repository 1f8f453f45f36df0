"""Monte Carlo experiments for the damped stochastic NLS.

Every experiment maps an ExperimentConfig to a pydantic result. Trajectories
are the unit of work: they run inline or in a process pool and are always
merged in trajectory-index order, so ensemble statistics do not depend on
completion order.
"""
import math
from concurrent.futures import ProcessPoolExecutor
from functools import partial
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict

from models.experiment_models import (
    AuditResult,
    ConvergenceReport,
    ConvergenceRow,
    DiagnosticsSeries,
    ExperimentConfig,
    ExperimentKind,
    FailureRecord,
    PlaneWaveResult,
    SchemeKind,
    SolitonResult,
)
from models.grid_models import ComplexGridState, GridSpec, RealGridState4, TangentPair
from models.noise_models import NoisePath
from services import diagnostics
from services.grid_operators import avg_x, delta_x
from services.hamiltonian_systems import system_by_name
from services.integrators import advance, cms_step_generic, cms_step_nls, cn_step, ms_step_transformed, tangent_step
from services.noise import refine_or_coarsen, sample_path
from utils.csv_output import write_table
from utils.errors import ExperimentAborted, StepFailure

SCHEMES = {
    SchemeKind.CMS: cms_step_nls,
    SchemeKind.MS: ms_step_transformed,
    SchemeKind.CN: cn_step,
}

# truncations tabulated by a stochastic convergence run unless m_values is set
DEFAULT_M_VALUES = tuple(range(1, 9))


class TrajectoryOutcome(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    index: int
    values: Dict[str, Any] = {}
    failure: Optional[FailureRecord] = None


class ExperimentOutcome(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    experiment: ExperimentKind
    result: Any
    summary: Dict[str, float]
    files: List[str] = []


def map_trajectories(work: Callable[[int], TrajectoryOutcome], indices: Iterable[int], workers: int = 1) -> List[TrajectoryOutcome]:
    """Run ``work`` per trajectory index; results come back in index order"""
    indices = list(indices)
    if workers <= 1 or len(indices) <= 1:
        return [work(i) for i in indices]
    with ProcessPoolExecutor(max_workers=min(workers, len(indices))) as pool:
        return list(pool.map(work, indices))


def initial_field(cfg: ExperimentConfig, grid: GridSpec) -> np.ndarray:
    x = grid.nodes()
    if cfg.initial_condition == "plane":
        u = np.full(grid.n_nodes, cfg.amplitude, dtype=complex)
    elif cfg.initial_condition == "sine":
        u = np.sin(np.pi * x).astype(complex)
    else:
        u = (1.0 / np.cosh(x)).astype(complex)
    if not grid.periodic:
        u[0] = u[-1] = 0.0
    return u


def complex_trajectory(
    cfg: ExperimentConfig, scheme: SchemeKind, u0: np.ndarray, path: NoisePath, grid: GridSpec
) -> List[np.ndarray]:
    """Physical field u at every time level; the transformed scheme is mapped back by e^{-alpha t}"""
    stepper = partial(SCHEMES[scheme], params=cfg.params, grid=grid, cfg=cfg.step_config)
    states = advance(stepper, ComplexGridState(u=u0, time=0.0), path)
    if scheme == SchemeKind.MS:
        return [np.exp(-cfg.alpha * state.time) * state.u for state in states]
    return [np.array(state.u) for state in states]


def _failure(cfg: ExperimentConfig, index: int, error: StepFailure) -> TrajectoryOutcome:
    error.with_context(trajectory_index=index, seed=cfg.seed)
    record = FailureRecord(seed=cfg.seed, trajectory_index=index, step=error.step, residual=error.residual)
    return TrajectoryOutcome(index=index, failure=record)


def _write_failures(cfg: ExperimentConfig, failures: List[FailureRecord]) -> List[str]:
    if not failures or not cfg.out_dir:
        return []
    path = write_table(
        Path(cfg.out_dir) / "failures.csv",
        {
            "seed": [f.seed for f in failures],
            "trajectory_index": [f.trajectory_index for f in failures],
            "step": [-1 if f.step is None else f.step for f in failures],
            "residual": [f.residual for f in failures],
        },
    )
    return [path]


def _abort_on_any_failure(cfg: ExperimentConfig, outcomes: List[TrajectoryOutcome]) -> List[str]:
    failures = [o.failure for o in outcomes if o.failure is not None]
    files = _write_failures(cfg, failures)
    if failures:
        first = failures[0]
        print(f"❌ Trajectory {first.trajectory_index} failed at step {first.step} (residual {first.residual:.3e})")
        raise ExperimentAborted(
            f"Trajectory {first.trajectory_index} (seed {first.seed}) failed at step {first.step}"
        )
    return files


def _times(n_steps: int, dt: float) -> np.ndarray:
    return dt * np.arange(n_steps + 1)


def _mean(outcomes: List[TrajectoryOutcome], key: str) -> np.ndarray:
    return diagnostics.ensemble_mean([o.values[key] for o in outcomes])


def _with_leading_nan(values: np.ndarray) -> np.ndarray:
    return np.concatenate([[np.nan], values])


# plane wave

def plane_wave_trajectory(cfg: ExperimentConfig, index: int) -> TrajectoryOutcome:
    grid = cfg.grid
    path = sample_path(cfg.noise_model(index), grid, cfg.n_steps)
    try:
        fields = complex_trajectory(cfg, cfg.scheme, initial_field(cfg, grid), path, grid)
    except StepFailure as e:
        return _failure(cfg, index, e)

    W = np.concatenate([[0.0], np.cumsum(path.increments[:, 0])])
    A = complex(cfg.amplitude)
    rows = {"amp_num": [], "amp_exact": [], "amp_err": [], "phase_num": [], "phase_exact": [], "phase_err": []}
    for n, u in enumerate(fields):
        t = n * grid.dt
        exact = diagnostics.plane_wave_exact(t, W[n], A, cfg.params)
        amp_err, phase_err = diagnostics.amplitude_phase_error(u, exact)
        phase_exact = diagnostics.plane_wave_phase(t, W[n], A, cfg.params)
        rows["amp_num"].append(float(np.mean(np.abs(u))))
        rows["amp_exact"].append(abs(exact))
        rows["amp_err"].append(amp_err)
        rows["phase_num"].append(phase_exact + phase_err)
        rows["phase_exact"].append(phase_exact)
        rows["phase_err"].append(phase_err)
    return TrajectoryOutcome(index=index, values={k: np.array(v) for k, v in rows.items()})


def run_plane_wave(cfg: ExperimentConfig) -> PlaneWaveResult:
    print(f"🚀 Plane wave: {cfg.n_trajectories} paths, scheme {cfg.scheme.value}, T={cfg.t_final}")
    outcomes = map_trajectories(partial(plane_wave_trajectory, cfg), range(cfg.n_trajectories), cfg.workers)
    _abort_on_any_failure(cfg, outcomes)

    times = _times(cfg.n_steps, cfg.dt)
    amp_err = _mean(outcomes, "amp_err")
    phase_err = _mean(outcomes, "phase_err")
    final_amp = math.fsum(abs(o.values["amp_err"][-1]) for o in outcomes) / len(outcomes)
    phase_error_abs = diagnostics.ensemble_mean([np.abs(o.values["phase_err"]) for o in outcomes])
    final_phase = float(phase_error_abs[-1])
    result = PlaneWaveResult(
        series=DiagnosticsSeries(
            times=times.tolist(),
            amplitude=_mean(outcomes, "amp_num").tolist(),
            phase=_mean(outcomes, "phase_num").tolist(),
        ),
        amplitude_exact=_mean(outcomes, "amp_exact").tolist(),
        phase_exact=_mean(outcomes, "phase_exact").tolist(),
        amplitude_error=amp_err.tolist(),
        phase_error=phase_err.tolist(),
        phase_error_abs=phase_error_abs.tolist(),
        final_amplitude_error=final_amp,
        final_phase_error=final_phase,
        trajectories=len(outcomes),
    )
    print(f"✅ Plane wave done: |amplitude error| {final_amp:.3e}, |phase error| {final_phase:.3e} at T")
    return result


def write_plane_wave(cfg: ExperimentConfig, result: PlaneWaveResult) -> List[str]:
    out = Path(cfg.out_dir)
    series = result.series
    return [
        write_table(out / "amplitude.csv", {
            "t": series.times,
            "amp_num": series.amplitude,
            "amp_exact": result.amplitude_exact,
            "amp_err": result.amplitude_error,
        }),
        write_table(out / "phase.csv", {
            "t": series.times,
            "phase_num": series.phase,
            "phase_exact": result.phase_exact,
            "phase_err": result.phase_error,
        }),
    ]


# soliton charge and energy

def _energy_levels(fields: List[np.ndarray], grid: GridSpec) -> Tuple[np.ndarray, np.ndarray]:
    grad, quartic = [], []
    for u in fields:
        grad.append(0.5 * grid.dx * math.fsum(np.abs(delta_x(0.0, u, grid.dx, grid.periodic)) ** 2))
        quartic.append(0.25 * grid.dx * math.fsum(np.abs(avg_x(0.0, u, grid.dx, grid.periodic)) ** 4))
    return np.array(grad), np.array(quartic)


def soliton_trajectory(cfg: ExperimentConfig, index: int) -> TrajectoryOutcome:
    grid, params = cfg.grid, cfg.params
    path = sample_path(cfg.noise_model(index), grid, cfg.n_steps)
    u0 = initial_field(cfg, grid)
    try:
        cms = complex_trajectory(cfg, SchemeKind.CMS, u0, path, grid)
        cn = complex_trajectory(cfg, SchemeKind.CN, u0, path, grid)
    except StepFailure as e:
        return _failure(cfg, index, e)

    q_cms = np.array([diagnostics.discrete_charge(u, grid) for u in cms])
    q_cn = np.array([diagnostics.discrete_charge(u, grid) for u in cn])
    decay = math.exp(-2.0 * cfg.alpha * cfg.dt)
    r_cms, r_cn, energy_cms, energy_cn, cn_law, noise_term = [], [], [], [], [], []
    for n in range(cfg.n_steps):
        r_cms.append(diagnostics.charge_residual(q_cms[n], q_cms[n + 1], cfg.alpha, cfg.dt))
        r_cn.append(diagnostics.charge_residual(q_cn[n], q_cn[n + 1], cfg.alpha, cfg.dt))
        terms = diagnostics.energy_terms(cms[n], cms[n + 1], params, path.increments[n], grid)
        energy_cms.append(abs(terms["lhs"] - terms["rhs"]))
        noise_term.append(terms["noise"])
        energy_cn.append(diagnostics.energy_recursion_check(cn[n], cn[n + 1], params, path.increments[n], grid))
        cn_law.append(diagnostics.cn_charge_check(cn[n], cn[n + 1], cfg.alpha, cfg.dt, grid))
    ratio_error = np.abs(q_cms[1:] / q_cms[:-1] - decay) / decay
    e_grad, e_quartic = _energy_levels(cms, grid)

    return TrajectoryOutcome(
        index=index,
        values={
            "q_cms": q_cms,
            "q_cn": q_cn,
            "r_cms": np.array(r_cms),
            "r_cn": np.array(r_cn),
            "e_grad": e_grad,
            "e_quartic": e_quartic,
            "e_noise": np.concatenate([[0.0], np.cumsum(noise_term)]),
            "max_energy_cms": max(energy_cms),
            "max_energy_cn": max(energy_cn),
            "max_ratio": float(np.max(ratio_error)),
            "max_cn_law": max(cn_law),
        },
    )


def run_soliton(cfg: ExperimentConfig) -> SolitonResult:
    print(f"🚀 Soliton: {cfg.n_trajectories} paths, alpha={cfg.alpha}, eps={cfg.epsilon}, M={cfg.noise_modes}")
    outcomes = map_trajectories(partial(soliton_trajectory, cfg), range(cfg.n_trajectories), cfg.workers)
    _abort_on_any_failure(cfg, outcomes)

    times = _times(cfg.n_steps, cfg.dt).tolist()
    q_cms = _mean(outcomes, "q_cms")

    def worst(key: str) -> float:
        return max(float(np.max(np.abs(o.values[key]))) for o in outcomes)

    cms = DiagnosticsSeries(
        times=times,
        charge=q_cms.tolist(),
        charge_residual=_with_leading_nan(_mean(outcomes, "r_cms")).tolist(),
        energy_grad=_mean(outcomes, "e_grad").tolist(),
        energy_quartic=_mean(outcomes, "e_quartic").tolist(),
        energy_noise=_mean(outcomes, "e_noise").tolist(),
    )
    cn = DiagnosticsSeries(
        times=times,
        charge=_mean(outcomes, "q_cn").tolist(),
        charge_residual=_with_leading_nan(_mean(outcomes, "r_cn")).tolist(),
    )
    result = SolitonResult(
        cms=cms,
        cn=cn,
        charge_exact=diagnostics.reference_charge(times, q_cms[0], cfg.alpha).tolist(),
        max_cms_residual=worst("r_cms"),
        max_cn_residual=worst("r_cn"),
        max_charge_ratio_error=worst("max_ratio"),
        max_energy_residual_cms=worst("max_energy_cms"),
        max_energy_residual_cn=worst("max_energy_cn"),
        max_cn_charge_law=worst("max_cn_law"),
        trajectories=len(outcomes),
    )
    print(f"✅ Soliton done: max residual CMS {result.max_cms_residual:.3e}, CN {result.max_cn_residual:.3e}")
    return result


def write_soliton(cfg: ExperimentConfig, result: SolitonResult) -> List[str]:
    out = Path(cfg.out_dir)
    return [
        write_table(out / "charge.csv", {
            "t": result.cms.times,
            "Q_cms": result.cms.charge,
            "Q_cn": result.cn.charge,
            "Q_exact": result.charge_exact,
            "r_cms": result.cms.charge_residual,
            "r_cn": result.cn.charge_residual,
        }),
        write_table(out / "energy.csv", {
            "t": result.cms.times,
            "E_grad": result.cms.energy_grad,
            "E_quartic": result.cms.energy_quartic,
            "E_noise_cum": result.cms.energy_noise,
        }),
    ]


# mean-square convergence

def _level_dt(level: int) -> float:
    return 2.0 ** (-level)


def convergence_trajectory(cfg: ExperimentConfig, truncation_M: int, index: int) -> TrajectoryOutcome:
    """Squared L2 distance to the reference solution at T for every coarse level"""
    reference_grid = cfg.grid.with_dt(_level_dt(cfg.reference_level))
    n_reference = int(round(cfg.t_final / reference_grid.dt))
    u0 = initial_field(cfg, reference_grid)
    if cfg.epsilon == 0.0:
        reference_path = NoisePath(
            increments=np.zeros((n_reference, reference_grid.n_nodes)),
            dt=reference_grid.dt,
            resolution_level=cfg.reference_level,
            kind=cfg.noise_kind,
        )
    else:
        reference_path = sample_path(
            cfg.noise_model(index, truncation_M), reference_grid, n_reference, resolution_level=cfg.reference_level
        )

    try:
        reference = complex_trajectory(cfg, cfg.scheme, u0, reference_path, reference_grid)[-1]
        squared = []
        for level in cfg.coarse_levels:
            path = refine_or_coarsen(reference_path, level - cfg.reference_level)
            grid = reference_grid.with_dt(path.dt)
            coarse = complex_trajectory(cfg, cfg.scheme, u0, path, grid)[-1]
            squared.append(diagnostics.discrete_l2_error(coarse, reference, grid) ** 2)
    except StepFailure as e:
        return _failure(cfg, index, e)
    return TrajectoryOutcome(index=index, values={"squared": np.array(squared)})


def fit_slope(dts: List[float], errors: List[float]) -> float:
    """Least-squares slope of log2(error) against log2(dt)"""
    return float(np.polyfit(np.log2(dts), np.log2(errors), 1)[0])


def _convergence_curve(cfg: ExperimentConfig, truncation_M: int) -> Tuple[ConvergenceRow, List[FailureRecord]]:
    n_paths = 1 if cfg.epsilon == 0.0 else cfg.n_trajectories
    work = partial(convergence_trajectory, cfg, truncation_M)
    outcomes = map_trajectories(work, range(n_paths), cfg.workers)
    failures = [o.failure for o in outcomes if o.failure is not None]
    finished = [o for o in outcomes if o.failure is None]
    if len(failures) > cfg.failure_threshold * n_paths or not finished:
        _write_failures(cfg, failures)
        print(f"❌ {len(failures)} of {n_paths} trajectories failed for M={truncation_M}")
        raise ExperimentAborted(f"{len(failures)} of {n_paths} trajectories failed for M={truncation_M}")
    if failures:
        print(f"⚠️ Excluding {len(failures)} failed trajectories for M={truncation_M}")

    errors = np.sqrt(_mean(finished, "squared")).tolist()
    dts = [_level_dt(level) for level in cfg.coarse_levels]
    row = ConvergenceRow(truncation_M=truncation_M, dts=dts, errors=errors, slope=fit_slope(dts, errors))
    print(f"🧮 M={truncation_M}: slope {row.slope:.3f} over {len(finished)} paths")
    return row, failures


def run_convergence(cfg: ExperimentConfig) -> ConvergenceReport:
    print(
        f"🚀 Convergence: reference dt=2^-{cfg.reference_level}, levels {cfg.coarse_levels}, "
        f"eps={cfg.epsilon}, alpha={cfg.alpha}"
    )
    main, failures = _convergence_curve(cfg, cfg.noise_modes)
    per_M = None
    if cfg.epsilon > 0.0:
        per_M = []
        for m in cfg.m_values or DEFAULT_M_VALUES:
            row, extra = (main, []) if m == cfg.noise_modes else _convergence_curve(cfg, m)
            per_M.append(row)
            failures = failures + extra
    _write_failures(cfg, failures)
    report = ConvergenceReport(
        dts=main.dts,
        errors=main.errors,
        slope=main.slope,
        per_M=per_M,
        failures=len(failures),
        trajectories=1 if cfg.epsilon == 0.0 else cfg.n_trajectories,
    )
    print(f"✅ Convergence done: slope {report.slope:.3f}")
    return report


def write_convergence(cfg: ExperimentConfig, report: ConvergenceReport) -> List[str]:
    rows = report.per_M or [
        ConvergenceRow(truncation_M=cfg.noise_modes, dts=report.dts, errors=report.errors, slope=report.slope)
    ]
    m_column, dt_column, error_column = [], [], []
    for row in rows:
        m_column.extend([row.truncation_M] * len(row.dts))
        dt_column.extend(row.dts)
        error_column.extend(row.errors)
    # slope rows carry an empty dt
    for row in rows:
        m_column.append(row.truncation_M)
        dt_column.append(np.nan)
        error_column.append(row.slope)
    return [write_table(Path(cfg.out_dir) / "convergence.csv", {"M": m_column, "dt": dt_column, "error": error_column})]


# conformal 2-form audit

def audit_initial_state(cfg: ExperimentConfig, grid: GridSpec) -> np.ndarray:
    x = grid.nodes()
    envelope = 1.0 / np.cosh(x)
    if cfg.system == "kdv":
        u = 0.5 * envelope**2
        u[0] = u[-1] = 0.0
        phi = np.concatenate([[0.0], np.cumsum((u[1:] + u[:-1]) / 2.0) * grid.dx])
        v = np.gradient(u, grid.dx)
        v[-1] = 0.0
        w = np.gradient(v, grid.dx) + 3.0 * u**2
        return np.column_stack([phi, u, v, w])
    u = envelope * np.exp(0.5j * x)
    u[0] = u[-1] = 0.0
    p, q = u.real, u.imag
    return np.column_stack([p, q, np.gradient(p, grid.dx), np.gradient(q, grid.dx)])


def _unit_tangent(rng: np.random.Generator, shape) -> np.ndarray:
    T = rng.standard_normal(shape)
    return T / np.max(np.abs(T))


def audit_trajectory(cfg: ExperimentConfig, index: int) -> TrajectoryOutcome:
    grid, step_cfg = cfg.grid, cfg.step_config
    system = system_by_name(cfg.system, cfg.params)
    path = sample_path(cfg.noise_model(index), grid, cfg.n_steps)
    z = RealGridState4(z=audit_initial_state(cfg, grid), time=0.0)
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, index, 2]))
    tangents = TangentPair(U=_unit_tangent(rng, z.z.shape), V=_unit_tangent(rng, z.z.shape))

    defects = []
    try:
        for n in range(cfg.n_steps):
            noise_slice = path.increments[n]
            try:
                z_next = cms_step_generic(system, z, noise_slice, grid, step_cfg)
            except StepFailure as e:
                raise e.with_context(step=n)
            tangents_next = tangent_step(system, (z, z_next), tangents, noise_slice, grid, step_cfg)
            defect = diagnostics.two_form_defect(system, (z, z_next), tangents, tangents_next, grid)
            defects.append(np.abs(defect))
            z, tangents = z_next, tangents_next
    except StepFailure as e:
        return _failure(cfg, index, e)
    return TrajectoryOutcome(index=index, values={"defects": np.array(defects)})


def run_two_form_audit(cfg: ExperimentConfig) -> AuditResult:
    print(f"🚀 Two-form audit: {cfg.system}, {cfg.n_trajectories} paths, {cfg.n_steps} steps")
    outcomes = map_trajectories(partial(audit_trajectory, cfg), range(cfg.n_trajectories), cfg.workers)
    _abort_on_any_failure(cfg, outcomes)
    defects = np.max(np.stack([o.values["defects"] for o in outcomes]), axis=0)
    result = AuditResult(
        system=cfg.system,
        max_defect=float(np.max(defects)),
        step_max=np.max(defects, axis=1).tolist(),
        defects=defects.tolist(),
        trajectories=len(outcomes),
    )
    print(f"✅ Two-form audit done: max defect {result.max_defect:.3e}")
    return result


def write_two_form_audit(cfg: ExperimentConfig, result: AuditResult) -> List[str]:
    defects = np.array(result.defects)
    n, j = np.indices(defects.shape)
    return [write_table(Path(cfg.out_dir) / "audit.csv", {"n": n.ravel(), "j": j.ravel(), "defect": defects.ravel()})]


RUNNERS = {
    ExperimentKind.PLANE_WAVE: (run_plane_wave, write_plane_wave),
    ExperimentKind.SOLITON: (run_soliton, write_soliton),
    ExperimentKind.CONVERGENCE: (run_convergence, write_convergence),
    ExperimentKind.TWO_FORM_AUDIT: (run_two_form_audit, write_two_form_audit),
}


def summarize(result) -> Dict[str, float]:
    """Scalar fields of a result, for printing and run records"""
    return {
        key: float(value)
        for key, value in result.model_dump().items()
        if isinstance(value, (int, float)) and not isinstance(value, bool)
    }


def run_experiment(cfg: ExperimentConfig) -> ExperimentOutcome:
    run, write = RUNNERS[cfg.experiment]
    result = run(cfg)
    files = write(cfg, result) if cfg.out_dir else []
    summary = summarize(result)
    for key, value in summary.items():
        print(f"   {key}: {value:.6g}")
    return ExperimentOutcome(experiment=cfg.experiment, result=result, summary=summary, files=files)
