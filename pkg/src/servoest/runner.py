"""Scenario orchestration: single runs, model comparisons, and
particle-count sweeps over realization ensembles.

A realization is one (measurement-noise seed, estimator set) execution on
the shared truth trajectory.  The truth plant has no process noise, so the
trajectory is identical across realizations and is simulated once per
scenario; only the synthesized measurements differ by seed.  Realization
seeds are ``base_seed + realization index``.
"""
from __future__ import annotations

import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import __version__, report
from .config import ScenarioConfig
from .kalman import DiscreteLinearModel, discretize_zoh, kf_run
from .metrics import IntervalSpec, ensemble_stats, interval_nrmse, nrmse
from .model import PlantState
from .particle import LikelihoodSpec, PriorSpec, ProcessNoiseSpec, pf_run
from .plants import (SIGMA_D_SQ, SIGMA_F_SQ, LinearModel, PlantTrajectory,
                     simulate_actual, simulate_linear, simulate_nominal,
                     synthesize_measurements)
from .signals import RngStream, sinusoid

__all__ = ["run_scenario", "run_estimate", "run_simulate",
           "run_compare_models", "SweepResult", "CompareResult",
           "SimulateResult", "COMPARE_FREQUENCIES"]

log = logging.getLogger(__name__)

# Model-comparison protocol: sinusoid frequencies (Hz), amplitude (m),
# record length (s), and the transient skipped before scoring (s).
COMPARE_FREQUENCIES = (1.0, 8.0, 14.0, 19.0)
COMPARE_AMPLITUDE = 25.0e-3
COMPARE_DURATION = 5.0
COMPARE_TRANSIENT = 1.0

QUANTITIES_KF = ("disp", "vel", "acc")
QUANTITIES_PF = ("disp", "vel", "acc", "force")


def _interval_spec(duration: float) -> IntervalSpec:
    """Thirds of the record; (0, 10, 20, 30) for the default 30 s run."""
    return IntervalSpec((0.0, duration / 3.0, 2.0 * duration / 3.0, duration))


def _discrete_model(cfg: ScenarioConfig, lm: LinearModel,
                    dt: float) -> DiscreteLinearModel:
    ad, bd = discretize_zoh(lm.A, lm.B, dt)
    r = SIGMA_D_SQ
    q = cfg.kf.q_over_r * r * np.eye(4)
    return DiscreteLinearModel(Ad=ad, Bd=bd, H=lm.C[0:1], Q=q, R=r)


def _kf_prior(cfg: ScenarioConfig, lm: LinearModel):
    """Zero mean; per-state stds matched to the PF prior through the output
    map (internal state i carries the (3-i)-th displacement derivative
    scaled by 1/C[0,3])."""
    scale = lm.C[0, 3]
    sigma_d = float(np.sqrt(SIGMA_D_SQ))
    w = cfg.pf.omega_ref
    stds = sigma_d * np.array([w ** 3, w ** 2, w, 1.0]) / scale
    return np.zeros(4), np.diag(stds ** 2)


def _pf_specs(cfg: ScenarioConfig):
    sigma_d = float(np.sqrt(SIGMA_D_SQ))
    w = cfg.pf.omega_ref
    prior = PriorSpec(mean=PlantState(0.0, 0.0, 0.0, 0.0),
                      stds=sigma_d * np.array([1.0, w, w ** 2, w ** 3]))
    q = ProcessNoiseSpec(sigma_p=cfg.sigma_p, omega_ref=cfg.pf.omega_ref)
    ls = LikelihoodSpec(sigma_d=sigma_d, sigma_f=float(np.sqrt(SIGMA_F_SQ)))
    return prior, q, ls


@dataclass(frozen=True)
class SweepResult:
    """In-memory view of a scenario run (everything is also on disk)."""

    manifest_path: str
    summary_rows: tuple
    realizations: tuple  # _RealizationOutput per successful realization
    failures: tuple


@dataclass(frozen=True)
class CompareResult:
    manifest_path: str
    rows: tuple  # (frequency_hz, model, quantity, nrmse)


@dataclass(frozen=True)
class SimulateResult:
    manifest_path: str


@dataclass(frozen=True)
class _RealizationOutput:
    index: int
    # (estimator, particles or None, quantity, interval index) -> NRMSE %
    nrmse: dict
    # particle count -> sorted degenerate step indices
    degenerate: dict
    # canonical time-series columns for this realization
    columns: dict


def _run_realization(cfg: ScenarioConfig, truth_states: np.ndarray,
                     truth_forces: np.ndarray, input_ts,
                     r: int) -> _RealizationOutput:
    seed = cfg.run.base_seed + r
    root = RngStream(seed, 0)
    truth = PlantTrajectory(states=truth_states, forces=truth_forces,
                            input=input_ts)
    meas = synthesize_measurements(truth, cfg.noise_level,
                                   (root.child(1), root.child(2)))
    spec = _interval_spec(input_ts.duration)
    truth_by_q = {"disp": truth.disp, "vel": truth.vel, "acc": truth.acc,
                  "force": truth.force}

    nrmse_out = {}
    degenerate = {}
    columns = {
        "t": input_ts.times,
        "truth_disp": truth.disp.values,
        "truth_vel": truth.vel.values,
        "truth_acc": truth.acc.values,
        "truth_force": truth.force.values,
        "meas_disp": meas.disp_noisy.values,
        "meas_force": meas.force_noisy.values,
    }

    if "kf" in cfg.estimators:
        lm = LinearModel()
        dm = _discrete_model(cfg, lm, input_ts.dt)
        x0, p0 = _kf_prior(cfg, lm)
        kf_series = dict(zip(QUANTITIES_KF,
                             kf_run(dm, input_ts, meas.disp_noisy,
                                    x0, p0, lm.C)))
        for q, series in kf_series.items():
            columns[f"kf_{q}"] = series.values
            for i, v in enumerate(interval_nrmse(series, truth_by_q[q],
                                                 spec)):
                nrmse_out[("kf", None, q, i)] = v

    if "pf" in cfg.estimators:
        prior, qspec, ls = _pf_specs(cfg)
        sp = cfg.plant.specimen_nominal()
        tp = cfg.plant.transfer()
        for n in cfg.pf.particles:
            result = pf_run(n, prior, qspec, ls, input_ts, meas,
                            root.child(3, n), sp, tp)
            degenerate[n] = list(result.degenerate_steps)
            pf_series = {"disp": result.disp, "vel": result.vel,
                         "acc": result.acc, "force": result.force}
            for q, series in pf_series.items():
                for i, v in enumerate(interval_nrmse(series, truth_by_q[q],
                                                     spec)):
                    nrmse_out[("pf", n, q, i)] = v
            if n == max(cfg.pf.particles):
                # the time-series record keeps the largest particle count
                for q, series in pf_series.items():
                    columns[f"pf_{q}"] = series.values

    return _RealizationOutput(index=r, nrmse=nrmse_out,
                              degenerate=degenerate, columns=columns)


def _summary_rows(cfg: ScenarioConfig, spec: IntervalSpec, outputs):
    """Aggregate per-realization NRMSE into deterministic summary rows."""
    rows = []
    intervals = spec.intervals
    combos = []
    if "kf" in cfg.estimators:
        combos.extend(("kf", None, q) for q in QUANTITIES_KF)
    if "pf" in cfg.estimators:
        combos.extend(("pf", n, q) for n in sorted(cfg.pf.particles)
                      for q in QUANTITIES_PF)
    for est, n, q in combos:
        for i, (a, b) in enumerate(intervals):
            values = [o.nrmse[(est, n, q, i)] for o in outputs
                      if (est, n, q, i) in o.nrmse]
            if not values:
                continue
            stats = ensemble_stats(values)
            rows.append(report.SummaryRow(
                estimator=est, quantity=q,
                noise_level=cfg.noise_level.name, particles=n,
                interval_start=a, interval_end=b,
                nrmse_mean=stats.mean, nrmse_std=stats.std, n=stats.n))
    return rows


def _base_manifest(cfg: ScenarioConfig, command: str) -> dict:
    return {
        "command": command,
        "version": __version__,
        "config": cfg.to_dict(),
        "base_seed": cfg.run.base_seed,
    }


def run_scenario(cfg: ScenarioConfig, out_dir: str, threads: int = 1,
                 command: str = "sweep") -> SweepResult:
    """Execute the full realization ensemble and write all output files.

    Outputs are deterministic in (config,
    base_seed) regardless of ``threads``: realizations are independent and
    are assembled in index order.
    """
    t_start = time.monotonic()
    input_ts = cfg.input.series()
    spec = _interval_spec(input_ts.duration)
    truth = simulate_actual(cfg.plant.specimen_actual(),
                            cfg.plant.transfer(), input_ts)

    indices = list(range(cfg.run.realizations))
    outputs = []
    failures = []
    if threads > 1 and len(indices) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            futures = {r: pool.submit(_run_realization, cfg, truth.states,
                                      truth.forces, input_ts, r)
                       for r in indices}
            for r in indices:
                try:
                    outputs.append(futures[r].result())
                except Exception as e:
                    seed = cfg.run.base_seed + r
                    log.error("realization %d (seed %d) failed: %s",
                              r, seed, e)
                    failures.append({"realization": r, "seed": seed,
                                     "error": str(e)})
    else:
        for r in indices:
            try:
                outputs.append(_run_realization(cfg, truth.states,
                                                truth.forces, input_ts, r))
            except Exception as e:
                seed = cfg.run.base_seed + r
                log.error("realization %d (seed %d) failed: %s", r, seed, e)
                failures.append({"realization": r, "seed": seed,
                                 "error": str(e)})

    os.makedirs(out_dir, exist_ok=True)
    for o in outputs:
        report.write_timeseries_csv(
            os.path.join(out_dir, f"timeseries_{o.index:03d}.csv"),
            o.columns)
    rows = _summary_rows(cfg, spec, outputs)
    report.write_summary_csv(os.path.join(out_dir, "summary.csv"), rows)
    if outputs:
        report.render_timeseries_figure(
            os.path.join(out_dir, "timeseries_000.png"), outputs[0].columns)
    if rows:
        report.render_summary_figure(os.path.join(out_dir, "summary.png"),
                                     rows)

    manifest = _base_manifest(cfg, command)
    manifest.update({
        "realization_seeds": [cfg.run.base_seed + r for r in indices],
        "failed_realizations": failures,
        "degenerate_steps": {
            str(o.index): {str(n): steps for n, steps in
                           o.degenerate.items() if steps}
            for o in outputs if any(o.degenerate.values())},
        "timeseries_pf_particles": (max(cfg.pf.particles)
                                    if "pf" in cfg.estimators else None),
        "duration_s": time.monotonic() - t_start,
    })
    manifest_path = os.path.join(out_dir, "manifest.json")
    report.write_manifest(manifest_path, manifest)
    return SweepResult(manifest_path=manifest_path,
                       summary_rows=tuple(rows),
                       realizations=tuple(outputs),
                       failures=tuple(f["realization"] for f in failures))


def run_estimate(cfg: ScenarioConfig, out_dir: str,
                 threads: int = 1) -> SweepResult:
    """Single-realization variant of :func:`run_scenario`."""
    from dataclasses import replace

    cfg = replace(cfg, run=replace(cfg.run, realizations=1))
    return run_scenario(cfg, out_dir, threads=threads, command="estimate")


def run_simulate(cfg: ScenarioConfig, out_dir: str,
                 threads: int = 1) -> SimulateResult:
    """Plant-only run: truth trajectory plus one noisy measurement draw."""
    t_start = time.monotonic()
    input_ts = cfg.input.series()
    truth = simulate_actual(cfg.plant.specimen_actual(),
                            cfg.plant.transfer(), input_ts)
    root = RngStream(cfg.run.base_seed, 0)
    meas = synthesize_measurements(truth, cfg.noise_level,
                                   (root.child(1), root.child(2)))
    columns = {
        "t": input_ts.times,
        "truth_disp": truth.disp.values,
        "truth_vel": truth.vel.values,
        "truth_acc": truth.acc.values,
        "truth_force": truth.force.values,
        "meas_disp": meas.disp_noisy.values,
        "meas_force": meas.force_noisy.values,
    }
    os.makedirs(out_dir, exist_ok=True)
    report.write_timeseries_csv(
        os.path.join(out_dir, "timeseries_000.csv"), columns)
    report.render_input_response_figure(
        os.path.join(out_dir, "response.png"), input_ts.times,
        input_ts.values, truth.disp.values, truth.force.values)
    manifest = _base_manifest(cfg, "simulate")
    manifest["duration_s"] = time.monotonic() - t_start
    manifest_path = os.path.join(out_dir, "manifest.json")
    report.write_manifest(manifest_path, manifest)
    return SimulateResult(manifest_path=manifest_path)


def run_compare_models(cfg: ScenarioConfig, out_dir: str,
                       threads: int = 1) -> CompareResult:
    """Score both nominal models against the actual plant on sinusoids.

    For each probe frequency the actual, nonlinear-nominal, and linear
    plants are driven by the same sinusoid; displacement, velocity, and
    acceleration NRMSE of the two nominal models are computed against the
    actual plant after a fixed start-up transient is discarded.
    """
    t_start = time.monotonic()
    sp_act = cfg.plant.specimen_actual()
    sp_nom = cfg.plant.specimen_nominal()
    tp = cfg.plant.transfer()
    lm = LinearModel()
    fs = cfg.input.fs
    rows = []
    for f in COMPARE_FREQUENCIES:
        u = sinusoid(f=f, duration=COMPARE_DURATION, fs=fs,
                     amplitude=COMPARE_AMPLITUDE)
        actual = simulate_actual(sp_act, tp, u)
        nominal = simulate_nominal(sp_nom, tp, u)
        lin = dict(zip(QUANTITIES_KF, simulate_linear(lm, u)))
        skip = int(round(COMPARE_TRANSIENT * fs))
        for model, series_by_q in (
                ("nonlinear_nominal", {"disp": nominal.disp,
                                       "vel": nominal.vel,
                                       "acc": nominal.acc}),
                ("linear_nominal", lin)):
            for q in QUANTITIES_KF:
                truth_q = {"disp": actual.disp, "vel": actual.vel,
                           "acc": actual.acc}[q]
                est = series_by_q[q]
                value = nrmse(
                    est.with_values(est.values[skip:]),
                    truth_q.with_values(truth_q.values[skip:]))
                rows.append((f, model, q, value))
    os.makedirs(out_dir, exist_ok=True)
    report.write_comparison_csv(
        os.path.join(out_dir, "model_comparison.csv"), rows)
    report.render_comparison_figure(
        os.path.join(out_dir, "model_comparison.png"), rows)
    manifest = _base_manifest(cfg, "compare-models")
    manifest.update({
        "frequencies_hz": list(COMPARE_FREQUENCIES),
        "amplitude_m": COMPARE_AMPLITUDE,
        "probe_duration_s": COMPARE_DURATION,
        "transient_skipped_s": COMPARE_TRANSIENT,
        "duration_s": time.monotonic() - t_start,
    })
    manifest_path = os.path.join(out_dir, "manifest.json")
    report.write_manifest(manifest_path, manifest)
    return CompareResult(manifest_path=manifest_path, rows=tuple(rows))
