"""Scenario orchestration: truth twin, scheme runs, and CSV artifacts.

The truth twin simulates the (possibly parameter-shifted) field with
seeded Gaussian process and measurement noise; schemes consume only the
measurement stream. All artifact files are plain CSV with a fixed column
order. Wall-clock timings are kept out of metrics.csv by default so that
same-seed reruns are byte-identical; they are always written to the
timings.csv sidecar.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .ekf import run_adaptive_estimation
from .errors import DegenerateReference, DimensionMismatch
from .grid import CylindricalGrid
from .richards import observe
from .scenario import ScenarioConfig

METRICS_COLUMNS = (
    "step", "time_s", "percent_mae", "e_L", "edot_L", "r_m", "model_index", "trigger", "iter_seconds",
)


@dataclass(frozen=True)
class TruthRun:
    """Seeded twin trajectory and the sensor stream the estimator sees."""

    states: np.ndarray        # (steps + 1, n_x)
    measurements: np.ndarray  # (steps, n_y)


@dataclass
class RunArtifacts:
    """Everything one scheme run produces, on a shared step axis."""

    scheme: str
    grid: CylindricalGrid
    delta_s: float
    percent_mae: np.ndarray
    e_l: np.ndarray
    edot_l: np.ndarray
    orders: np.ndarray
    model_index: np.ndarray
    trigger: np.ndarray
    iter_seconds: np.ndarray
    model_changes: list
    snapshots: dict  # step -> (h_true, h_est)


def percent_mae(x_hat, x_true) -> float:
    """Mean absolute estimation error normalized by the mean absolute state, in %."""
    x_hat = np.asarray(x_hat, dtype=float)
    x_true = np.asarray(x_true, dtype=float)
    if x_hat.shape != x_true.shape:
        raise DimensionMismatch(f"shapes {x_hat.shape} and {x_true.shape} differ")
    denom = np.abs(x_true).sum()
    if denom == 0.0:
        raise DegenerateReference("reference state is identically zero")
    return float(100.0 * np.abs(x_hat - x_true).sum() / denom)


def run_truth(cfg: ScenarioConfig) -> TruthRun:
    """Simulate the truth twin and draw the measurement stream from the seed."""
    rng = np.random.default_rng(cfg.seed)
    pre, post = cfg.truth_models()
    n = cfg.steps
    sensors = np.asarray(cfg.sensors, dtype=int)
    states = np.empty((n + 1, cfg.n_x))
    measurements = np.empty((n, sensors.size))
    states[0] = cfg.truth_state0()
    meas_std = float(np.sqrt(cfg.measurement_noise_var))
    proc_std = float(np.sqrt(cfg.process_noise_var))
    for k in range(n):
        measurements[k] = observe(states[k], sensors, rng.normal(0.0, meas_std, sensors.size))
        model = pre if (cfg.shift_step is None or k < cfg.shift_step) else post
        surface, forcing = cfg.truth_inputs(k)
        states[k + 1] = model.step(states[k], surface, forcing, cfg.delta_s)
        states[k + 1] += rng.normal(0.0, proc_std, cfg.n_x)
    if states.max() > 0.0:
        warnings.warn("truth state left the unsaturated regime (h > 0 somewhere)", stacklevel=2)
    return TruthRun(states, measurements)


def run_scheme(cfg: ScenarioConfig, truth: TruthRun, scheme: str | None = None) -> RunArtifacts:
    """Run one estimation scheme against a prepared truth twin."""
    run_cfg = replace(cfg, scheme=scheme).validate() if scheme is not None else cfg
    trace = run_adaptive_estimation(run_cfg, truth.measurements, truth=truth.states)
    snapshots = {
        s: (truth.states[s].copy(), trace.estimates[s].copy()) for s in run_cfg.snapshot_steps
    }
    return RunArtifacts(
        scheme=run_cfg.scheme,
        grid=run_cfg.grid,
        delta_s=run_cfg.delta_s,
        percent_mae=trace.percent_mae,
        e_l=trace.e_l,
        edot_l=trace.edot_l,
        orders=trace.orders,
        model_index=trace.model_index,
        trigger=trace.trigger,
        iter_seconds=trace.iter_seconds,
        model_changes=trace.model_changes,
        snapshots=snapshots,
    )


def run_compare(cfg: ScenarioConfig) -> dict[str, RunArtifacts]:
    """Run all three schemes against one shared truth realization."""
    truth = run_truth(cfg)
    return {s: run_scheme(cfg, truth, scheme=s) for s in ("performance", "static", "time-triggered")}


# -- CSV export ---------------------------------------------------------------

def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def export_artifacts(artifacts: RunArtifacts, outdir, deterministic_timings: bool = True) -> list[Path]:
    """Write metrics.csv, model_changes.csv, timings.csv, and state snapshots.

    With deterministic_timings (the default) the iter_seconds column of
    metrics.csv is left empty so that same-seed reruns are byte-identical;
    the measured values always land in timings.csv.
    """
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []

    n = artifacts.e_l.size
    metrics_path = outdir / "metrics.csv"
    with metrics_path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(METRICS_COLUMNS)
        for k in range(n):
            writer.writerow([
                k,
                _fmt(k * artifacts.delta_s),
                _fmt(artifacts.percent_mae[k]) if artifacts.percent_mae is not None else "",
                _fmt(artifacts.e_l[k]),
                _fmt(artifacts.edot_l[k]),
                int(artifacts.orders[k]),
                int(artifacts.model_index[k]),
                int(artifacts.trigger[k]),
                "" if deterministic_timings else _fmt(artifacts.iter_seconds[k]),
            ])
    written.append(metrics_path)

    changes_path = outdir / "model_changes.csv"
    with changes_path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(("step", "model_index", "r_m"))
        for step, model_index, order in artifacts.model_changes:
            writer.writerow((step, model_index, order))
    written.append(changes_path)

    timings_path = outdir / "timings.csv"
    with timings_path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(("step", "iter_seconds"))
        for k in range(n):
            writer.writerow((k, _fmt(artifacts.iter_seconds[k])))
    written.append(timings_path)

    r, theta, z = artifacts.grid.node_coordinates()
    for step, (h_true, h_est) in sorted(artifacts.snapshots.items()):
        snap_path = outdir / f"state_snapshot_{step}.csv"
        with snap_path.open("w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(("node", "r", "theta", "z", "h_true", "h_est", "abs_err"))
            for i in range(artifacts.grid.n_nodes):
                writer.writerow((
                    i, _fmt(r[i]), _fmt(theta[i]), _fmt(z[i]),
                    _fmt(h_true[i]), _fmt(h_est[i]), _fmt(abs(h_est[i] - h_true[i])),
                ))
        written.append(snap_path)
    return written


def export_comparison(runs: dict[str, RunArtifacts], outdir) -> Path:
    """Joined per-step table of the headline metrics across schemes."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    schemes = list(runs)
    path = outdir / "comparison.csv"
    n = min(r.e_l.size for r in runs.values())
    header = ["step", "time_s"]
    for s in schemes:
        tag = s.replace("-", "_")
        header += [f"percent_mae_{tag}", f"e_L_{tag}", f"r_m_{tag}"]
    delta_s = next(iter(runs.values())).delta_s
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        for k in range(n):
            row = [k, _fmt(k * delta_s)]
            for s in schemes:
                art = runs[s]
                row += [
                    _fmt(art.percent_mae[k]) if art.percent_mae is not None else "",
                    _fmt(art.e_l[k]),
                    int(art.orders[k]),
                ]
            writer.writerow(row)
    return path
