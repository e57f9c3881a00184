"""Reduced-order extended Kalman filter with performance-triggered re-identification.

The filter lives entirely in the reduced coordinates of the active
projection. Prediction linearizes the reduced transition map by forward
finite differences (one evaluation per reduced coordinate); covariances
are symmetrized after every propagate and update. When the open-loop
prediction-error metric exceeds its threshold while rising, a new
reduced model is identified from fresh snapshots and the filter state is
carried over through the full-order space.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field, replace
from time import perf_counter

import numpy as np
import scipy.sparse as sp

from .errors import (
    DimensionMismatch,
    JacobianFailure,
    PivotflowError,
    SingularInnovation,
    ValidationError,
)
from .reduction import (
    ReducedModel,
    build_projection,
    cluster_trajectories,
    generate_snapshots,
    lift_state,
    reduce_state,
)
from .richards import FullModel

SCHEMES = ("performance", "static", "time-triggered")


@dataclass(frozen=True)
class NoiseConfig:
    """EKF tuning covariances in structured form.

    Full-order Q and P0 are (diag - offdiag) * I + offdiag * ones * ones^T,
    kept as generators so they are never materialized at field scale;
    R is r_diag * I over the sensors.
    """

    q_diag: float = 1.0
    q_offdiag: float = 0.0
    r_diag: float = 0.08
    p0_diag: float = 1.0
    p0_offdiag: float = 5e-5

    def __post_init__(self):
        if not self.r_diag > 0:
            raise ValidationError("r_diag must be > 0")
        for diag, off, name in (
            (self.q_diag, self.q_offdiag, "q"),
            (self.p0_diag, self.p0_offdiag, "p0"),
        ):
            if diag < 0 or off < 0 or off > diag:
                raise ValidationError(f"{name}_diag/{name}_offdiag must satisfy 0 <= offdiag <= diag")

    def measurement_cov(self, n_y: int) -> np.ndarray:
        return self.r_diag * np.eye(n_y)

    def _reduced(self, projection: sp.csr_matrix, diag: float, offdiag: float) -> np.ndarray:
        utu = (projection.T @ projection).toarray()
        reduced = (diag - offdiag) * utu
        if offdiag:
            col_sums = np.asarray(projection.sum(axis=0)).ravel()
            reduced = reduced + offdiag * np.outer(col_sums, col_sums)
        return reduced

    def reduced_process_cov(self, projection: sp.csr_matrix) -> np.ndarray:
        """Q_r = U^T Q U."""
        return self._reduced(projection, self.q_diag, self.q_offdiag)

    def reduced_initial_cov(self, projection: sp.csr_matrix) -> np.ndarray:
        """P_r(0) = U^T P(0) U."""
        return self._reduced(projection, self.p0_diag, self.p0_offdiag)

    def dense_process_cov(self, n: int) -> np.ndarray:
        return (self.q_diag - self.q_offdiag) * np.eye(n) + self.q_offdiag * np.ones((n, n))

    def dense_initial_cov(self, n: int) -> np.ndarray:
        return (self.p0_diag - self.p0_offdiag) * np.eye(n) + self.p0_offdiag * np.ones((n, n))


@dataclass(frozen=True)
class ReducedEkfState:
    """Filter state in the coordinates of one reduced model."""

    xi: np.ndarray
    cov: np.ndarray
    q_r: np.ndarray
    c_r: np.ndarray
    projection: sp.csr_matrix
    model_index: int

    @property
    def order(self) -> int:
        return self.xi.size


def sensor_output_map(projection: sp.csr_matrix, sensor_nodes) -> np.ndarray:
    """C_r = C U: the sensor rows of the projection, densified."""
    rows = np.asarray(sensor_nodes, dtype=int)
    return projection[rows, :].toarray()


def initialize_filter(projection: sp.csr_matrix, x0_full, noise: NoiseConfig,
                      sensor_nodes, model_index: int = 1) -> ReducedEkfState:
    """Project the full-order prior onto a freshly identified model."""
    return ReducedEkfState(
        xi=reduce_state(projection, x0_full),
        cov=noise.reduced_initial_cov(projection),
        q_r=noise.reduced_process_cov(projection),
        c_r=sensor_output_map(projection, sensor_nodes),
        projection=projection,
        model_index=model_index,
    )


def _fd_jacobian(transition, xi: np.ndarray, f0: np.ndarray) -> np.ndarray:
    """Forward-difference Jacobian of the reduced transition map at xi."""
    n = xi.size
    jac = np.empty((f0.size, n))
    for i in range(n):
        delta = max(1e-6, 1e-6 * abs(float(xi[i])))
        perturbed = xi.copy()
        perturbed[i] += delta
        f_i = transition(perturbed)
        if not np.all(np.isfinite(f_i)):
            raise JacobianFailure(f"non-finite transition for perturbed coordinate {i}")
        jac[:, i] = (f_i - f0) / delta
    return jac


def ekf_predict(state: ReducedEkfState, model, surface, forcing, dt: float) -> ReducedEkfState:
    """Propagate estimate and covariance one sampling interval (zero disturbance)."""
    transition = lambda xi: model.step(xi, surface, forcing, dt)
    xi_pred = transition(state.xi)
    a_d = _fd_jacobian(transition, state.xi, xi_pred)
    cov = a_d @ state.cov @ a_d.T + state.q_r
    cov = 0.5 * (cov + cov.T)
    return replace(state, xi=xi_pred, cov=cov)


def ekf_update(state: ReducedEkfState, y, r_cov: np.ndarray) -> ReducedEkfState:
    """Measurement update with gain K = P C^T (R + C P C^T)^-1."""
    y = np.asarray(y, dtype=float)
    c = state.c_r
    if y.shape != (c.shape[0],):
        raise DimensionMismatch(f"measurement has shape {y.shape}, expected ({c.shape[0]},)")
    innovation_cov = r_cov + c @ state.cov @ c.T
    try:
        np.linalg.cholesky(innovation_cov)
    except np.linalg.LinAlgError as exc:
        raise SingularInnovation("innovation covariance is not positive definite") from exc
    gain = np.linalg.solve(innovation_cov, c @ state.cov).T
    xi = state.xi + gain @ (y - c @ state.xi)
    cov = (np.eye(state.order) - gain @ c) @ state.cov
    cov = 0.5 * (cov + cov.T)
    return replace(state, xi=xi, cov=cov)


def reconstruct(state: ReducedEkfState) -> np.ndarray:
    """Full-grid estimate x_hat = U xi_hat."""
    return lift_state(state.projection, state.xi)


def clamp_estimate(state: ReducedEkfState, ceiling: float) -> ReducedEkfState:
    """Constrain the estimate so no lifted pressure head exceeds ``ceiling``.

    Cluster j lifts to the uniform value w_j * xi_j (w_j is the column's
    single weight), so the constraint is a per-coordinate cap. Covariances
    are untouched; the cap only engages when a noisy update overshoots the
    unsaturated range that keeps the explicit stepper stable.
    """
    col_weight = np.asarray(state.projection.max(axis=0).todense()).ravel()
    capped = np.minimum(state.xi, ceiling / col_weight)
    if np.array_equal(capped, state.xi):
        return state
    return replace(state, xi=capped)


def transfer_model(state: ReducedEkfState, new_projection: sp.csr_matrix,
                   noise: NoiseConfig, sensor_nodes, model_index: int) -> ReducedEkfState:
    """Carry the filter to a new reduced model through the full-order space.

    Maps estimate and covariance up with the old projection and back down
    with the new one; process and output maps are rebuilt for the new basis.
    """
    if new_projection.shape[0] != state.projection.shape[0]:
        raise DimensionMismatch("projections must share the full state dimension")
    mapping = (new_projection.T @ state.projection).toarray()
    cov = mapping @ state.cov @ mapping.T
    return ReducedEkfState(
        xi=mapping @ state.xi,
        cov=0.5 * (cov + cov.T),
        q_r=noise.reduced_process_cov(new_projection),
        c_r=sensor_output_map(new_projection, sensor_nodes),
        projection=new_projection,
        model_index=model_index,
    )


def compute_error_metric(model: FullModel, projection: sp.csr_matrix, x_hat_full,
                         inputs, dt: float) -> float:
    """Mean-per-node cumulative absolute gap between reduced and full open-loop runs.

    Both models start from the current full-grid estimate (the reduced one
    from its projection) and run the same scheduled inputs without noise.
    """
    if len(inputs) < 1:
        raise ValidationError("error metric needs at least one prediction interval")
    full_traj = model.simulate(x_hat_full, inputs, dt)
    reduced = ReducedModel(model, projection)
    red_traj = reduced.simulate(reduce_state(projection, x_hat_full), inputs, dt)
    lifted = (projection @ red_traj.T).T
    return float(np.abs(lifted[1:] - full_traj[1:]).sum() / model.n_states)


@dataclass
class TriggerState:
    """Rolling view of the error metric used by the re-identification test."""

    th_e: float
    slope_limit: float = 0.05
    history: deque = field(default_factory=lambda: deque(maxlen=11))

    def record(self, e_l: float) -> None:
        if e_l < 0:
            raise ValidationError("e_L must be nonnegative")
        self.history.append(float(e_l))

    @property
    def last(self) -> float:
        return self.history[-1] if self.history else 0.0


def slope_estimate(trigger: TriggerState) -> float:
    """Moving average of the last ten rising differences of e_L (0 before warm-up)."""
    if len(trigger.history) < 11:
        return 0.0
    diffs = np.diff(np.asarray(trigger.history, dtype=float))
    return float(np.maximum(diffs, 0.0).mean())


def _fires(scheme: str, k: int, trigger: TriggerState, period: int) -> bool:
    if k == 0:
        return True
    if scheme == "performance":
        return trigger.last > trigger.th_e and slope_estimate(trigger) >= trigger.slope_limit
    if scheme == "static":
        return False
    if scheme == "time-triggered":
        return k % period == 0
    raise ValidationError(f"scheme must be one of {SCHEMES}")


@dataclass
class EstimationTrace:
    """Per-step record of one adaptive-estimation run."""

    estimates: np.ndarray
    e_l: np.ndarray
    edot_l: np.ndarray
    orders: np.ndarray
    model_index: np.ndarray
    trigger: np.ndarray
    iter_seconds: np.ndarray
    model_changes: list
    percent_mae: np.ndarray | None = None


def run_adaptive_estimation(cfg, measurements, truth=None, diagnostics=None) -> EstimationTrace:
    """Run the performance-triggered reduced EKF loop over a measurement stream.

    Each step: re-identify if the scheme's trigger fires, predict, update with
    the measurement, reconstruct the full-grid estimate, then evaluate the
    prediction-error metric and its filtered slope. ``truth``, when given, is
    only used to record the per-step estimation error; ``diagnostics(k, state)``
    is called after every update.
    """
    if cfg.scheme not in SCHEMES:
        raise ValidationError(f"scheme must be one of {SCHEMES}")
    model = cfg.estimator_model()
    noise = cfg.noise_config()
    sensors = np.asarray(cfg.sensors, dtype=int)
    r_cov = noise.measurement_cov(sensors.size)
    n = cfg.steps
    measurements = np.asarray(measurements, dtype=float)
    if measurements.shape != (n, sensors.size):
        raise DimensionMismatch(
            f"measurements have shape {measurements.shape}, expected ({n}, {sensors.size})"
        )

    trigger = TriggerState(th_e=cfg.th_e, slope_limit=cfg.slope_limit)
    x_hat = cfg.guess_state0()
    state = None
    reduced = None
    m = 0
    e_l = 0.0

    trace = EstimationTrace(
        estimates=np.empty((n, model.n_states)),
        e_l=np.empty(n),
        edot_l=np.empty(n),
        orders=np.empty(n, dtype=int),
        model_index=np.empty(n, dtype=int),
        trigger=np.zeros(n, dtype=bool),
        iter_seconds=np.empty(n),
        model_changes=[],
        percent_mae=None if truth is None else np.empty(n),
    )
    if truth is not None:
        from .runner import percent_mae  # deferred: runner imports this module

    for k in range(n):
        started = perf_counter()
        try:
            fired = _fires(cfg.scheme, k, trigger, cfg.period)
            if fired:
                m += 1
                origin = max(k - 1, 0)
                snapshots = generate_snapshots(
                    model, x_hat, cfg.estimator_inputs_window(origin, cfg.n_fd),
                    cfg.delta_s, origin_step=origin,
                )
                projection = build_projection(cluster_trajectories(snapshots, cfg.th_c))
                if state is None:
                    state = initialize_filter(projection, x_hat, noise, sensors, m)
                else:
                    state = transfer_model(state, projection, noise, sensors, m)
                reduced = ReducedModel(model, projection)
                trace.model_changes.append((k, m, state.order))
            if k > 0:
                surface, forcing = cfg.estimator_inputs(k - 1)
                state = ekf_predict(state, reduced, surface, forcing, cfg.delta_s)
            state = ekf_update(state, measurements[k], r_cov)
            ceiling = getattr(cfg, "estimate_ceiling", None)
            if ceiling is not None:
                state = clamp_estimate(state, ceiling)
            x_hat = reconstruct(state)
            if fired or cfg.stride <= 1 or k % cfg.stride == 0:
                e_l = compute_error_metric(
                    model, state.projection, x_hat,
                    cfg.estimator_inputs_window(k, cfg.n_fd), cfg.delta_s,
                )
            trigger.record(e_l)
        except PivotflowError as exc:
            raise type(exc)(f"step {k}: {exc}") from exc

        if diagnostics is not None:
            diagnostics(k, state)
        trace.estimates[k] = x_hat
        trace.e_l[k] = e_l
        trace.edot_l[k] = slope_estimate(trigger)
        trace.orders[k] = state.order
        trace.model_index[k] = state.model_index
        trace.trigger[k] = fired
        trace.iter_seconds[k] = perf_counter() - started
        if truth is not None:
            trace.percent_mae[k] = percent_mae(x_hat, truth[k])
    return trace
