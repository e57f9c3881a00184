"""Richards-equation dynamics on a cylindrical grid.

Spatial scheme: second-order central differences in flux form for the
radial, azimuthal, and vertical divergence terms, with arithmetic-mean
inter-node conductivities. Boundaries: prescribed infiltration flux at the
surface (irrigation of the active pivot sector plus rain), unit-gradient
free drainage (or optional no-flux) at the bottom, no-flux at the inner
and outer rings, periodic wrap in theta. Time integration is explicit
Euler over a fixed number of equal sub-steps per sampling interval.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BadSensorIndex,
    DimensionMismatch,
    NonFiniteState,
    UnstableStep,
    ValidationError,
)
from .grid import CylindricalGrid
from .soil import SoilField, capillary_capacity, hydraulic_conductivity

BOTTOM_CONDITIONS = ("free_drainage", "no_flux")


@dataclass(frozen=True)
class SurfaceInput:
    """Pivot-arm irrigation rates [m/s] per radial node, applied to one sector."""

    u: np.ndarray
    active_sector: int = 0

    def __post_init__(self):
        object.__setattr__(self, "u", np.asarray(self.u, dtype=float))
        if self.u.ndim != 1:
            raise ValidationError("u must be a 1-D array of per-ring rates")
        if self.u.size and self.u.min() < 0:
            raise ValidationError("u must be nonnegative")

    @classmethod
    def idle(cls, n_r: int) -> "SurfaceInput":
        return cls(np.zeros(n_r), 0)


@dataclass(frozen=True)
class StepForcing:
    """Weather forcing over one sampling interval (rates in m/s)."""

    et: float = 0.0
    k_c: float = 0.0
    rain: float = 0.0

    def __post_init__(self):
        if self.et < 0 or self.k_c < 0 or self.rain < 0:
            raise ValidationError("forcing rates must be nonnegative")


class EnvironmentForcing:
    """Piecewise-constant weather series; indexing past the end holds the last value."""

    def __init__(self, et, k_c, rain):
        self.et = np.atleast_1d(np.asarray(et, dtype=float))
        self.k_c = np.atleast_1d(np.asarray(k_c, dtype=float))
        self.rain = np.atleast_1d(np.asarray(rain, dtype=float))
        for name in ("et", "k_c", "rain"):
            arr = getattr(self, name)
            if arr.size == 0 or arr.min() < 0:
                raise ValidationError(f"{name} series must be nonempty and nonnegative")

    def at(self, k: int) -> StepForcing:
        pick = lambda a: float(a[min(k, a.size - 1)])
        return StepForcing(et=pick(self.et), k_c=pick(self.k_c), rain=pick(self.rain))


@dataclass(frozen=True)
class RootUptake:
    """Root zone extent and the piecewise-linear water-stress heads [m]."""

    root_depth: float
    h_anaerobic: float = -0.05
    h_field_capacity: float = -3.3
    h_wilting: float = -150.0

    def __post_init__(self):
        if not self.root_depth > 0:
            raise ValidationError("root_depth must be > 0")
        if not (self.h_wilting < self.h_field_capacity < self.h_anaerobic <= 0):
            raise ValidationError("require h_wilting < h_field_capacity < h_anaerobic <= 0")


@dataclass
class WaterBudget:
    """Cumulative boundary and sink volumes [m^3] accumulated per sub-step."""

    inflow: float = 0.0
    drainage: float = 0.0
    extraction: float = 0.0


def stress_factor(h, roots: RootUptake):
    """Feddes-type uptake reduction beta(h) in [0, 1]."""
    h = np.asarray(h, dtype=float)
    ha, hfc, hw = roots.h_anaerobic, roots.h_field_capacity, roots.h_wilting
    beta = np.zeros_like(h)
    wet = (h <= ha) & (h > hfc)
    beta = np.where(wet, (ha - h) / (ha - hfc), beta)
    dry = (h <= hfc) & (h > hw)
    beta = np.where(dry, (h - hw) / (hfc - hw), beta)
    return np.clip(beta, 0.0, 1.0)


def root_fraction(grid: CylindricalGrid, root_depth: float) -> np.ndarray:
    """Fraction of each layer inside the root zone (length n_z, bottom-up)."""
    if root_depth > grid.depth + 1e-12:
        raise ValidationError("root_depth exceeds grid depth")
    z_lo = np.arange(grid.n_z) * grid.dz
    z_hi = z_lo + grid.dz
    overlap = np.minimum(z_hi, grid.depth) - np.maximum(z_lo, grid.depth - root_depth)
    return np.clip(overlap, 0.0, None) / grid.dz


def sink_term(x, grid: CylindricalGrid, forcing: StepForcing, roots: RootUptake | None):
    """Root water extraction S [1/s] per node (<= 0), flat-index order.

    Total extraction integrates to beta-weighted K_c * ET over the field
    surface; uniform root density down to root_depth.
    """
    if roots is None:
        return np.zeros(grid.n_nodes)
    demand = forcing.k_c * forcing.et
    if demand == 0.0:
        return np.zeros(grid.n_nodes)
    h = grid.reshape(np.asarray(x, dtype=float))
    frac = root_fraction(grid, roots.root_depth)
    s = -stress_factor(h, roots) * demand * frac[None, None, :] / roots.root_depth
    return grid.flatten(s)


def _grid_soil(soil, grid: CylindricalGrid):
    """Reshape flat per-node parameter arrays to the grid; pass scalars through."""
    if isinstance(soil, SoilField) and soil.alpha.ndim == 1:
        return SoilField(*(grid.reshape(a) for a in (soil.alpha, soil.n_vg, soil.theta_r, soil.theta_s, soil.k_s)))
    return soil


def _rhs_parts(h3, surface, forcing, grid, soil3, roots, storativity, bottom_bc):
    """dh/dt plus the boundary-flux fields needed for water accounting."""
    n_r, n_t, n_z = grid.n_r, grid.n_theta, grid.n_z
    k_cond = hydraulic_conductivity(h3, soil3)
    c_eff = np.maximum(capillary_capacity(h3, soil3), storativity)

    div = np.zeros_like(h3)

    # radial: (1/(r dr)) d/dr [r K dh/dr]; no-flux at r = 0 and r = R
    if n_r > 1:
        face_r = (np.arange(1, n_r) * grid.dr)[:, None, None]
        k_face = 0.5 * (k_cond[1:] + k_cond[:-1])
        flux_r = face_r * k_face * (h3[1:] - h3[:-1]) / grid.dr
        div[:-1] += flux_r / (grid.r_centers[:-1, None, None] * grid.dr)
        div[1:] -= flux_r / (grid.r_centers[1:, None, None] * grid.dr)

    # azimuthal: (1/r^2) d/dtheta [K dh/dtheta], periodic
    if n_t > 1:
        k_face = 0.5 * (k_cond + np.roll(k_cond, -1, axis=1))
        flux_t = k_face * (np.roll(h3, -1, axis=1) - h3)  # at face j+1/2
        div += (flux_t - np.roll(flux_t, 1, axis=1)) / (
            (grid.r_centers[:, None, None] * grid.dtheta) ** 2
        )

    # vertical: d/dz [K (dh/dz + 1)], downward-positive face flux G
    g_face = np.zeros((n_r, n_t, n_z + 1))
    if n_z > 1:
        k_face = 0.5 * (k_cond[:, :, 1:] + k_cond[:, :, :-1])
        g_face[:, :, 1:-1] = k_face * ((h3[:, :, 1:] - h3[:, :, :-1]) / grid.dz + 1.0)
    if bottom_bc == "free_drainage":
        g_face[:, :, 0] = k_cond[:, :, 0]  # unit-gradient drainage K(h_bottom)
    q_in = np.full((n_r, n_t), forcing.rain)
    sector = surface.active_sector % n_t
    q_in[:, sector] += surface.u
    g_face[:, :, n_z] = q_in
    div += (g_face[:, :, 1:] - g_face[:, :, :-1]) / grid.dz

    sink3 = grid.reshape(sink_term(grid.flatten(h3), grid, forcing, roots))
    with np.errstate(over="ignore", invalid="ignore"):
        dhdt = (div + sink3) / c_eff
    return dhdt, q_in, g_face[:, :, 0], sink3


def rhs(x, surface: SurfaceInput, forcing: StepForcing, grid: CylindricalGrid, soil,
        roots: RootUptake | None = None, storativity: float = 1e-4,
        bottom_bc: str = "free_drainage") -> np.ndarray:
    """Time derivative dx/dt [m/s] of the pressure-head state, flat-index order."""
    x = np.asarray(x, dtype=float)
    if x.shape != (grid.n_nodes,):
        raise DimensionMismatch(f"state has shape {x.shape}, expected ({grid.n_nodes},)")
    if not np.all(np.isfinite(x)):
        raise NonFiniteState("state contains non-finite entries")
    if not np.all(np.isfinite(surface.u)):
        raise NonFiniteState("surface input contains non-finite entries")
    if surface.u.size != grid.n_r:
        raise DimensionMismatch(f"surface input has {surface.u.size} rates, expected {grid.n_r}")
    if bottom_bc not in BOTTOM_CONDITIONS:
        raise ValidationError(f"bottom_bc must be one of {BOTTOM_CONDITIONS}")
    dhdt, _, _, _ = _rhs_parts(
        grid.reshape(x), surface, forcing, grid, _grid_soil(soil, grid), roots, storativity, bottom_bc
    )
    return grid.flatten(dhdt)


def step(x, surface: SurfaceInput, forcing: StepForcing, grid: CylindricalGrid, soil,
         dt: float, substeps: int = 12, roots: RootUptake | None = None,
         storativity: float = 1e-4, bottom_bc: str = "free_drainage",
         budget: WaterBudget | None = None) -> np.ndarray:
    """Advance the state by dt with explicit Euler over fixed equal sub-steps."""
    if not dt > 0:
        raise ValidationError("dt must be > 0")
    if substeps < 1:
        raise ValidationError("substeps must be >= 1")
    x = np.asarray(x, dtype=float)
    if x.shape != (grid.n_nodes,):
        raise DimensionMismatch(f"state has shape {x.shape}, expected ({grid.n_nodes},)")
    if not np.all(np.isfinite(x)):
        raise NonFiniteState("state contains non-finite entries")
    soil3 = _grid_soil(soil, grid)
    h3 = grid.reshape(x).copy()
    sub = dt / substeps
    area = grid.column_area()
    volume = grid.cell_volumes()
    for _ in range(substeps):
        dhdt, q_in, g_bottom, sink3 = _rhs_parts(
            h3, surface, forcing, grid, soil3, roots, storativity, bottom_bc
        )
        with np.errstate(over="ignore", invalid="ignore"):
            h3 = h3 + sub * dhdt
        # |h| beyond any physical suction means the explicit update diverged
        if not np.all(np.isfinite(h3)) or np.abs(h3).max() > 1e6:
            raise UnstableStep(
                f"state diverged after a sub-step of {sub:g} s; increase substeps"
            )
        if budget is not None:
            budget.inflow += float(np.sum(q_in * area)) * sub
            budget.drainage += float(np.sum(g_bottom * area)) * sub
            budget.extraction += float(np.sum(-sink3 * volume)) * sub
    return grid.flatten(h3)


def observe(x, sensor_nodes, v=None) -> np.ndarray:
    """Measurement y = C x + v where C selects the sensor rows."""
    x = np.asarray(x, dtype=float)
    s = np.asarray(sensor_nodes, dtype=int)
    if s.size == 0:
        raise BadSensorIndex("sensor list is empty")
    if s.min() < 0 or s.max() >= x.size:
        raise BadSensorIndex(f"sensor index out of range [0, {x.size})")
    y = x[s].copy()
    if v is not None:
        y = y + np.asarray(v, dtype=float)
    return y


@dataclass(frozen=True)
class FullModel:
    """Grid, soil, and integration settings bundled as the full-order model."""

    grid: CylindricalGrid
    soil: object
    roots: RootUptake | None = None
    substeps: int = 12
    storativity: float = 1e-4
    bottom_bc: str = "free_drainage"
    _soil3: object = field(init=False, repr=False)

    def __post_init__(self):
        if self.bottom_bc not in BOTTOM_CONDITIONS:
            raise ValidationError(f"bottom_bc must be one of {BOTTOM_CONDITIONS}")
        object.__setattr__(self, "_soil3", _grid_soil(self.soil, self.grid))

    @property
    def n_states(self) -> int:
        return self.grid.n_nodes

    def rhs(self, x, surface, forcing):
        return rhs(x, surface, forcing, self.grid, self._soil3,
                   roots=self.roots, storativity=self.storativity, bottom_bc=self.bottom_bc)

    def step(self, x, surface, forcing, dt, budget=None):
        return step(x, surface, forcing, self.grid, self._soil3, dt,
                    substeps=self.substeps, roots=self.roots,
                    storativity=self.storativity, bottom_bc=self.bottom_bc, budget=budget)

    def simulate(self, x0, inputs, dt):
        """Chain steps over (surface, forcing) pairs; returns (len(inputs)+1, n) states."""
        out = np.empty((len(inputs) + 1, self.n_states))
        out[0] = np.asarray(x0, dtype=float)
        for j, (surface, forcing) in enumerate(inputs):
            out[j + 1] = self.step(out[j], surface, forcing, dt)
        return out
