"""Dynamics, boundary-condition, and water-balance tests."""

import numpy as np
import pytest

from pivotflow import (
    BadSensorIndex,
    EnvironmentForcing,
    CylindricalGrid,
    DimensionMismatch,
    FullModel,
    NonFiniteState,
    RootUptake,
    SoilField,
    StepForcing,
    SurfaceInput,
    UnstableStep,
    WaterBudget,
    hydraulic_conductivity,
    observe,
    sink_term,
    water_content,
)
from pivotflow.scenario import default_sensor_layers, sensor_lattice

from conftest import hydrostatic_state

IDLE = StepForcing()


def idle_input(grid):
    return SurfaceInput.idle(grid.n_r)


# -- sink term ----------------------------------------------------------------

class TestSink:
    def test_zero_demand_gives_zero_sink(self, desk_grid):
        roots = RootUptake(root_depth=0.3)
        h = np.full(desk_grid.n_nodes, -5.0)
        s = sink_term(h, desk_grid, StepForcing(et=0.0, k_c=1.0), roots)
        assert np.all(s == 0.0)

    def test_extraction_integrates_to_crop_demand(self, desk_grid):
        # beta == 1 exactly at the field-capacity head
        roots = RootUptake(root_depth=0.3, h_field_capacity=-3.3)
        h = np.full(desk_grid.n_nodes, roots.h_field_capacity)
        forcing = StepForcing(et=4e-8, k_c=0.9)
        s = sink_term(h, desk_grid, forcing, roots)
        total = (s * desk_grid.flatten(desk_grid.cell_volumes())).sum()
        expected = -forcing.k_c * forcing.et * np.pi * desk_grid.radius**2
        assert total == pytest.approx(expected, rel=1e-10)
        assert np.all(s <= 0.0)

    def test_fractional_root_layer_still_integrates_exactly(self, desk_grid):
        # root_depth not a layer multiple: overlap weights keep the integral exact
        roots = RootUptake(root_depth=0.25)
        h = np.full(desk_grid.n_nodes, roots.h_field_capacity)
        forcing = StepForcing(et=3e-8, k_c=1.2)
        s = sink_term(h, desk_grid, forcing, roots)
        total = (s * desk_grid.flatten(desk_grid.cell_volumes())).sum()
        assert total == pytest.approx(-forcing.k_c * forcing.et * np.pi * desk_grid.radius**2, rel=1e-10)

    def test_no_uptake_below_wilting(self, desk_grid):
        roots = RootUptake(root_depth=0.3, h_wilting=-150.0)
        h = np.full(desk_grid.n_nodes, -200.0)
        s = sink_term(h, desk_grid, StepForcing(et=4e-8, k_c=1.0), roots)
        assert np.all(s == 0.0)

    def test_no_extraction_below_root_zone(self, desk_grid):
        roots = RootUptake(root_depth=0.1)
        h = np.full(desk_grid.n_nodes, roots.h_field_capacity)
        s = desk_grid.reshape(sink_term(h, desk_grid, StepForcing(et=4e-8, k_c=1.0), roots))
        below = desk_grid.z_centers + desk_grid.dz / 2 <= desk_grid.depth - roots.root_depth
        assert np.all(s[:, :, below] == 0.0)
        assert np.any(s[:, :, ~below] < 0.0)


# -- rhs ------------------------------------------------------------------------

class TestRhs:
    def test_hydrostatic_profile_is_stationary_no_flux(self, desk_grid, loam):
        model = FullModel(desk_grid, loam, bottom_bc="no_flux")
        h = hydrostatic_state(desk_grid, -20.0)
        dxdt = model.rhs(h, idle_input(desk_grid), IDLE)
        assert np.abs(dxdt).max() < 1e-15  # ulp-level face-gradient roundoff only

    def test_hydrostatic_profile_near_stationary_free_drainage(self, desk_grid, loam):
        # residual is the unit-gradient drainage K(h_bottom), tiny for dry soil
        model = FullModel(desk_grid, loam, bottom_bc="free_drainage")
        h = hydrostatic_state(desk_grid, -20.0)
        dxdt = model.rhs(h, idle_input(desk_grid), IDLE)
        assert np.abs(dxdt).max() < 1e-8

    def test_axisymmetric_inputs_give_theta_invariant_rates(self, desk_grid, loam):
        model = FullModel(desk_grid, loam, roots=RootUptake(root_depth=0.3))
        radial = np.linspace(-12.0, -8.0, desk_grid.n_r)
        vertical = np.linspace(-1.0, 0.0, desk_grid.n_z)
        h3 = np.tile(radial[:, None, None], (1, desk_grid.n_theta, desk_grid.n_z)) + vertical
        dxdt = desk_grid.reshape(
            model.rhs(desk_grid.flatten(h3), idle_input(desk_grid),
                      StepForcing(et=4e-8, k_c=0.8, rain=1e-7))
        )
        for j in range(1, desk_grid.n_theta):
            assert np.array_equal(dxdt[:, 0, :], dxdt[:, j, :])

    def test_perturbation_diffuses_toward_neighbors(self, desk_grid, loam):
        # theta-neighbor of a wetted node: its only flux is the azimuthal one,
        # so rhs there must equal the two-node face flux exactly
        model = FullModel(desk_grid, loam, bottom_bc="no_flux")
        h3 = desk_grid.reshape(hydrostatic_state(desk_grid, -10.0)).copy()
        i_r, i_t, i_z = 5, 3, 2
        h3[i_r, i_t, i_z] += 1.0
        dxdt = desk_grid.reshape(model.rhs(desk_grid.flatten(h3), idle_input(desk_grid), IDLE))
        assert dxdt[i_r, i_t, i_z] < 0.0  # perturbed node relaxes
        h_a = h3[i_r, i_t, i_z]
        h_b = h3[i_r, i_t + 1, i_z]
        k_face = 0.5 * (hydraulic_conductivity(h_a, loam) + hydraulic_conductivity(h_b, loam))
        capacity = model._soil3  # scalar params: evaluate capacity directly
        from pivotflow import capillary_capacity

        c_b = max(capillary_capacity(h_b, loam), model.storativity)
        expected = k_face * (h_a - h_b) / (desk_grid.r_centers[i_r] * desk_grid.dtheta) ** 2 / c_b
        assert dxdt[i_r, i_t + 1, i_z] == pytest.approx(expected, rel=1e-12)
        assert dxdt[i_r, i_t - 1, i_z] == pytest.approx(expected, rel=1e-12)

    def test_irrigation_wets_only_active_sector_surface(self, desk_grid, loam):
        model = FullModel(desk_grid, loam, bottom_bc="no_flux")
        h = hydrostatic_state(desk_grid, -10.0)
        surface = SurfaceInput(np.full(desk_grid.n_r, 1e-6), active_sector=4)
        dxdt = desk_grid.reshape(model.rhs(h, surface, IDLE))
        assert np.all(dxdt[:, 4, -1] > 0.0)
        mask = np.ones(desk_grid.n_theta, dtype=bool)
        mask[4] = False
        assert np.abs(dxdt[:, mask, :]).max() < 1e-15

    def test_non_finite_state_rejected(self, desk_grid, loam):
        model = FullModel(desk_grid, loam)
        h = np.full(desk_grid.n_nodes, -5.0)
        h[3] = np.nan
        with pytest.raises(NonFiniteState):
            model.rhs(h, idle_input(desk_grid), IDLE)

    def test_dimension_mismatch_rejected(self, desk_grid, loam):
        model = FullModel(desk_grid, loam)
        with pytest.raises(DimensionMismatch):
            model.rhs(np.zeros(7), idle_input(desk_grid), IDLE)


# -- step -----------------------------------------------------------------------

class TestStep:
    def test_equilibrium_is_a_fixed_point(self, desk_grid, loam):
        model = FullModel(desk_grid, loam, substeps=12, bottom_bc="no_flux")
        h = hydrostatic_state(desk_grid, -15.0)
        out = model.step(h, idle_input(desk_grid), IDLE, 1800.0)
        assert np.abs(out - h).max() < 1e-10

    def test_deterministic_bitwise(self, desk_grid, loam):
        model = FullModel(desk_grid, loam, roots=RootUptake(root_depth=0.3), substeps=8)
        rng = np.random.default_rng(5)
        h = np.full(desk_grid.n_nodes, -9.0) + rng.normal(0, 0.5, desk_grid.n_nodes)
        surface = SurfaceInput(np.full(desk_grid.n_r, 3e-7), 2)
        forcing = StepForcing(et=3e-8, k_c=0.7, rain=1e-7)
        a = model.step(h, surface, forcing, 1800.0)
        b = model.step(h, surface, forcing, 1800.0)
        assert np.array_equal(a, b)

    def test_richardson_halving_consistency(self, small_grid, loam):
        # Euler local error: (full step) vs (two half steps) shrinks ~4x when dt halves
        model = FullModel(small_grid, loam, substeps=1)
        h = hydrostatic_state(small_grid, -8.0)
        h3 = small_grid.reshape(h).copy()
        h3[:, :, -1] += 0.5  # wet surface transient so dynamics are active
        h = small_grid.flatten(h3)
        surface = idle_input(small_grid)

        def gap(dt):
            one = model.step(h, surface, IDLE, dt)
            half = model.step(model.step(h, surface, IDLE, dt / 2), surface, IDLE, dt / 2)
            return np.abs(one - half).max()

        g1, g2 = gap(400.0), gap(200.0)
        assert g1 < 0.05  # first-order error bound at the step scale
        assert g2 < g1
        assert g1 / g2 == pytest.approx(4.0, rel=0.5)

    def test_water_budget_closes_over_ten_steps(self, desk_grid, loam):
        roots = RootUptake(root_depth=0.3, h_wilting=-18.0)
        model = FullModel(desk_grid, loam, roots=roots, substeps=24)
        soil = SoilField.from_zones(np.zeros(desk_grid.n_nodes, int), [loam])
        volumes = desk_grid.flatten(desk_grid.cell_volumes())
        h = np.full(desk_grid.n_nodes, -8.0)
        budget = WaterBudget()
        storage0 = (water_content(h, soil) * volumes).sum()
        for k in range(10):
            surface = SurfaceInput(np.full(desk_grid.n_r, 5e-7), k % desk_grid.n_theta)
            h = model.step(h, surface, StepForcing(et=4e-8, k_c=0.8, rain=1e-7), 1800.0, budget=budget)
        storage1 = (water_content(h, soil) * volumes).sum()
        residual = (storage1 - storage0) - (budget.inflow - budget.drainage - budget.extraction)
        assert abs(residual) <= 0.01 * budget.inflow

    def test_unstable_step_raises(self, small_grid, loam):
        model = FullModel(small_grid, loam, substeps=16)
        h3 = np.full((small_grid.n_r, small_grid.n_theta, small_grid.n_z), -0.3)
        h3[:, ::2, :] = -80.0  # sharp wet/dry contrast far outside the stability domain
        with pytest.raises(UnstableStep):
            model.step(small_grid.flatten(h3), idle_input(small_grid), IDLE, 7200.0)


class TestEnvironmentForcing:
    def test_series_hold_last(self):
        env = EnvironmentForcing(et=[1e-8, 2e-8], k_c=0.5, rain=[0.0, 1e-8, 3e-8])
        assert env.at(0).et == 1e-8
        assert env.at(5).et == 2e-8
        assert env.at(5).rain == 3e-8
        assert env.at(5).k_c == 0.5

    def test_negative_series_rejected(self):
        import pytest as _pytest

        from pivotflow import ValidationError

        with _pytest.raises(ValidationError):
            EnvironmentForcing(et=-1e-8, k_c=0.0, rain=0.0)


# -- observation ------------------------------------------------------------------

class TestObserve:
    def test_selects_sensor_rows(self):
        x = np.array([1.0, 2.0, 3.0, 4.0])
        assert np.array_equal(observe(x, [0]), [1.0])
        assert np.array_equal(observe(x, [2, 0]), [3.0, 1.0])

    def test_rows_are_selection_rows(self):
        ones = np.ones(50)
        y = observe(ones, [4, 9, 33])
        assert np.array_equal(y, np.ones(3))

    def test_noise_added(self):
        x = np.zeros(5)
        y = observe(x, [1, 3], v=np.array([0.5, -0.5]))
        assert np.array_equal(y, [0.5, -0.5])

    def test_bad_sensor_index(self):
        with pytest.raises(BadSensorIndex):
            observe(np.zeros(10), [10])
        with pytest.raises(BadSensorIndex):
            observe(np.zeros(10), [-1])

    def test_paper_scale_layout_has_90_sensors(self):
        grid = CylindricalGrid(n_r=25, n_theta=68, n_z=12, radius=290.0, depth=0.4)
        assert grid.n_nodes == 20400
        sensors = sensor_lattice(grid, 5, 6, default_sensor_layers(grid, 0.3))
        assert len(sensors) == 90
        y = observe(np.full(grid.n_nodes, -7.0), sensors)
        assert y.shape == (90,)
