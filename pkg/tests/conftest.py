import numpy as np
import pytest

from pivotflow import CylindricalGrid, FullModel, VanGenuchtenParams

LOAM = VanGenuchtenParams(alpha=3.6, n_vg=1.56, theta_r=0.078, theta_s=0.43, k_s=2.9e-6)


@pytest.fixture(scope="session")
def loam():
    return LOAM


@pytest.fixture(scope="session")
def desk_grid():
    return CylindricalGrid(n_r=10, n_theta=12, n_z=6, radius=5.0, depth=0.4)


@pytest.fixture()
def small_grid():
    return CylindricalGrid(n_r=4, n_theta=6, n_z=4, radius=2.0, depth=0.4)


@pytest.fixture()
def small_model(small_grid):
    return FullModel(small_grid, LOAM, substeps=4)


def hydrostatic_state(grid, head_at_bottom):
    """h + z constant; bottom cell center at z = dz/2."""
    z = grid.node_coordinates()[2]
    return head_at_bottom + grid.dz / 2 - z
