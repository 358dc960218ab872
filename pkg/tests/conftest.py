"""Shared fixtures: scenario objects and the expensive session-scoped runs."""

import numpy as np
import pytest

from gstein.gheat import GCoeff, estimate_regularity
from gstein.measures import variance_bounds
from gstein.suites import regularity_phi_suite, two_scale_rademacher

ALPHA_GRID = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]
T_GRID = np.geomspace(0.01, 1.0, 10)


@pytest.fixture(scope="session")
def two_scale_theta():
    return two_scale_rademacher()


@pytest.fixture(scope="session")
def two_scale_coeff(two_scale_theta):
    under_sq, bar_sq = variance_bounds(two_scale_theta)
    return GCoeff.from_variance_bounds(under_sq, bar_sq)


@pytest.fixture(scope="session")
def two_scale_reg(two_scale_coeff):
    """Production regularity estimate for the two-scale scenario
    (finest grids dx = 0.01 and 0.005)."""
    return estimate_regularity(two_scale_coeff, regularity_phi_suite(),
                               alpha_grid=ALPHA_GRID, t_grid=T_GRID, dx=0.01)
