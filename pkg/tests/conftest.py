"""Shared fixtures. Ground-state solves are session-scoped because they are
the most expensive reusable artifacts in the suite."""

import numpy as np
import pytest

from nlslab.grid import ComplexField, make_grid
from nlslab.ground_state import flow_ground_state, shoot_R


@pytest.fixture(scope="session")
def R_3_2():
    """Canonical power ground state, n=3, p=2, via shooting."""
    return shoot_R(3, 2.0)


@pytest.fixture(scope="session")
def W_3_25():
    """Hartree ground state, n=3, gamma=2.5, via gradient flow."""
    return flow_ground_state("W", 3, 2.5)


@pytest.fixture(scope="session")
def W_3_2():
    """Hartree ground state at the mass-critical exponent gamma=2, n=3."""
    return flow_ground_state("W", 3, 2.0)


def gaussian_field(grid, amplitude=1.0, width=1.0, phase_k=None):
    """amplitude * exp(-r^2/(2 width^2)), optional plane-wave phase."""
    vals = amplitude * np.exp(-grid.radius_squared / (2.0 * width**2))
    vals = vals.astype(complex)
    if phase_k is not None:
        x = grid.axis_coordinates
        for axis, k in enumerate(phase_k):
            sh = [1] * grid.dim
            sh[axis] = grid.points
            vals = vals * np.exp(1j * k * x.reshape(sh))
    return ComplexField(grid, vals)
