"""Split-step evolution tests: exactness of the substeps, closed-form free
evolution, second-order time refinement, reversibility, guards, and the
imaginary-time flow primitive."""

import math
from types import SimpleNamespace

import numpy as np
import pytest

from nlslab.dynamics import (
    EquationParams,
    EvolutionConfig,
    evolve,
    gradient_flow_step,
    linear_step,
    nonlinear_phase_step,
    strang_step,
)
from nlslab.errors import InvalidExponent
from nlslab.grid import ComplexField, lp_norm, make_grid

from conftest import gaussian_field


PARAMS = EquationParams(3, 2.0, 2.5, 1.0, 1.0)


def test_params_validation():
    with pytest.raises(InvalidExponent):
        EquationParams(3, 2.0, 2.5, 0.0, 1.0)  # zero coupling
    with pytest.raises(InvalidExponent):
        EquationParams(3, 2.0, 4.5, 1.0, 1.0)  # gamma > 4
    with pytest.raises(InvalidExponent):
        EquationParams(3, 2.0, 3.5, 1.0, 1.0)  # gamma > n
    with pytest.raises(InvalidExponent):
        EquationParams(3, -1.0, 2.0, 1.0, 1.0)  # p <= 0
    with pytest.raises(InvalidExponent):
        EquationParams(3, 5.0, 2.0, 1.0, 1.0)  # p > 4/(n-2)
    assert EquationParams(3, 2.0, 3.0, 1.0, 1.0).outside_paper_scope  # boundary gamma = n
    assert EquationParams(2, 1.0, 1.5, 1.0, 1.0).outside_paper_scope  # n < 3
    assert not EquationParams(3, 2.0, 2.5, 1.0, 1.0).outside_paper_scope


def test_nonlinear_step_preserves_modulus():
    g = make_grid(3, 24, 12.0)
    u = gaussian_field(g, 1.3, 1.5, phase_k=(1.0, 0.0, 0.0))
    v = nonlinear_phase_step(u, 0.37, PARAMS)
    assert np.abs(np.abs(v.values) - np.abs(u.values)).max() <= 1e-13


def test_linear_step_is_unitary_and_diagonal():
    g = make_grid(3, 16, 8.0)
    u = gaussian_field(g, 1.0, 1.0)
    v = linear_step(u, 0.3)
    assert abs(lp_norm(v, 2.0) - lp_norm(u, 2.0)) <= 1e-13
    # plane wave picks up exactly exp(-i k^2 t)
    k = g.axis_wavenumbers[2]
    x = g.axis_coordinates
    pw = ComplexField(g, np.exp(1j * k * x)[:, None, None] * np.ones(g.shape))
    w = linear_step(pw, 0.3)
    assert np.abs(w.values - np.exp(-1j * k * k * 0.3) * pw.values).max() <= 1e-12


def test_constant_field_scalar_ode():
    # [DERIVED] spatially constant c: the Hartree potential vanishes (zero-mode
    # convention), so u(t) = c exp(-i lam1 |c|^p t) exactly
    g = make_grid(3, 8, 4.0)
    c = 0.8 - 0.4j
    u = ComplexField(g, np.full(g.shape, c))
    dt = 0.21
    v = strang_step(u, dt, PARAMS)
    expected = c * np.exp(-1j * PARAMS.lam1 * abs(c) ** PARAMS.p * dt)
    assert np.abs(v.values - expected).max() <= 1e-13


def test_free_gaussian_closed_form():
    # [DERIVED] i u_t + Lap u = 0 with u0 = exp(-|x|^2/(2 w^2)) has
    # u(t) = (w^2/(w^2 + 2 i t))^{n/2} exp(-|x|^2/(2(w^2 + 2 i t)))
    g = make_grid(3, 64, 32.0)
    w = 2.0
    u = gaussian_field(g, 1.0, w)
    t = 1.0
    v = linear_step(u, t)
    denom = w * w + 2j * t
    expected = (w * w / denom) ** 1.5 * np.exp(-g.radius_squared / (2.0 * denom))
    assert np.abs(v.values - expected).max() <= 1e-6


def test_strang_second_order_refinement():
    # [DERIVED] global error vs a dt/8 reference shrinks ~4x when dt halves
    g = make_grid(3, 32, 16.0)
    u0 = gaussian_field(g, 1.0, 1.5)
    T = 0.5

    def final(dt):
        cfg = EvolutionConfig(dt=dt, t_end=T, cadence=1000000)
        return evolve(u0, PARAMS, cfg).final_state.values

    ref = final(T / 160)
    e1 = np.abs(final(T / 20) - ref).max()
    e2 = np.abs(final(T / 40) - ref).max()
    assert 3.4 <= e1 / e2 <= 4.6, f"refinement factor {e1 / e2:.2f}"


def test_strang_time_reversal():
    # N(-dt/2) L(-dt) N(-dt/2) undoes N(dt/2) L(dt) N(dt/2) exactly
    g = make_grid(3, 24, 12.0)
    u = gaussian_field(g, 1.2, 1.5)
    v = strang_step(strang_step(u, 0.05, PARAMS), -0.05, PARAMS)
    assert np.abs(v.values - u.values).max() <= 1e-12


def test_evolve_zero_duration():
    g = make_grid(3, 16, 8.0)
    u = gaussian_field(g, 1.0, 1.0)
    res = evolve(u, PARAMS, EvolutionConfig(dt=0.01, t_end=0.0))
    assert res.termination == "completed"
    assert res.steps_taken == 0
    assert np.array_equal(res.final_state.values, u.values)


def test_evolve_guard_trips_on_max_abs():
    g = make_grid(3, 16, 8.0)
    u = gaussian_field(g, 1.0, 1.0)
    cfg = EvolutionConfig(dt=0.01, t_end=1.0, cadence=5, guard_max_abs=0.5)
    res = evolve(u, PARAMS, cfg)
    assert res.termination == "guard_tripped"
    assert res.guard_message


def test_evolve_observer_cadence():
    g = make_grid(3, 16, 8.0)
    u = gaussian_field(g, 0.5, 1.0)
    seen = []
    res = evolve(u, PARAMS, EvolutionConfig(dt=0.01, t_end=0.1, cadence=5), observers=[lambda t, f: seen.append(t)])
    assert res.termination == "completed"
    assert np.allclose(seen, [0.0, 0.05, 0.1])


def test_zero_coupling_phase_step_is_identity():
    # duck-typed parameter object; EquationParams itself forbids zero couplings
    g = make_grid(3, 16, 8.0)
    u = gaussian_field(g, 1.0, 1.0)
    free = SimpleNamespace(n=3, p=2.0, gamma=2.0, lam1=0.0, lam2=0.0)
    v = nonlinear_phase_step(u, 0.3, free)
    assert np.abs(v.values - u.values).max() <= 1e-15


def test_evolution_config_validation():
    with pytest.raises(InvalidExponent):
        EvolutionConfig(dt=0.0, t_end=1.0)
    with pytest.raises(InvalidExponent):
        EvolutionConfig(dt=0.1, t_end=-1.0)
    with pytest.raises(InvalidExponent):
        EvolutionConfig(dt=0.1, t_end=1.0, cadence=0)


# ---------------------------------------------------------------------------
# Imaginary-time flow primitive


def test_gradient_flow_linear_decay():
    # with N = 0 a plane wave decays by exactly exp(-(k^2 + mu) dtau)
    g = make_grid(3, 16, 8.0)
    k = g.axis_wavenumbers[1]
    x = g.axis_coordinates
    u = ComplexField(g, np.exp(1j * k * x)[:, None, None] * np.ones(g.shape))
    out = gradient_flow_step(u, 0.2, PARAMS, mu=0.5, mode="none")
    factor = math.exp(-0.2 * (k * k + 0.5))
    assert np.abs(out.values - factor * u.values).max() <= 1e-12


def test_gradient_flow_mass_normalization():
    g = make_grid(3, 16, 8.0)
    u = gaussian_field(g, 1.0, 1.2)
    out = gradient_flow_step(u, 0.1, PARAMS, mu=0.3, mode="power", normalize_mass=2.0)
    assert lp_norm(out, 2.0) ** 2 == pytest.approx(2.0, rel=1e-12)


def test_gradient_flow_rejects_bad_input():
    g = make_grid(3, 16, 8.0)
    u = gaussian_field(g, 1.0, 1.2)
    with pytest.raises(InvalidExponent):
        gradient_flow_step(u, -0.1, PARAMS, mu=0.3, mode="power")
    with pytest.raises(InvalidExponent):
        gradient_flow_step(u, 0.1, PARAMS, mu=0.3, mode="bogus")
