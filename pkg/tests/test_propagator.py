"""Exact mode flow, spectral quadrature and per-mode energy checks."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from elastodamp.model import DataProfile, make_params, profile_l2_norm
from elastodamp.propagator import (ModeState, QuadratureGrid,
                                   default_grid_for, e_pha, evolve_mode,
                                   evolve_profiles_on_grid,
                                   flow_coefficients, lyapunov_constants,
                                   micro_energy, mode_state_from_micro,
                                   norm_quadrature, transverse_basis,
                                   verify_epha_decay, verify_lyapunov_mid)


@given(p=st.floats(0.0, 10.0), q=st.floats(1e-4, 100.0),
       t=st.floats(0.0, 20.0))
@settings(max_examples=200, deadline=None)
def test_flow_coefficients_initial_data_and_wronskian(p, q, t):
    phi0, phi1, dphi0, dphi1 = flow_coefficients(np.array(p), np.array(q), t)
    z0, z1, d0, d1 = flow_coefficients(np.array(p), np.array(q), 0.0)
    assert z0 == pytest.approx(1.0) and z1 == pytest.approx(0.0, abs=1e-15)
    assert d0 == pytest.approx(0.0, abs=1e-15) and d1 == pytest.approx(1.0)
    # Abel identity: the Wronskian of the basis pair is exp(-p t)
    wron = phi0 * dphi1 - dphi0 * phi1
    assert wron == pytest.approx(np.exp(-p * t), rel=1e-8, abs=1e-12)
    for c in (phi0, phi1, dphi0, dphi1):
        assert np.isfinite(complex(c).real) and np.isfinite(complex(c).imag)


def test_flow_coefficients_overflow_guard():
    # widely split real roots at long times: the naive cosh form overflows
    phi0, phi1, dphi0, dphi1 = flow_coefficients(
        np.array(1e4), np.array(1.0), 100.0)
    assert np.isfinite(phi0) and np.isfinite(phi1)
    assert abs(phi0) < 1.1


def test_flow_coefficients_solve_ode():
    rng = np.random.default_rng(3)
    for _ in range(5):
        p = rng.uniform(0.0, 3.0)
        q = rng.uniform(0.1, 9.0)
        t_end = rng.uniform(0.5, 5.0)

        def rhs(t, y):
            return [y[1], -p * y[1] - q * y[0]]

        for y0, pick in (([1.0, 0.0], 0), ([0.0, 1.0], 1)):
            sol = solve_ivp(rhs, (0.0, t_end), y0, rtol=1e-11, atol=1e-13)
            coeffs = flow_coefficients(np.array(p), np.array(q), t_end)
            assert complex(coeffs[pick]).real == pytest.approx(
                sol.y[0, -1], abs=1e-8)
            assert complex(coeffs[pick + 2]).real == pytest.approx(
                sol.y[1, -1], abs=1e-8)


@given(direction=st.tuples(st.floats(-1, 1), st.floats(-1, 1),
                           st.floats(-1, 1)).filter(
    lambda d: np.linalg.norm(d) > 1e-3))
@settings(max_examples=200, deadline=None)
def test_transverse_basis_orthonormal(direction):
    eta = np.asarray(direction) / np.linalg.norm(direction)
    t1, t2 = transverse_basis(eta)
    for v in (t1, t2):
        assert np.linalg.norm(v) == pytest.approx(1.0, abs=1e-12)
        assert abs(v @ eta) < 1e-12
    assert abs(t1 @ t2) < 1e-12


def test_evolve_mode_against_ode():
    params = make_params(1.0, 2.0, 0.3)
    rng = np.random.default_rng(11)
    xi = np.array([0.4, -0.8, 1.1])
    u0 = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    u1 = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    state0 = ModeState(u_hat=u0, ut_hat=u1, xi=xi)
    rho = state0.rho

    def rhs(t, y):
        u = y[:3] + 1j * y[3:6]
        ut = y[6:9] + 1j * y[9:]
        A = params.a2 * rho**2 * np.eye(3) \
            + (params.b2 - params.a2) * np.outer(xi, xi)
        utt = -rho ** (2.0 * params.theta) * ut - A @ u
        return np.concatenate([ut.real, ut.imag, utt.real, utt.imag])

    y0 = np.concatenate([u0.real, u0.imag, u1.real, u1.imag])
    t_end = 2.5
    sol = solve_ivp(rhs, (0.0, t_end), y0, rtol=1e-11, atol=1e-13)
    got = evolve_mode(params, state0, t_end)
    assert np.allclose(got.u_hat, sol.y[:3, -1] + 1j * sol.y[3:6, -1],
                       atol=1e-7)
    assert np.allclose(got.ut_hat, sol.y[6:9, -1] + 1j * sol.y[9:, -1],
                       atol=1e-7)


def test_evolve_mode_zero_frequency():
    state0 = ModeState(u_hat=np.array([1.0, 0j, 0.0]),
                       ut_hat=np.array([0.0, 2.0 + 0j, 0.0]),
                       xi=np.zeros(3))
    damped = make_params(1.0, 2.0, 0.0)
    out = evolve_mode(damped, state0, 3.0)
    assert out.u_hat[1] == pytest.approx(2.0 * (1.0 - np.exp(-3.0)))
    assert out.ut_hat[1] == pytest.approx(2.0 * np.exp(-3.0))
    fractional = make_params(1.0, 2.0, 0.5)
    out = evolve_mode(fractional, state0, 3.0)
    assert out.u_hat[1] == pytest.approx(6.0)
    with pytest.raises(ValueError):
        evolve_mode(damped, state0, -1.0)


def test_evolve_mode_semigroup_property():
    params = make_params(1.3, 2.1, 0.7)
    rng = np.random.default_rng(5)
    state0 = ModeState(u_hat=rng.standard_normal(3) + 0j,
                       ut_hat=rng.standard_normal(3) + 0j,
                       xi=np.array([0.2, 0.1, -0.3]))
    one = evolve_mode(params, evolve_mode(params, state0, 1.2), 0.8)
    two = evolve_mode(params, state0, 2.0)
    assert np.allclose(one.u_hat, two.u_hat, atol=1e-12)
    assert np.allclose(one.ut_hat, two.ut_hat, atol=1e-12)


@given(data=st.data())
@settings(max_examples=100, deadline=None)
def test_micro_energy_roundtrip(data):
    params = make_params(1.0, 2.0, 0.4)
    rng = np.random.default_rng(data.draw(st.integers(0, 2**31)))
    xi = rng.standard_normal(3)
    if np.linalg.norm(xi) < 1e-3:
        xi = np.array([1.0, 0.0, 0.0])
    state = ModeState(u_hat=rng.standard_normal(3)
                      + 1j * rng.standard_normal(3),
                      ut_hat=rng.standard_normal(3)
                      + 1j * rng.standard_normal(3), xi=xi)
    back = mode_state_from_micro(params, micro_energy(params, state))
    assert np.allclose(back.u_hat, state.u_hat, atol=1e-12)
    assert np.allclose(back.ut_hat, state.ut_hat, atol=1e-12)


def test_micro_energy_rejects_zero_mode():
    params = make_params(1.0, 2.0, 0.4)
    state = ModeState(u_hat=np.ones(3) + 0j, ut_hat=np.zeros(3) + 0j,
                      xi=np.zeros(3))
    with pytest.raises(ValueError):
        micro_energy(params, state)


def test_e_pha_positive_and_dissipated():
    params = make_params(1.0, 2.0, 0.5)
    state = ModeState(u_hat=np.array([1.0, 0.5j, -0.2]),
                      ut_hat=np.array([0.1, 0.0j, 0.3]),
                      xi=np.array([0.5, 0.5, 0.5]))
    e0 = e_pha(params, state)
    assert e0 > 0.0
    e1 = e_pha(params, evolve_mode(params, state, 5.0))
    assert e1 < e0


def test_quadrature_integrates_gaussian():
    grid = QuadratureGrid.build(12.0)
    vals = np.exp(-grid.rho**2)[:, None] * np.ones(grid.dirs.shape[0])
    assert grid.integrate(vals) == pytest.approx(np.pi**1.5, rel=1e-12)
    assert np.sum(grid.w_sph) == pytest.approx(4.0 * np.pi, rel=1e-12)


def test_default_grid_radius_and_tail_guard():
    narrow = DataProfile(kind="gaussian", width=2.0)
    ring = DataProfile(kind="ring", width=1.0, center_frequency=6.0)
    grid = default_grid_for((narrow, ring))
    assert grid.R == pytest.approx(18.0)
    with pytest.raises(ValueError):
        norm_quadrature(make_params(1.0, 2.0, 0.5), (narrow, ring), 0.0,
                        "L2", grid=QuadratureGrid.build(5.0))
    with pytest.raises(ValueError):
        default_grid_for((None, None))


def test_norm_quadrature_matches_analytic_at_t0():
    params = make_params(1.0, 2.0, 0.25)
    prof = DataProfile(kind="gaussian", amplitude=0.8, width=1.5)
    got = norm_quadrature(params, (prof, None), 0.0, "L2")
    assert got == pytest.approx(profile_l2_norm(prof), rel=1e-10)
    with pytest.raises(ValueError):
        norm_quadrature(params, (prof, None), 0.0, "sup")


def test_grid_evolution_matches_mode_evolution():
    params = make_params(1.0, 2.0, 0.6)
    prof = DataProfile(kind="gaussian", width=1.0,
                       direction=(0.0, 1.0, 0.0))
    grid = QuadratureGrid.build(8.0, n_per_panel=4, n_panels=6,
                                n_polar=4, n_azimuth=8)
    t = 1.7
    u, ut = evolve_profiles_on_grid(params, (prof, prof), t, grid)
    from elastodamp.model import profile_fourier
    i, j = 3, 5
    xi = grid.xi[i, j]
    f = profile_fourier(prof, xi).astype(complex)
    state = evolve_mode(params, ModeState(u_hat=f, ut_hat=f, xi=xi), t)
    assert np.allclose(u[i, j], state.u_hat, atol=1e-12)
    assert np.allclose(ut[i, j], state.ut_hat, atol=1e-12)


def test_lyapunov_constants_and_mid_report():
    params = make_params(1.0, 2.0, 0.25)
    c0, c1, c2, c3 = lyapunov_constants(params)
    assert c0 > 1.0 and c1 > 0.0 and c2 > 0.0
    assert c3 == pytest.approx(c2 + 1.0 / c1)
    state = ModeState(u_hat=np.array([1.0, -0.3j, 0.2]),
                      ut_hat=np.array([0.0j, 0.5, -0.1]),
                      xi=np.array([0.8, 0.0, 0.6]))
    rep = verify_lyapunov_mid(params, 1.0, state, 40.0)
    assert rep["max_violation"] <= 1e-6 * rep["F0"]
    assert rep["sandwich_lower"] >= -1e-9 * rep["F0"]
    assert rep["sandwich_upper"] >= -1e-9 * rep["F0"]
    assert rep["gronwall_ok"]
    with pytest.raises(ValueError):
        verify_lyapunov_mid(params, params.epsilon / 10.0, state, 1.0)


def test_epha_pointwise_two_zone_bound():
    params = make_params(1.0, 2.0, 0.25)
    state = ModeState(u_hat=np.array([0.4, 0.1j, -0.7]),
                      ut_hat=np.array([0.2, -0.3, 0.5j]),
                      xi=np.array([1.0, 1.0, 0.0]) / np.sqrt(2.0))
    rep = verify_epha_decay(params, 1.0, state, 20.0)
    assert rep["pointwise_ok"]
    assert rep["bound_rate"] == pytest.approx(2.0 / 3.0)
    small = verify_epha_decay(params, params.epsilon / 4.0, state, 20.0)
    gamma = 2.0 * max(1.0 - params.theta, params.theta)
    assert small["bound_rate"] == pytest.approx(
        (2.0 / 3.0) * (params.epsilon / 4.0) ** gamma)
