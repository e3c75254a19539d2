"""Reference heat systems and measured decay gaps."""

import numpy as np
import pytest

from elastodamp.diffusion import (build_reference, double_diffusion_split,
                                  gap_decay, micro_energy_on_grid,
                                  predicted_gap)
from elastodamp.diffusion import _t1_matrix
from elastodamp.model import DataProfile, make_params
from elastodamp.propagator import (ModeState, QuadratureGrid,
                                   evolve_profiles_on_grid, micro_energy)


def _params(theta):
    return make_params(1.0, 2.0, theta)


def _small_grid(R=12.0):
    return QuadratureGrid.build(R, n_per_panel=12, n_panels=30,
                                n_polar=8, n_azimuth=16)


def _profiles():
    return (DataProfile(kind="gaussian", width=1.0),
            DataProfile(kind="gaussian", width=1.0))


def test_t1_orthogonal():
    T1 = _t1_matrix()
    assert np.allclose(T1 @ T1.T, np.eye(6), atol=1e-15)


def test_predicted_gap_values():
    assert predicted_gap(0.0) == pytest.approx(0.5)
    assert predicted_gap(0.25) == pytest.approx(1.0 / 3.0)
    assert predicted_gap(0.75) == pytest.approx(1.0 / 3.0)
    assert predicted_gap(1.0) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        predicted_gap(0.5)


def test_build_reference_rejects_theta_half():
    with pytest.raises(ValueError):
        build_reference(_params(0.5))


def test_reference_matrices_by_regime():
    low = build_reference(_params(0.25))
    assert low.sigma1 == pytest.approx(0.75)
    assert low.sigma2 == pytest.approx(0.25)
    assert np.allclose(np.diag(low.M1).real, [1.0, 1.0, 2.0, 0, 0, 0])
    high = build_reference(_params(0.75))
    assert high.sigma1 == pytest.approx(0.75)
    assert high.sigma2 == pytest.approx(0.5)
    assert np.allclose(high.M1, 0.5 * np.eye(6))
    assert np.allclose(np.diag(high.M2).imag,
                       [1.0, 1.0, np.sqrt(2.0), -1.0, -1.0, -np.sqrt(2.0)])


def test_mu_tilde_exponents():
    rho = np.array([1e-3])
    low = build_reference(_params(0.25)).mu_tilde(rho)[0]
    assert low[0] == pytest.approx(1.0 * 1e-3**1.5)
    assert low[2] == pytest.approx(2.0 * 1e-3**1.5)
    assert low[3] == pytest.approx(1e-3**0.5)
    # theta = 0: the second heat block relaxes at unit rate e^{-t}
    flat = build_reference(_params(0.0)).mu_tilde(rho)[0]
    assert np.allclose(flat[3:], 1.0)
    high = build_reference(_params(0.75)).mu_tilde(rho)[0]
    assert high[0] == pytest.approx(-1j * 1e-3 + 0.5 * 1e-3**1.5)
    assert high[5] == pytest.approx(1j * np.sqrt(2.0) * 1e-3
                                    + 0.5 * 1e-3**1.5)


@pytest.mark.parametrize("theta", [0.25, 0.75])
def test_H_and_L_are_mutual_inverses(theta):
    ref = build_reference(_params(theta))
    rho = np.geomspace(1e-4, 1e-2, 5)
    prod = ref.L(rho) @ ref.H(rho)
    assert np.max(np.abs(prod - np.eye(6))) < 1e-8


@pytest.mark.parametrize("theta", [0.25, 0.75])
def test_reference_diagonalizes_the_mode_system(theta):
    # H A L must be diagonal with the reference exponents, where A is the
    # per-branch 2x2 coefficient of the (W_+, W_-) pair embedded 6x6
    params = _params(theta)
    rho = np.array([1e-3])
    ref = build_reference(params)
    r = float(rho[0])
    p = r ** (2.0 * params.theta)
    A = np.zeros((6, 6), dtype=complex)
    for i, y in enumerate((params.a, params.a, params.b)):
        blk = np.array([[-p / 2.0 + 1j * y * r, -p / 2.0],
                        [-p / 2.0, -p / 2.0 - 1j * y * r]])
        A[i, i] = blk[0, 0]
        A[i, i + 3] = blk[0, 1]
        A[i + 3, i] = blk[1, 0]
        A[i + 3, i + 3] = blk[1, 1]
    H = ref.H(rho)[0]
    L = ref.L(rho)[0]
    D = H @ (-A) @ L
    off = D - np.diag(np.diag(D))
    mu = ref.mu_tilde(rho)[0]
    assert np.max(np.abs(off)) < 1e-5 * np.max(np.abs(mu))
    # the diagonal carries the truncated expansion error, relative ~rho
    diag_err = np.abs(np.sort_complex(np.diag(D)) - np.sort_complex(mu))
    assert np.max(diag_err) < 5e-3 * np.max(np.abs(mu))


def test_conditioning_guard_near_resonant_frequency():
    # the z-corrections blow up where y^2 rho^{2-4 theta} = 1, far outside
    # the small zone the multipliers are built for
    ref = build_reference(_params(0.1))
    with pytest.raises(ValueError):
        ref.H(np.array([1.0 - 1e-7]))


def test_micro_energy_on_grid_matches_per_mode():
    params = _params(0.25)
    grid = _small_grid()
    u, ut = evolve_profiles_on_grid(params, _profiles(), 0.3, grid)
    W = micro_energy_on_grid(params, u, ut, grid)
    i, j = 10, 7
    xi = grid.xi[i, j]
    state = ModeState(u_hat=u[i, j], ut_hat=ut[i, j], xi=xi)
    assert np.allclose(W[i, j], micro_energy(params, state).W, atol=1e-12)


def test_reference_matches_exact_flow_at_t0():
    params = _params(0.25)
    ref = build_reference(params)
    grid = _small_grid()
    meas = gap_decay(params, ref, _profiles(), 0.0, 2.0, (1e-6, 1e-4),
                     sample_count=20, grid=grid)
    # at t ~ 0 the reference reproduces the data exactly (L H = identity)
    assert meas.difference_norms[0] <= 1e-6 * meas.solution_norms[0]


@pytest.mark.parametrize("theta,window", [(0.25, (1e2, 1e4)),
                                          (0.75, (1e4, 1e6))])
def test_gap_measurement_beats_prediction(theta, window):
    params = _params(theta)
    ref = build_reference(params)
    meas = gap_decay(params, ref, _profiles(), 0.0, 2.0, window,
                     sample_count=20, grid=_small_grid())
    assert meas.difference_r2 > 0.99
    assert meas.measured_gap >= meas.predicted_gap - 0.1


def test_double_diffusion_blocks():
    # lifted data keeps both block components nonzero at xi = 0, so the
    # fits see the pure heat rates: block 1 (|xi|^{2-2 theta} driven)
    # decays like t^{-3/(2(2-2 theta))}, block 2 like t^{-3/(4 theta)}
    from elastodamp.decay_lab import sharp_data_pair

    params = _params(0.25)
    fit1, fit2 = double_diffusion_split(params, sharp_data_pair(),
                                        (1e2, 1e4), sample_count=20,
                                        grid=_small_grid())
    slow, fast = fit1["slope"], fit2["slope"]
    assert slow == pytest.approx(-3.0 / (2.0 * (2.0 - 2.0 * params.theta)),
                                 abs=0.15)
    assert fast == pytest.approx(-3.0 / (4.0 * params.theta), abs=0.15)
    with pytest.raises(ValueError):
        double_diffusion_split(_params(0.75), _profiles(), (1e2, 1e4),
                               grid=_small_grid())
