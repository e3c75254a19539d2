"""Parabolic reference systems and decay-gap measurements.

At small frequencies the damped elastic wave behaves like a fractional
heat flow: the six-vector W of the first-order mode system satisfies

    W(t) ~ L(|xi|) diag(e^{-mu_tilde_l(|xi|) t}) H(|xi|) W(0),

where mu_tilde keeps only the leading part of each dispersion root and
the multipliers H, L are assembled from the explicit almost-diagonalizer
(an orthogonal mixing matrix T1 and nilpotent corrections N1, N2, N3).
The difference between the exact flow and this reference decays faster
than either side by a positive gap rate, which this module measures.

theta = 1/2 is excluded: both branches carry the same e^{-|xi| t / 2}
envelope there and no reference system improves on the solution decay.
"""

from dataclasses import dataclass

import numpy as np

from .model import ModelParams, ZonePartition
from .propagator import (default_grid_for, evolve_profiles_on_grid,
                         transverse_basis)
from .symbol import zcorr

__all__ = [
    "ReferenceSystem",
    "GapMeasurement",
    "build_reference",
    "predicted_gap",
    "gap_decay",
    "double_diffusion_split",
    "micro_energy_on_grid",
]

_COND_LIMIT = 1e6


def _t1_matrix():
    M = np.array([
        [0, 1, 0, 0, 0, 1],
        [1, 0, 0, 1, 0, 0],
        [0, 0, 1, 0, 1, 0],
        [0, -1, 0, 0, 0, 1],
        [-1, 0, 0, 1, 0, 0],
        [0, 0, -1, 0, 1, 0],
    ], dtype=float)
    return M / np.sqrt(2.0)


def _sparse_batch(rho_shape, entries):
    """Stack of 6x6 matrices from {(i, j): value-array} entries."""
    N = np.zeros(rho_shape + (6, 6), dtype=complex)
    for (i, j), val in entries.items():
        N[..., i, j] = val
    return N


def _n1(a, b, theta, rho):
    f = 1j * rho ** (1.0 - 2.0 * theta)
    return _sparse_batch(rho.shape, {
        (0, 3): -a * f, (1, 5): -a * f, (2, 4): -b * f,
        (3, 0): a * f, (4, 2): b * f, (5, 1): a * f,
    })


def _n2(params, rho):
    z = zcorr(params, rho)
    z6a = np.asarray(z["z6a"], dtype=complex)
    z6b = np.asarray(z["z6b"], dtype=complex)
    f = -1j / rho ** (2.0 * params.theta)
    return _sparse_batch(rho.shape, {
        (0, 3): z6a * f, (1, 5): z6a * f, (2, 4): z6b * f,
        (3, 0): -z6a * f, (4, 2): -z6b * f, (5, 1): -z6a * f,
    })


def _n3(a, b, theta, rho):
    f = 0.25j * rho ** (2.0 * theta - 1.0)
    return _sparse_batch(rho.shape, {
        (0, 3): -f / a, (1, 4): -f / a, (2, 5): -f / b,
        (3, 0): f / a, (4, 1): f / a, (5, 2): f / b,
    })


def _guarded_inverse(mats):
    cond = np.linalg.cond(mats)
    worst = float(np.max(cond))
    if worst > _COND_LIMIT:
        raise ValueError(
            "almost-diagonalizer ill conditioned (cond %.3g); the reference "
            "multipliers are only valid on the small-frequency zone" % worst)
    return np.linalg.inv(mats)


@dataclass(frozen=True)
class ReferenceSystem:
    """Fractional heat system matching the small-frequency wave flow.

    The reference evolution is U_t + M1 (-Lap)^{sigma1} U
    + M2 (-Lap)^{sigma2} U = 0 with data H(|xi|) W0; its Fourier solution
    is diag(e^{-mu_tilde t}) H W0 and L maps it back to the wave frame.
    """

    a2: float
    b2: float
    theta: float
    sigma1: float
    sigma2: float
    M1: np.ndarray
    M2: np.ndarray

    def mu_tilde(self, rho):
        """The six reference exponents at radial frequency rho."""
        rho = np.asarray(rho, dtype=float)
        a2, b2, th = self.a2, self.b2, self.theta
        out = np.empty(rho.shape + (6,), dtype=complex)
        if th < 0.5:
            slow = rho ** (2.0 - 2.0 * th)
            fast = rho ** (2.0 * th)
            out[..., 0] = a2 * slow
            out[..., 1] = a2 * slow
            out[..., 2] = b2 * slow
            out[..., 3:] = fast[..., None]
        else:
            a = np.sqrt(a2)
            b = np.sqrt(b2)
            half = 0.5 * rho ** (2.0 * th)
            out[..., 0] = -1j * a * rho + half
            out[..., 1] = -1j * a * rho + half
            out[..., 2] = -1j * b * rho + half
            out[..., 3] = 1j * a * rho + half
            out[..., 4] = 1j * a * rho + half
            out[..., 5] = 1j * b * rho + half
        return out

    def H(self, rho):
        """Data-preparation multiplier, shape rho.shape + (6, 6)."""
        rho = np.asarray(rho, dtype=float)
        a = np.sqrt(self.a2)
        b = np.sqrt(self.b2)
        eye = np.eye(6)
        if self.theta < 0.5:
            inv1 = _guarded_inverse(eye + _n1(a, b, self.theta, rho))
            inv2 = _guarded_inverse(eye + _n2_from(self, rho))
            return inv2 @ inv1 @ _t1_matrix().T
        return _guarded_inverse(eye + _n3(a, b, self.theta, rho))

    def L(self, rho):
        """Reconstruction multiplier, the exact inverse of H."""
        rho = np.asarray(rho, dtype=float)
        a = np.sqrt(self.a2)
        b = np.sqrt(self.b2)
        eye = np.eye(6)
        if self.theta < 0.5:
            return (_t1_matrix()
                    @ (eye + _n1(a, b, self.theta, rho))
                    @ (eye + _n2_from(self, rho)))
        return eye + _n3(a, b, self.theta, rho)


def _n2_from(ref, rho):
    # zcorr only reads (a2, b2, theta); the cutoff value is irrelevant here
    params = ModelParams(a2=ref.a2, b2=ref.b2, theta=ref.theta, epsilon=1.0)
    return _n2(params, rho)


def build_reference(params):
    """Regime-correct reference system for the given parameters."""
    th = params.theta
    if abs(th - 0.5) < 1e-14:
        raise ValueError(
            "no reference system at theta = 1/2: both root branches share "
            "the envelope e^{-|xi| t / 2} and the difference to any "
            "fractional heat flow decays no faster than the solution")
    a2, b2 = params.a2, params.b2
    if th < 0.5:
        sigma1 = 1.0 - th
        sigma2 = th
        M1 = np.diag([a2, a2, b2, 0.0, 0.0, 0.0]).astype(complex)
        M2 = np.diag([0.0, 0.0, 0.0, 1.0, 1.0, 1.0]).astype(complex)
    else:
        a, b = np.sqrt(a2), np.sqrt(b2)
        sigma1 = th
        sigma2 = 0.5
        M1 = 0.5 * np.eye(6, dtype=complex)
        M2 = 1j * np.diag([a, a, b, -a, -a, -b]).astype(complex)
    return ReferenceSystem(a2=a2, b2=b2, theta=th, sigma1=sigma1,
                           sigma2=sigma2, M1=M1, M2=M2)


def predicted_gap(theta):
    """Extra decay of the difference over the solution itself."""
    if theta < 0.5:
        return (1.0 - 2.0 * theta) / (2.0 * (1.0 - theta))
    if theta > 0.5:
        return (2.0 * theta - 1.0) / (2.0 * theta)
    raise ValueError("no gap at theta = 1/2")


def micro_energy_on_grid(params, u, ut, grid):
    """Six-vector W at every grid node from the transform pair (u, ut).

    u, ut have shape (n_rad, n_sph, 3); the result (n_rad, n_sph, 6).
    """
    t1, t2 = transverse_basis(grid.dirs)
    frame = np.stack([t1, t2, grid.dirs])            # (3, n_sph, 3)
    v = np.einsum("rsc,fsc->rsf", u, frame)
    vt = np.einsum("rsc,fsc->rsf", ut, frame)
    S = np.array([params.a, params.a, params.b])[None, None, :] \
        * grid.rho[:, None, None]
    dt_v = -1j * vt
    return np.concatenate([dt_v + S * v, dt_v - S * v], axis=-1)


@dataclass(frozen=True)
class GapMeasurement:
    """Slope fits of solution, reference and difference norms.

    All norms are the chi_int-localized homogeneous H^s norms of the
    six-vector W; the gap is how much steeper the difference decays
    than the solution itself.
    """

    s: float
    m: float
    window: tuple
    solution_slope: float
    difference_slope: float
    difference_r2: float
    predicted_gap: float
    predicted_difference_slope: float
    measured_gap: float
    times: np.ndarray
    solution_norms: np.ndarray
    reference_norms: np.ndarray
    difference_norms: np.ndarray


def _fit_loglog(ts, vals):
    x = np.log(1.0 + ts)
    y = np.log(vals)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - np.sum(resid**2) / ss if ss > 0.0 else 0.0
    return float(slope), float(r2)


def _localized_norm(grid, density, chi2):
    val = grid.integrate(density * chi2[:, None]) / (2.0 * np.pi) ** 3
    return float(np.sqrt(max(val, 0.0)))


def gap_decay(params, ref, profiles, s, m, window, sample_count=20,
              grid=None):
    """Measure how fast the reference flow shadows the exact flow.

    Evolves W exactly, evolves the reference as L e^{-mu_tilde t} H W0,
    and fits the decay slopes of both the solution norm and the
    difference norm (chi_int-localized, homogeneous H^s).
    """
    if grid is None:
        grid = default_grid_for(profiles)
    zones = ZonePartition(params.epsilon)
    chi = zones.chi_int(grid.rho)
    chi2 = chi**2
    # the reference is only meaningful (and its multipliers only well
    # conditioned) where chi_int is supported
    mask = chi > 0.0

    u0, ut0 = evolve_profiles_on_grid(params, profiles, 0.0, grid)
    W0 = micro_energy_on_grid(params, u0, ut0, grid)

    rho_m = grid.rho[mask]
    Hm = ref.H(rho_m)
    Lm = ref.L(rho_m)
    mum = ref.mu_tilde(rho_m)
    HW0 = np.einsum("rij,rsj->rsi", Hm, W0[mask])

    ts = np.geomspace(window[0], window[1], sample_count)
    rho2s = grid.rho[:, None] ** (2.0 * s)
    sol = np.empty(sample_count)
    refn = np.empty(sample_count)
    diff = np.empty(sample_count)
    for k, t in enumerate(ts):
        u, ut = evolve_profiles_on_grid(params, profiles, float(t), grid)
        W = micro_energy_on_grid(params, u, ut, grid)
        approx = np.zeros_like(W)
        decayed = np.exp(-mum * t)[:, None, :] * HW0
        approx[mask] = np.einsum("rij,rsj->rsi", Lm, decayed)
        dens_sol = np.sum(np.abs(W) ** 2, axis=-1) * rho2s
        dens_ref = np.sum(np.abs(approx) ** 2, axis=-1) * rho2s
        dens_diff = np.sum(np.abs(W - approx) ** 2, axis=-1) * rho2s
        sol[k] = _localized_norm(grid, dens_sol, chi2)
        refn[k] = _localized_norm(grid, dens_ref, chi2)
        diff[k] = _localized_norm(grid, dens_diff, chi2)

    sol_slope, _ = _fit_loglog(ts, sol)
    diff_slope, diff_r2 = _fit_loglog(ts, diff)
    gap = predicted_gap(params.theta)
    denom = 1.0 - params.theta if params.theta < 0.5 else params.theta
    base = -(3.0 * (2.0 - m) + 2.0 * m * s) / (4.0 * m * denom)
    return GapMeasurement(
        s=float(s), m=float(m), window=(float(window[0]), float(window[1])),
        solution_slope=sol_slope, difference_slope=diff_slope,
        difference_r2=diff_r2, predicted_gap=gap,
        predicted_difference_slope=base - gap,
        measured_gap=sol_slope - diff_slope,
        times=ts, solution_norms=sol, reference_norms=refn,
        difference_norms=diff)


def double_diffusion_split(params, profiles, window, sample_count=20,
                           grid=None):
    """Separate decay fits for the two heat blocks of the reference flow.

    For theta in (0, 1/2) the reference splits into a block driven by
    |xi|^{2-2theta} (components 1-3) and a block driven by |xi|^{2theta}
    (components 4-6); the second decays slower.  Returns one slope fit
    per block for the chi_int-localized L2-type norm.
    """
    if not 0.0 < params.theta < 0.5:
        raise ValueError("the double-diffusion split needs theta in (0, 1/2)")
    ref = build_reference(params)
    if grid is None:
        grid = default_grid_for(profiles)
    zones = ZonePartition(params.epsilon)
    chi = zones.chi_int(grid.rho)
    chi2 = chi**2
    mask = chi > 0.0

    u0, ut0 = evolve_profiles_on_grid(params, profiles, 0.0, grid)
    W0 = micro_energy_on_grid(params, u0, ut0, grid)
    rho_m = grid.rho[mask]
    HW0 = np.einsum("rij,rsj->rsi", ref.H(rho_m), W0[mask])
    mum = ref.mu_tilde(rho_m)

    ts = np.geomspace(window[0], window[1], sample_count)
    blocks = (slice(0, 3), slice(3, 6))
    norms = np.zeros((2, sample_count))
    for k, t in enumerate(ts):
        Wt = np.exp(-mum * t)[:, None, :] * HW0
        for ib, blk in enumerate(blocks):
            dens = np.zeros((len(grid.rho), len(grid.w_sph)))
            dens[mask] = np.sum(np.abs(Wt[..., blk]) ** 2, axis=-1)
            norms[ib, k] = _localized_norm(grid, dens, chi2)
    if np.all(norms == 0.0):
        raise ValueError("reference flow vanishes; nothing to fit")
    fits = []
    for ib in range(2):
        slope, r2 = _fit_loglog(ts, norms[ib])
        fits.append({"block": ib + 1, "slope": slope, "r2": r2,
                     "norms": norms[ib], "times": ts})
    return fits[0], fits[1]
