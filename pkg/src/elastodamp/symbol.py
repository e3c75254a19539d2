"""Fourier-symbol matrices, exact dispersion roots, and their expansions.

Per frequency direction eta the elastic operator acts through

    A(eta) = a2 I + (b2 - a2) eta eta^T,

with eigenvalues (a2, a2, b2).  After decoupling, each scalar mode satisfies
v_tt + |xi|^{2 theta} v_t + y^2 |xi|^2 v = 0 with y in {a, b}, so the decay
exponents are the roots of

    mu^2 - |xi|^{2 theta} mu + y^2 |xi|^2 = 0       (solutions behave as e^{-mu t}).

This quadratic is the oracle against which all closed-form expansions are
checked.  The first-order 6x6 formulation carries the constant matrices B0
(rank-one coupling of the two energy halves) and B1 (signed speeds); at
theta = 1/2 both zone scalings coincide and the symbol develops Jordan
blocks.
"""

from dataclasses import dataclass

import numpy as np

__all__ = [
    "SymbolMatrices",
    "ModeRoots",
    "AsymptoticEigs",
    "JordanSpectrum",
    "build_symbol",
    "exact_mode_roots",
    "zcorr",
    "asymptotic_eigs",
    "asymptotic_error_order",
    "jordan_spectrum",
    "jordan_mode_solution",
    "gevrey_probe",
    "validate_M_eta",
]

DEGENERATE_RTOL = 1e-12
JORDAN_CASE_TOL = 1e-10


def _b0():
    I3 = np.eye(3)
    return np.block([[I3, I3], [I3, I3]])


def _b1(a, b):
    return np.diag([a, a, b, -a, -a, -b]).astype(float)


@dataclass(frozen=True)
class SymbolMatrices:
    """The 3x3 elastic symbol and the constant 6x6 first-order matrices."""

    A_eta: np.ndarray
    B0: np.ndarray
    B1: np.ndarray
    theta: float
    eta: np.ndarray

    def coefficient(self, xi_norm):
        """Right-hand-side matrix -(i/2)|xi|^{2 theta} B0 - |xi| B1."""
        rho = float(xi_norm)
        return (-0.5j * rho ** (2.0 * self.theta)) * self.B0 - rho * self.B1

    def projector_longitudinal(self):
        return np.outer(self.eta, self.eta)

    def projector_transverse(self):
        return np.eye(3) - np.outer(self.eta, self.eta)


def build_symbol(params, eta):
    """Assemble A(eta), B0, B1 for a unit direction eta."""
    eta = np.asarray(eta, dtype=float)
    if abs(np.linalg.norm(eta) - 1.0) > 1e-12:
        raise ValueError("eta must be a unit vector")
    A = params.a2 * np.eye(3) + (params.b2 - params.a2) * np.outer(eta, eta)
    return SymbolMatrices(A_eta=A, B0=_b0(), B1=_b1(params.a, params.b),
                          theta=params.theta, eta=eta)


@dataclass(frozen=True)
class ModeRoots:
    """Decay-form roots of one scalar dispersion branch."""

    speed2: float
    mu_plus: complex
    mu_minus: complex
    degenerate: bool

    @property
    def roots(self):
        return (self.mu_plus, self.mu_minus)


def exact_mode_roots(params, speed2, xi_norm):
    """Stable roots of mu^2 - |xi|^{2 theta} mu + y^2 |xi|^2 = 0.

    mu_plus is the root of larger modulus (real case) or the one with
    positive imaginary part (conjugate case).  The small real root is
    recovered from the product to avoid cancellation.
    """
    rho = float(xi_norm)
    if rho < 0.0:
        raise ValueError("xi_norm must be nonnegative")
    if rho == 0.0:
        return ModeRoots(speed2=speed2, mu_plus=0.0 + 0.0j,
                         mu_minus=0.0 + 0.0j, degenerate=True)
    p = rho ** (2.0 * params.theta)
    q = speed2 * rho**2
    disc = p * p - 4.0 * q
    degenerate = abs(disc) <= DEGENERATE_RTOL * max(p * p, 4.0 * q)
    if degenerate:
        mu = 0.5 * p + 0.0j
        return ModeRoots(speed2=speed2, mu_plus=mu, mu_minus=mu,
                         degenerate=True)
    if disc > 0.0:
        big = 0.5 * (p + np.sqrt(disc))
        small = q / big
        return ModeRoots(speed2=speed2, mu_plus=complex(big),
                         mu_minus=complex(small), degenerate=False)
    im = 0.5 * np.sqrt(-disc)
    return ModeRoots(speed2=speed2, mu_plus=complex(0.5 * p, im),
                     mu_minus=complex(0.5 * p, -im), degenerate=False)


def zcorr(params, rho, dtype=complex):
    """Correction terms z1(y), z6(y) and z2..z5 of the expansions.

    Computed at scalar or array frequency rho; returns a dict with keys
    'z1a', 'z1b', 'z6a', 'z6b', 'z2', 'z3', 'z4', 'z5'.
    """
    rho = np.asarray(rho, dtype=np.longdouble if dtype is not complex
                     else float)
    th = params.theta
    a2, b2 = params.a2, params.b2
    r24 = rho ** (2.0 - 4.0 * th)
    r22 = rho ** (2.0 - 2.0 * th)
    r2t = rho ** (2.0 * th)
    r4t = rho ** (4.0 * th)

    def z6(y2):
        return y2 ** 1.5 * rho ** (3.0 - 4.0 * th) / (1.0 - y2 * r24)

    def z1(y2):
        return 1j * y2**2 * rho ** (4.0 - 6.0 * th) / (1.0 - y2 * r24)

    z6a, z6b = z6(a2), z6(b2)
    z1a, z1b = z1(a2), z1(b2)
    Da = r4t - z6a**2
    Db = r4t - z6b**2
    z2 = (1j * (a2 + b2) * z6a**2 * r22 + 2.0 * z1a * z6a**2
          + 1j * r2t * z6a**2) / Da
    z3 = (2j * a2 * r22 * z6a**2 + 1j * r2t * z6a**2
          + 2.0 * z1a * z6a**2) / Da
    z4 = (1j * r2t * z6b**2 + z6b**3 + z1b * z6b**2
          - 1j * (a2 + b2) * r22 * z6b**2) / Db
    z5 = (2.0 * z1b * z6b**2 + 1j * r2t * z6b**2
          + 1j * (a2 + b2) * r22 * z6b**2) / Db
    return {"z1a": z1a, "z1b": z1b, "z6a": z6a, "z6b": z6b,
            "z2": z2, "z3": z3, "z4": z4, "z5": z5}


@dataclass(frozen=True)
class AsymptoticEigs:
    """Six closed-form decay exponents with their guaranteed error order."""

    mu: tuple
    remainder_order: float
    regime: str


def _regime(theta, zone):
    if zone not in ("int", "ext"):
        raise ValueError("zone must be 'int' or 'ext'")
    if abs(theta - 0.5) < 1e-14:
        raise ValueError("theta = 1/2 has a Jordan structure; "
                         "use jordan_spectrum")
    name = "small" if zone == "int" else "large"
    half = "lt-half" if theta < 0.5 else "gt-half"
    return "%s-theta-%s" % (name, half)


def _parabolic_mus(params, rho):
    th = params.theta
    a2, b2 = params.a2, params.b2
    z = zcorr(params, rho)
    r22 = rho ** (2.0 - 2.0 * th)
    r2t = rho ** (2.0 * th)
    small = (a2 * r22 - 1j * z["z1a"] - 1j * z["z2"],
             a2 * r22 - 1j * z["z1a"] - 1j * z["z3"],
             b2 * r22 - 1j * z["z1b"] - 1j * z["z4"])
    large = (r2t - a2 * r22 + 1j * z["z1a"] + 1j * z["z2"],
             r2t - a2 * r22 + 1j * z["z1a"] + 1j * z["z3"],
             r2t - b2 * r22 + 1j * z["z1b"] + 1j * z["z5"])
    # order (a, a, b | a, a, b)
    return small + large


def _oscillatory_mus(params, rho):
    th = params.theta
    half = 0.5 * rho ** (2.0 * th)
    corr = rho ** (4.0 * th - 1.0) / 8.0
    mus = []
    for y in (params.a, params.a, params.b):
        mus.append(half - 1j * y * rho + 1j * corr / y)
    for y in (params.a, params.a, params.b):
        mus.append(half + 1j * y * rho - 1j * corr / y)
    return tuple(mus)


def asymptotic_eigs(params, xi_norm, zone):
    """Closed-form six-root expansion valid on the requested zone.

    Heat-like regimes (small frequencies for theta < 1/2, large frequencies
    for theta > 1/2) use the z-corrected parabolic listing with remainder
    order 7 - 12 theta; wave-like regimes use three conjugate pairs with
    remainder order 6 theta - 2.  Correctness against the exact roots is
    set-valued per speed group: the printed index order interleaves the two
    speeds, so tests match sets, never positions.
    """
    rho = float(xi_norm)
    reg = _regime(params.theta, zone)
    if zone == "int" and not rho < params.epsilon:
        raise ValueError("interior expansion needs |xi| < epsilon")
    if zone == "ext" and not rho > 1.0 / params.epsilon:
        raise ValueError("exterior expansion needs |xi| > 1/epsilon")
    parabolic = (params.theta < 0.5) == (zone == "int")
    if parabolic:
        mu = _parabolic_mus(params, rho)
        order = 7.0 - 12.0 * params.theta
    else:
        mu = _oscillatory_mus(params, rho)
        order = 6.0 * params.theta - 2.0
    mu = tuple(complex(v) for v in mu)
    return AsymptoticEigs(mu=mu, remainder_order=order, regime=reg)


def _branch_errors_parabolic(params, speed2, rho, which):
    """Cancellation-safe expansion errors for one speed on one zone.

    Evaluation runs in extended precision.  The error of the large root is
    measured in the frame shifted by |xi|^{2 theta}: since the exact roots
    sum to |xi|^{2 theta} exactly, the large-root error equals
    |(mu_large_asym - |xi|^{2 theta}) + mu_small_exact|, which avoids
    subtracting two nearly equal large numbers.
    """
    rho = np.asarray(rho, dtype=np.longdouble)
    th = np.longdouble(params.theta)
    y2 = np.longdouble(speed2)
    p = rho ** (2.0 * th)
    q = y2 * rho**2
    disc = p * p - 4.0 * q
    big = 0.5 * (p + np.sqrt(disc))
    small = q / big

    z = zcorr(params, rho, dtype=np.clongdouble)
    r22 = rho ** (2.0 - 2.0 * th)
    if which == "a":
        cands_small = (y2 * r22 - 1j * z["z1a"] - 1j * z["z2"],
                       y2 * r22 - 1j * z["z1a"] - 1j * z["z3"])
        cands_large_shift = (-y2 * r22 + 1j * z["z1a"] + 1j * z["z2"],
                             -y2 * r22 + 1j * z["z1a"] + 1j * z["z3"])
    else:
        cands_small = (y2 * r22 - 1j * z["z1b"] - 1j * z["z4"],)
        cands_large_shift = (-y2 * r22 + 1j * z["z1b"] + 1j * z["z5"],)
    err_small = np.min([np.abs(c - small) for c in cands_small], axis=0)
    err_large = np.min([np.abs(c + small) for c in cands_large_shift], axis=0)
    return np.maximum(err_small, err_large)


def _branch_errors_oscillatory(params, speed2, rho):
    """Imaginary-part errors for the conjugate-pair expansion.

    Both exact and expanded roots share the real part |xi|^{2 theta}/2
    exactly, so the expansion error lives in the imaginary part alone.
    """
    rho = np.asarray(rho, dtype=np.longdouble)
    th = np.longdouble(params.theta)
    y = np.sqrt(np.longdouble(speed2))
    p = rho ** (2.0 * th)
    q = np.longdouble(speed2) * rho**2
    disc = 4.0 * q - p * p
    im_exact = 0.5 * np.sqrt(disc)
    im_asym = y * rho - rho ** (4.0 * th - 1.0) / (8.0 * y)
    return np.abs(im_asym - im_exact)


def asymptotic_error_order(params, zone, speed2, samples):
    """Log-log slope of the expansion error over the given frequencies.

    samples must be a geometric sequence spanning at least two decades
    inside the requested zone.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.size < 4:
        raise ValueError("need at least 4 samples")
    span = samples.max() / samples.min()
    if span < 99.0:
        raise ValueError("samples must span at least two decades")
    if zone == "int" and samples.max() >= params.epsilon:
        raise ValueError("samples leave the interior zone")
    if zone == "ext" and samples.min() <= 1.0 / params.epsilon:
        raise ValueError("samples leave the exterior zone")
    parabolic = (params.theta < 0.5) == (zone == "int")
    which = "a" if abs(speed2 - params.a2) < abs(speed2 - params.b2) else "b"
    if parabolic:
        err = _branch_errors_parabolic(params, speed2, samples, which)
    else:
        err = _branch_errors_oscillatory(params, speed2, samples)
    err = np.asarray(err, dtype=float)
    good = err > 0.0
    if good.sum() < 4:
        raise ValueError("expansion error below floating-point resolution")
    slope = np.polyfit(np.log(samples[good]), np.log(err[good]), 1)[0]
    return float(slope)


@dataclass(frozen=True)
class JordanSpectrum:
    """Eigenvalues and block structure of (i/2) B0 + B1 at theta = 1/2.

    blocks is a tuple of (eigenvalue, size) pairs summing to dimension 6;
    chains are ordered head first, so a size-n block evolves the states
    W_j(t) = e^{i |xi| lambda t} sum_k (i |xi| t)^k / k!  W0_{j+k}.
    """

    a2: float
    b2: float
    lambdas: tuple
    blocks: tuple
    polynomial_degree: int
    case: str


def _half_eigs(y2):
    """Eigenvalues lambda with lambda^2 - i lambda - y2 = 0."""
    if y2 < 0.25:
        r = np.sqrt(1.0 - 4.0 * y2)
        return (0.5 + 0.5 * r) * 1j, (0.5 - 0.5 * r) * 1j
    r = 0.5 * np.sqrt(4.0 * y2 - 1.0)
    return r + 0.5j, -r + 0.5j


def jordan_spectrum(params):
    """Three-case Jordan analysis of the theta = 1/2 symbol."""
    if abs(params.theta - 0.5) > 1e-14:
        raise ValueError("jordan_spectrum requires theta = 1/2")
    a2, b2 = params.a2, params.b2
    la1, la2 = _half_eigs(a2)
    lb1, lb2 = _half_eigs(b2)
    if abs(a2 - 0.25) <= JORDAN_CASE_TOL:
        blocks = ((0.5j, 4), (lb1, 1), (lb2, 1))
        case = "a2-quarter"
        degree = 3
        lambdas = (0.5j, lb1, lb2)
    elif abs(b2 - 0.25) <= JORDAN_CASE_TOL:
        blocks = ((la1, 2), (la2, 2), (0.5j, 2))
        case = "b2-quarter"
        degree = 1
        lambdas = (la1, la2, 0.5j)
    else:
        blocks = ((la1, 2), (la2, 2), (lb1, 1), (lb2, 1))
        case = "generic"
        degree = 1
        lambdas = (la1, la2, lb1, lb2)
    return JordanSpectrum(a2=a2, b2=b2, lambdas=lambdas, blocks=blocks,
                          polynomial_degree=degree, case=case)


def jordan_mode_solution(spec, xi_norm, W0, t):
    """Evolve a 6-vector through the block-diagonal Jordan flow.

    W0 is given in the Jordan frame, components grouped by block in the
    order of spec.blocks with each chain head first.
    """
    W0 = np.asarray(getattr(W0, "W", W0), dtype=complex)
    if W0.shape != (6,):
        raise ValueError("W0 must be a 6-vector")
    rho = float(xi_norm)
    out = np.zeros(6, dtype=complex)
    z = 1j * rho * t
    offset = 0
    for lam, size in spec.blocks:
        phase = np.exp(1j * rho * lam * t)
        for j in range(size):
            acc = 0.0 + 0.0j
            term = 1.0 + 0.0j
            for k in range(size - j):
                acc += term * W0[offset + j + k]
                term = term * z / (k + 1)
            out[offset + j] = phase * acc
        offset += size
    return out


def gevrey_probe(params, xi_samples, zone="ext"):
    """Fitted growth order of the spectral gap at large frequencies.

    min_l Re mu_l(|xi|) ~ c |xi|^{kappa'} determines the smoothing class;
    the fitted kappa' should match 2 min(theta, 1 - theta), with kappa' = 1
    at theta = 1/2.
    """
    if zone != "ext":
        raise ValueError("the smoothing probe runs on the exterior zone")
    xi_samples = np.asarray(xi_samples, dtype=float)
    gaps = []
    for rho in xi_samples:
        res = []
        for y2 in (params.a2, params.b2):
            r = exact_mode_roots(params, y2, rho)
            res.extend([r.mu_plus.real, r.mu_minus.real])
        gaps.append(min(res))
    gaps = np.asarray(gaps)
    slope = np.polyfit(np.log(xi_samples), np.log(gaps), 1)[0]
    return float(slope)


def validate_M_eta(params, eta):
    """Residual of the coordinate-chart diagonalizer of A(eta).

    M(eta) is the printed chart with columns spanning the two transverse
    directions and the radial one; it is singular where eta_1 or eta_3
    vanish, so it is kept only as a validation device.
    """
    eta = np.asarray(eta, dtype=float)
    if abs(np.linalg.norm(eta) - 1.0) > 1e-12:
        raise ValueError("eta must be a unit vector")
    e1, e2, e3 = eta
    if abs(e1) < 1e-6 or abs(e3) < 1e-6:
        raise ValueError("M(eta) is singular near eta_1 = 0 or eta_3 = 0")
    M = np.array([[-e2 / e1, -e3 / e1, e1 / e3],
                  [1.0, 0.0, e2 / e3],
                  [0.0, 1.0, 1.0]])
    A = params.a2 * np.eye(3) + (params.b2 - params.a2) * np.outer(eta, eta)
    D = np.linalg.solve(M, A @ M)
    target = np.diag([params.a2, params.a2, params.b2])
    return float(np.max(np.abs(D - target)))
