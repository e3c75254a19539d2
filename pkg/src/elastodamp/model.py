"""Physical parameters, frequency-zone partition, and analytic initial data.

The model couples two wave speeds (squared shear speed a2, squared pressure
speed b2 with b2 > a2 > 0) with a fractional damping of order theta in [0,1].
The frequency space splits into three zones, small / bounded / large, via a
cutoff epsilon; the dispersion roots change character (heat-like vs wave-like)
across the zones, so epsilon is chosen to keep each zone inside one regime.

Fourier transform convention used everywhere in this package:

    u_hat(xi) = int exp(-i x.xi) u(x) dx,   inverse carries (2 pi)^{-3},

so Plancherel reads ||u||_{L2}^2 = (2 pi)^{-3} int |u_hat|^2 dxi.
"""

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ModelParams",
    "ZonePartition",
    "DataProfile",
    "make_params",
    "select_epsilon",
    "profile_fourier",
    "profile_l2_norm",
]


@dataclass(frozen=True)
class ModelParams:
    """Squared speeds, damping order and the zone cutoff."""

    a2: float
    b2: float
    theta: float
    epsilon: float

    @property
    def a(self):
        return float(np.sqrt(self.a2))

    @property
    def b(self):
        return float(np.sqrt(self.b2))


def select_epsilon(a2, b2, theta):
    """Zone cutoff guaranteeing uniform root regimes on each zone.

    For theta < 1/2 the small zone must be heat-like (discriminant
    |xi|^{4 theta} - 4 y^2 |xi|^2 >= |xi|^{4 theta}/2 for both speeds) and the
    large zone wave-like (4 y^2 |xi|^2 >= 2 |xi|^{4 theta}); for theta > 1/2
    the roles of the zones swap.  Solving both margins for the worst speed and
    capping at 1/2 and at 1/(4a) (the latter keeps the middle-zone Lyapunov
    sandwich constants valid) gives the rule below.  theta = 1/2 is scale
    invariant and takes a fixed default.
    """
    a = np.sqrt(a2)
    cap = min(0.5, 1.0 / (4.0 * a))
    if abs(theta - 0.5) < 1e-14:
        return float(min(0.1, cap))

    def powc(base, expo):
        # overflow-safe power; near theta = 1/2 the exponent diverges and
        # the corresponding margin stops binding, so +inf is the right limit
        log_val = expo * np.log(base)
        return np.inf if log_val > 700.0 else float(np.exp(log_val))

    power = abs(2.0 - 4.0 * theta)
    eps = min(powc(8.0 * b2, -1.0 / power), powc(2.0 * a2, 1.0 / power))
    # near theta = 1/2 the margins collapse and the rule degenerates to an
    # arbitrarily thin small/large zone; floor the cutoff to keep it usable
    return float(max(min(eps, cap), 1e-12))


def make_params(a2, b2, theta, epsilon=None):
    """Validate the configuration and auto-select the zone cutoff."""
    if not a2 > 0.0:
        raise ValueError("a2 must be positive")
    if not b2 > a2:
        raise ValueError("b2 must exceed a2")
    if not 0.0 <= theta <= 1.0:
        raise ValueError("theta must lie in [0, 1]")
    if epsilon is None:
        epsilon = select_epsilon(a2, b2, theta)
    if not epsilon > 0.0:
        raise ValueError("epsilon must be positive")
    return ModelParams(a2=float(a2), b2=float(b2), theta=float(theta),
                       epsilon=float(epsilon))


def _bump_transition(t):
    """Smooth monotone transition, 1 at t<=0 and 0 at t>=1, C-infinity.

    Built from the standard bump exp(1 - 1/(1 - t^2)) evaluated on [0, 1).
    """
    t = np.asarray(t, dtype=float)
    out = np.zeros(t.shape)
    out[t <= 0.0] = 1.0
    inside = (t > 0.0) & (t < 1.0)
    ti = t[inside]
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - ti**2))
    return out


@dataclass(frozen=True)
class ZonePartition:
    """Smooth radial partition of unity subordinate to the three zones."""

    epsilon: float

    def chi_int(self, r):
        r = np.asarray(r, dtype=float)
        eps = self.epsilon
        return _bump_transition((r - eps / 2.0) / (eps / 2.0))

    def chi_ext(self, r):
        r = np.asarray(r, dtype=float)
        eps = self.epsilon
        return 1.0 - _bump_transition((r - 1.0 / eps) * eps)

    def chi_mid(self, r):
        return 1.0 - self.chi_int(r) - self.chi_ext(r)


@dataclass(frozen=True)
class DataProfile:
    """Vector-valued initial datum with a closed-form Fourier transform.

    kind 'gaussian':  u(x) = A exp(-|x|^2 / (2 w^2)) d
    kind 'modulated-gaussian':  the gaussian modulated by cos(k0 d_hat . x)
    kind 'ring':  defined spectrally, u_hat concentrated on |xi| = k0

    The optional spectral lift multiplies u_hat by |xi|^{-lift}; lift = 1
    realizes data of the form |D|^{-1} g, whose transform is flat relative to
    g near xi = 0 in the way the sharp low-frequency estimates require.
    """

    kind: str = "gaussian"
    amplitude: float = 1.0
    width: float = 1.0
    center_frequency: float = 0.0
    direction: tuple = (1.0, 0.0, 0.0)
    lift: float = 0.0

    def __post_init__(self):
        if self.kind not in ("gaussian", "modulated-gaussian", "ring"):
            raise ValueError("unknown profile kind %r" % (self.kind,))
        if not self.width > 0.0:
            raise ValueError("width must be positive")
        d = np.asarray(self.direction, dtype=float)
        n = np.linalg.norm(d)
        if not n > 0.0:
            raise ValueError("direction must be nonzero")
        object.__setattr__(self, "direction", tuple(d / n))


def _radial_fourier(profile, rho, xi=None):
    """Scalar factor of the profile transform as a function of frequency."""
    A = profile.amplitude
    w = profile.width
    k0 = profile.center_frequency
    scale = A * (2.0 * np.pi) ** 1.5 * w**3
    if profile.kind == "gaussian":
        return scale * np.exp(-0.5 * w**2 * rho**2)
    if profile.kind == "ring":
        return scale * np.exp(-0.5 * w**2 * (rho - k0) ** 2)
    # modulated gaussian: half-sum of two shifted gaussians along direction
    d = np.asarray(profile.direction)
    if xi is None:
        xi = rho[..., None] * d  # degenerate use on the ray through d
    shift_sq_p = np.sum((xi - k0 * d) ** 2, axis=-1)
    shift_sq_m = np.sum((xi + k0 * d) ** 2, axis=-1)
    return 0.5 * scale * (np.exp(-0.5 * w**2 * shift_sq_p)
                          + np.exp(-0.5 * w**2 * shift_sq_m))


def profile_fourier(profile, xi):
    """Exact Fourier transform of the profile, evaluated at frequencies xi.

    xi has shape (..., 3); the result has the same shape, the vector factor
    being the profile direction.
    """
    xi = np.asarray(xi, dtype=float)
    rho = np.sqrt(np.sum(xi**2, axis=-1))
    f = _radial_fourier(profile, rho, xi=xi)
    if profile.lift != 0.0:
        with np.errstate(divide="ignore"):
            factor = np.where(rho > 0.0, rho, 1.0) ** (-profile.lift)
        f = np.where(rho > 0.0, f * factor, 0.0)
    d = np.asarray(profile.direction)
    return f[..., None] * d


def profile_l2_norm(profile):
    """Analytic L2 norm, available for the unlifted gaussian family."""
    if profile.kind != "gaussian" or profile.lift != 0.0:
        raise ValueError("analytic norm only for plain gaussian profiles")
    return abs(profile.amplitude) * profile.width**1.5 * np.pi**0.75
