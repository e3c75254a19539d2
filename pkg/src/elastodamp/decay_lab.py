"""Decay-rate predictions and measured slope fits for the linear flow.

Each estimate family maps data regularity (Sobolev order s, integrability
m in [1, 2]) to a power of (1 + t) bounding either the solution's L2 norm
or the energy norm sqrt(||u||_{Hdot^{s+1}}^2 + ||u_t||_{Hdot^s}^2).  The
measured counterpart evolves analytic data exactly and fits log norm
against log(1 + t).

The effect of L^m data regularity is realized by profiles whose Fourier
transform is flat near xi = 0; the sharp m = 1 family additionally lifts
u0 by |D|^{-1}, matching the data class for which the rates are attained.
"""

from dataclasses import dataclass

import numpy as np

from .model import DataProfile
from .propagator import default_grid_for, norm_quadrature

__all__ = [
    "EstimateKind",
    "DecayPrediction",
    "SlopeFit",
    "predicted_exponent",
    "rho_exponent",
    "sharp_data_pair",
    "measure_decay",
    "compare",
]

THEOREM_IDS = ("higher-energy-D22", "homogeneous", "additional-decay-D2m",
               "D21", "Dm1")
QUANTITIES = ("solution-L2", "energy")

DEFAULT_SLACK = 0.02


@dataclass(frozen=True)
class EstimateKind:
    theorem_id: str
    s: float = 0.0
    m: float = 2.0
    quantity: str = "energy"

    def __post_init__(self):
        if self.theorem_id not in THEOREM_IDS:
            raise ValueError("unknown theorem id %r" % (self.theorem_id,))
        if self.quantity not in QUANTITIES:
            raise ValueError("unknown quantity %r" % (self.quantity,))
        if self.s < 0.0:
            raise ValueError("s must be nonnegative")
        if not 1.0 <= self.m <= 2.0:
            raise ValueError("m must lie in [1, 2]")


@dataclass(frozen=True)
class DecayPrediction:
    exponent: float
    sharp: bool
    epsilon_slack: float


@dataclass(frozen=True)
class SlopeFit:
    window: tuple
    slope: float
    r2: float
    samples: int
    transient_warning: bool = False


def _max_theta(theta):
    return max(1.0 - theta, theta)


def rho_exponent(sigma_weight, m, theta, slack=0.0):
    """Almost-sharp decay weight rho for theta in [0, 1/2) and L^m data.

    sigma_weight selects the family: 0 for the solution rate with
    m in [1, 6/5), 1 for the solution rate with m in [6/5, 2), and s + 1
    for the energy rate.  The printed constraints are strict upper bounds;
    the returned value subtracts the slack.
    """
    if not 0.0 <= theta < 0.5:
        raise ValueError("rho exponents apply for theta in [0, 1/2)")
    if sigma_weight == 0.0:
        num_a = 6.0 - 5.0 * m + 2.0 * m * (1.0 - 2.0 * theta)
        num_b = 6.0 - 5.0 * m
    elif sigma_weight == 1.0:
        num_a = 6.0 - 3.0 * m + 2.0 * m * (1.0 - 2.0 * theta)
        num_b = 6.0 - 3.0 * m
    else:
        s = sigma_weight - 1.0
        num_a = 6.0 - 3.0 * m + 2.0 * s * m + 2.0 * m * (1.0 - 2.0 * theta)
        num_b = 6.0 - 3.0 * m + 2.0 * s * m
    bound_a = num_a / (4.0 * m * (1.0 - theta))
    bound_b = num_b / (4.0 * m * theta) if theta > 0.0 else np.inf
    return min(bound_a, bound_b) - slack


def predicted_exponent(kind, params, slack=DEFAULT_SLACK):
    """The family's decay exponent (power of 1 + t) for the parameters."""
    theta = params.theta
    mx = _max_theta(theta)
    s, m, q = kind.s, kind.m, kind.quantity
    tid = kind.theorem_id

    if tid == "higher-energy-D22":
        if q != "energy":
            raise ValueError("the D22 family states an energy estimate only")
        return DecayPrediction(-s / (2.0 * mx), True, 0.0)

    if tid == "homogeneous":
        if q != "energy":
            raise ValueError("the homogeneous family bounds the energy only")
        return DecayPrediction(0.0, True, 0.0)

    if tid == "additional-decay-D2m":
        if q == "solution-L2":
            if not m < 1.2:
                raise ValueError("solution-L2 needs m < 6/5")
            return DecayPrediction(-(6.0 - 5.0 * m) / (4.0 * m * mx),
                                   True, 0.0)
        if not m < 2.0:
            raise ValueError("the additional-decay energy rate needs m < 2")
        expo = -(3.0 * (2.0 - m) + 2.0 * m * s) / (4.0 * m * mx)
        return DecayPrediction(expo, True, 0.0)

    if tid == "D21":
        if q == "solution-L2":
            return DecayPrediction(1.0, True, 0.0)
        return DecayPrediction(-s / (2.0 * mx), True, 0.0)

    if tid == "Dm1":
        if theta >= 0.5:
            if q == "solution-L2":
                if m < 1.2:
                    return DecayPrediction(-(6.0 - 5.0 * m)
                                           / (4.0 * m * theta), True, 0.0)
                return DecayPrediction(1.0 - (6.0 - 3.0 * m)
                                       / (4.0 * m * theta), True, 0.0)
            expo = -(6.0 - 3.0 * m + 2.0 * s * m) / (4.0 * m * theta)
            return DecayPrediction(expo, True, 0.0)
        if q == "solution-L2":
            w = 0.0 if m < 1.2 else 1.0
            base = 0.0 if m < 1.2 else 1.0
            return DecayPrediction(base - rho_exponent(w, m, theta, slack),
                                   False, slack)
        return DecayPrediction(-rho_exponent(s + 1.0, m, theta, slack),
                               False, slack)

    raise ValueError("unknown theorem id %r" % (tid,))


def sharp_data_pair(width=1.0, amplitude=1.0, direction=(1.0, 0.0, 0.0)):
    """Data pair attaining the m = 1 rates: (|D|^{-1} g, g), g gaussian."""
    u0 = DataProfile(kind="gaussian", amplitude=amplitude, width=width,
                     direction=direction, lift=1.0)
    u1 = DataProfile(kind="gaussian", amplitude=amplitude, width=width,
                     direction=direction)
    return u0, u1


def measure_decay(kind, params, profiles, window=(1e2, 1e4),
                  sample_count=20, grid=None):
    """Least-squares slope of log norm against log(1 + t)."""
    t_lo, t_hi = window
    if not t_hi >= 10.0 * t_lo:
        raise ValueError("fit window must span at least one decade")
    if sample_count < 20:
        raise ValueError("need at least 20 samples")
    if grid is None:
        grid = default_grid_for(profiles)
    ts = np.geomspace(t_lo, t_hi, sample_count)
    if kind.quantity == "solution-L2":
        vals = [norm_quadrature(params, profiles, t, "L2", grid=grid)
                for t in ts]
    else:
        vals = [norm_quadrature(params, profiles, t, "energy", s=kind.s,
                                grid=grid) for t in ts]
    vals = np.asarray(vals)
    if np.all(vals == 0.0):
        raise ValueError("norm identically zero; nothing to fit")
    x = np.log(1.0 + ts)
    y = np.log(vals)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - np.sum(resid**2) / ss_tot if ss_tot > 0.0 else 0.0
    return SlopeFit(window=(float(t_lo), float(t_hi)), slope=float(slope),
                    r2=float(r2), samples=int(sample_count),
                    transient_warning=bool(r2 < 0.99))


def compare(kind, params, fit, tolerance=0.05):
    """Verdict of a measured slope against the predicted exponent.

    'consistent' means decay at least as fast as claimed (within the
    tolerance); decaying much faster than a sharp rate indicates a harness
    problem and is flagged, while beating a non-sharp bound is
    informational.
    """
    if fit.r2 < 0.99:
        raise ValueError("fit is transient-dominated (r2 < 0.99)")
    pred = predicted_exponent(kind, params)
    if fit.slope > pred.exponent + tolerance:
        return {"verdict": "too-slow", "predicted": pred.exponent,
                "fitted": fit.slope, "harness_bug": False}
    if fit.slope < pred.exponent - tolerance:
        return {"verdict": "faster-than-predicted",
                "predicted": pred.exponent, "fitted": fit.slope,
                "harness_bug": bool(pred.sharp)}
    return {"verdict": "consistent", "predicted": pred.exponent,
            "fitted": fit.slope, "harness_bug": False}
