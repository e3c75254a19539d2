"""Exponent calculus for the weakly coupled semilinear system.

The nonlinearity F(U) = (|U3|^p1, |U1|^p2, |U2|^p3) couples the three
components cyclically.  Global existence of small data solutions is governed
by a critical exponent p_c (or a balanced exponent p_bal when the data
regularity trades against integrability), by the derived parameters alpha_k
and alpha_tilde_k, and by loss-of-decay parameters g_k compensating one or
two sub-threshold powers.
"""

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ExponentTriple",
    "ExponentReport",
    "critical_exponent",
    "balanced_exponent",
    "alpha",
    "alpha_tilde",
    "alpha_balanced",
    "alpha_tilde_balanced",
    "classify_and_g",
    "gn_admissible",
    "pick_gn_parameters",
]

# Cyclic rotations (k1, k2, k3) of (1, 2, 3), one-based.
_ROTATIONS = ((1, 2, 3), (2, 3, 1), (3, 1, 2))

# Loss assigned to an exponent sitting exactly on its threshold.
DEFAULT_EPS1 = 1e-3


@dataclass(frozen=True)
class ExponentTriple:
    p1: float
    p2: float
    p3: float

    def __post_init__(self):
        for p in (self.p1, self.p2, self.p3):
            if not p > 1.0:
                raise ValueError("all exponents must exceed 1")

    def __getitem__(self, k):
        """Cyclic one-based access: p[k] with k wrapping modulo 3."""
        return (self.p1, self.p2, self.p3)[(k - 1) % 3]

    def as_tuple(self):
        return (self.p1, self.p2, self.p3)


def critical_exponent(m, theta):
    """p_c(m, theta) = 1 + m(2 theta + 1)/(3 - m)."""
    if not (1.0 <= m < 1.2):
        raise ValueError("critical exponent requires m in [1, 6/5)")
    if not (0.5 <= theta <= 1.0):
        raise ValueError("critical exponent requires theta in [1/2, 1]")
    return 1.0 + m * (2.0 * theta + 1.0) / (3.0 - m)


def balanced_exponent(m, s, theta):
    """Balanced exponent p_bal in the two regimes where it is defined."""
    if abs(m - 1.5) < 1e-12 and 0.0 <= s < 0.5 and 0.0 <= theta < 0.5:
        return 2.0 + (2.0 + 4.0 * s * (1.0 - theta)) / (5.0 - 6.0 * theta + 2.0 * s)
    if 1.2 <= m < 1.5 and s == 0.0 and 0.5 <= theta <= 1.0:
        return 2.0 + 6.0 * (m - 2.0 + 2.0 * theta) / (2.0 * m * theta - 3.0 * m + 6.0)
    raise ValueError("balanced exponent undefined for (m, s, theta) = (%r, %r, %r)"
                     % (m, s, theta))


def alpha(k, triple, m, theta):
    """alpha_k = m (2 th + (1+2 th) p_{k+1} + p_k p_{k+1}) / (2 (p_k p_{k+1} - 1))."""
    pk = triple[k]
    pk1 = triple[k + 1]
    num = 2.0 * theta + (1.0 + 2.0 * theta) * pk1 + pk * pk1
    return m * num / (2.0 * (pk * pk1 - 1.0))


def alpha_tilde(k, triple, m, theta):
    """Three-factor variant entering the two-losses case."""
    pk1 = triple[k + 1]
    pk2 = triple[k + 2]
    prod = triple.p1 * triple.p2 * triple.p3
    num = 2.0 * theta + (1.0 + 2.0 * theta) * (pk1 + 1.0) * pk2 + prod
    return m * num / (2.0 * (prod - 1.0))


def _bal_coeffs(m, s, theta):
    """Numerator coefficients (c0, c1, c2) of the balanced alpha variants.

    alpha_bal has numerator c0 + c1 * p_{k+1} - c2 * p_k p_{k+1};
    alpha_tilde_bal replaces p_{k+1} by (p_{k+1}+1) p_{k+2} and the product
    by p1 p2 p3.
    """
    if abs(m - 1.5) < 1e-12 and theta < 0.5:
        c0 = 9.0 - 12.0 * theta + 4.0 * s * (2.0 - theta)
        c1 = (7.0 - 6.0 * theta) + 2.0 * s * (3.0 - 2.0 * theta)
        c2 = (2.0 - 6.0 * theta) + 2.0 * s
        return c0, c1, c2
    if 1.2 <= m < 1.5 and s == 0.0 and theta >= 0.5:
        c0 = 4.0 * m * theta + 12.0 * theta - 3.0
        c1 = 2.0 * m * theta + 12.0 * theta + 3.0 * m - 6.0
        c2 = 2.0 * m * theta - 3.0 * m + 3.0
        return c0, c1, c2
    raise ValueError("balanced parameters undefined for this (m, s, theta)")


def alpha_balanced(k, triple, m, s, theta):
    c0, c1, c2 = _bal_coeffs(m, s, theta)
    pk = triple[k]
    pk1 = triple[k + 1]
    return (c0 + c1 * pk1 - c2 * pk * pk1) / (2.0 * (pk * pk1 - 1.0))


def alpha_tilde_balanced(k, triple, m, s, theta):
    c0, c1, c2 = _bal_coeffs(m, s, theta)
    pk1 = triple[k + 1]
    pk2 = triple[k + 2]
    prod = triple.p1 * triple.p2 * triple.p3
    return (c0 + c1 * (pk1 + 1.0) * pk2 - c2 * prod) / (2.0 * (prod - 1.0))


def _g_one_loss(regime, p_k1, m, s, theta):
    """Loss of decay for a single sub-threshold exponent p_{k1}."""
    if regime == "cri":
        return (3.0 + 2.0 * m * theta) / (2.0 * m * theta) \
            - (3.0 - m) / (2.0 * m * theta) * p_k1
    if regime == "bal-m-0":
        return (m + 3.0) / m \
            - (0.5 + (6.0 - 3.0 * m) / (4.0 * m * theta)) * p_k1
    if regime == "bal-3/2-s":
        den = (1.0 - theta) * (s + 1.0)
        return 1.0 + (2.0 - 2.0 * theta + s) / den \
            + (6.0 * theta - 5.0 - 2.0 * s) / (4.0 * den) * p_k1
    raise ValueError("unknown regime %r" % (regime,))


def _g_two_losses(regime, p_k1, p_k2, m, s, theta):
    """Loss of decay for the second sub-threshold exponent p_{k2}."""
    if regime == "cri":
        return (3.0 + 2.0 * m * theta) / (2.0 * m * theta) \
            + (1.0 + 2.0 * theta) / (2.0 * theta) * p_k2 \
            - (3.0 - m) / (2.0 * m * theta) * p_k1 * p_k2
    if regime == "bal-m-0":
        q = (6.0 - 3.0 * m) / (4.0 * m * theta)
        return (m + 3.0) / m - (q - 0.5 - 3.0 / m) * p_k2 \
            - (0.5 + q) * p_k1 * p_k2
    if regime == "bal-3/2-s":
        den = (1.0 - theta) * (s + 1.0)
        return 1.0 + (2.0 - 2.0 * theta + s) / den \
            + (1.0 + (3.0 + 2.0 * s - 2.0 * theta) / (4.0 * den)) * p_k2 \
            + (6.0 * theta - 5.0 - 2.0 * s) / (4.0 * den) * p_k1 * p_k2
    raise ValueError("unknown regime %r" % (regime,))


def _threshold(regime, m, s, theta):
    if regime == "cri":
        return critical_exponent(m, theta)
    return balanced_exponent(m, s, theta)


def _alpha_condition(regime, k, triple, m, s, theta):
    """The smallness condition admitting one loss on component k."""
    if regime == "cri":
        return alpha(k, triple, m, theta) < 1.5
    return alpha_balanced(k, triple, m, s, theta) < 1.5


def _alpha_tilde_condition(regime, k, triple, m, s, theta):
    if regime == "cri":
        return alpha_tilde(k, triple, m, theta) < 1.5
    return alpha_tilde_balanced(k, triple, m, s, theta) < 1.5


@dataclass(frozen=True)
class ExponentReport:
    triple: ExponentTriple
    m: float
    s: float
    theta: float
    regime: str
    threshold: float
    alpha: tuple
    alpha_tilde: tuple
    case: str
    g: tuple
    admissible_window: tuple
    rotation: tuple = (1, 2, 3)


def classify_and_g(triple, m, s, theta, regime, eps1=DEFAULT_EPS1,
                   boundary_tol=1e-12):
    """Classify the triple into case (i)/(ii)/(iii) and compute losses g_k.

    The classification scans the three cyclic rotations (k1, k2, k3) of
    (1, 2, 3):  case i has no exponent below the threshold, case ii exactly
    one (at position k1, requiring alpha_{k1} < 3/2), case iii two
    consecutive ones (at k1 and k2, requiring alpha_tilde_{k1} < 3/2).
    Exponents exactly on the threshold are charged the small loss eps1.
    Patterns covered by no case yield 'inadmissible'.
    """
    if not isinstance(triple, ExponentTriple):
        triple = ExponentTriple(*triple)
    thr = _threshold(regime, m, s, theta)
    if regime == "cri":
        alphas = tuple(alpha(k, triple, m, theta) for k in (1, 2, 3))
        alphas_t = tuple(alpha_tilde(k, triple, m, theta) for k in (1, 2, 3))
    else:
        alphas = tuple(alpha_balanced(k, triple, m, s, theta) for k in (1, 2, 3))
        alphas_t = tuple(alpha_tilde_balanced(k, triple, m, s, theta)
                         for k in (1, 2, 3))
    window = gn_admissible(triple, m, s)["window"]

    def make(case, g, rotation):
        return ExponentReport(triple=triple, m=m, s=s, theta=theta,
                              regime=regime, threshold=thr, alpha=alphas,
                              alpha_tilde=alphas_t, case=case, g=tuple(g),
                              admissible_window=window, rotation=rotation)

    ps = triple.as_tuple()
    below = [p < thr - boundary_tol for p in ps]
    on_boundary = [abs(p - thr) <= boundary_tol for p in ps]
    n_below = sum(below)

    if n_below == 0:
        g = [eps1 if ob else 0.0 for ob in on_boundary]
        return make("i", g, (1, 2, 3))
    if n_below == 1:
        k1 = below.index(True) + 1
        rotation = _ROTATIONS[k1 - 1]
        if not _alpha_condition(regime, k1, triple, m, s, theta):
            return make("inadmissible", (np.nan,) * 3, rotation)
        g = [eps1 if ob else 0.0 for ob in on_boundary]
        g[k1 - 1] = _g_one_loss(regime, triple[k1], m, s, theta)
        return make("ii", g, rotation)
    if n_below == 2:
        # the two sub-threshold positions are cyclically consecutive; pick
        # the rotation whose (k1, k2) covers them
        k3 = below.index(False) + 1
        rotation = _ROTATIONS[k3 % 3]  # rotation starting right after k3
        k1, k2 = rotation[0], rotation[1]
        if not _alpha_tilde_condition(regime, k1, triple, m, s, theta):
            return make("inadmissible", (np.nan,) * 3, rotation)
        g = [0.0, 0.0, 0.0]
        g[k1 - 1] = _g_one_loss(regime, triple[k1], m, s, theta)
        g[k2 - 1] = _g_two_losses(regime, triple[k1], triple[k2], m, s, theta)
        if on_boundary[k3 - 1]:
            g[k3 - 1] = eps1
        return make("iii", g, rotation)
    return make("inadmissible", (np.nan,) * 3, (1, 2, 3))


def gn_admissible(triple, m, s):
    """Admissibility window for the powers imposed by Gagliardo-Nirenberg.

    s = 0:               p in [2/m, 3]
    0 < s < 1/2:         p in (1 + ceil(s), 1 + 2/(1 - 2 s)]
    1/2 <= s <= 3/2:     p > 1 + ceil(s)     (no finite upper bound)
    s > 3/2:             p > 1 + s           (no finite upper bound)
    """
    if not isinstance(triple, ExponentTriple):
        triple = ExponentTriple(*triple)
    if s == 0.0:
        lo, hi = 2.0 / m, 3.0
        lo_strict = False
    elif s < 0.5:
        lo, hi = 1.0 + np.ceil(s), 1.0 + 2.0 / (1.0 - 2.0 * s)
        lo_strict = True
    elif s <= 1.5:
        lo, hi = 1.0 + np.ceil(s), np.inf
        lo_strict = True
    else:
        lo, hi = 1.0 + s, np.inf
        lo_strict = True
    ok = []
    for p in triple.as_tuple():
        above = p > lo if lo_strict else p >= lo
        ok.append(bool(above and p <= hi))
    return {"window": (float(lo), float(hi)), "lower_strict": lo_strict,
            "admissible": tuple(ok), "all_admissible": all(ok)}


def pick_gn_parameters(p_k, s):
    """The explicit interpolation-parameter choice and its range checks.

    Returns the parameter dictionary together with a list of constraint
    records (name, value, lower, upper, ok).  The fractional-order
    Gagliardo-Nirenberg interpolation exponent for a norm index q is
    beta(q) = (3/(s+1)) (1/2 - 1/q + s/3) for the derivative-carrying
    factors and (3/(s+1)) (1/2 - 1/q) for the plain ones.
    """
    q1 = 3.0 * (p_k - 1.0)
    q2 = 6.0
    r1, r2 = 6.0, 3.0
    r3 = 3.0 * (p_k - 1.0)
    r5 = 3.0 * (p_k - 1.0)
    r6 = 6.0
    inv_r4 = (3.0 * (p_k - 1.0) - 2.0) / (6.0 * (p_k - 1.0))
    r4 = np.inf if inv_r4 == 0.0 else 1.0 / inv_r4

    c = 3.0 / (s + 1.0)
    lo_s = s / (s + 1.0)

    def beta0(q):
        return c * (0.5 - 1.0 / q)

    def beta1(q):
        return c * (0.5 - 1.0 / q + s / 3.0)

    checks = []

    def rng(name, val, lo, hi):
        checks.append({"name": name, "value": float(val), "lower": float(lo),
                       "upper": float(hi),
                       "ok": bool(lo - 1e-12 <= val <= hi + 1e-12)})

    def eq(name, lhs, rhs):
        checks.append({"name": name, "value": float(lhs - rhs), "lower": 0.0,
                       "upper": 0.0, "ok": bool(abs(lhs - rhs) <= 1e-12)})

    rng("beta(q1)", beta0(q1), 0.0, 1.0)
    rng("beta(q2)", beta1(q2), lo_s, 1.0)
    eq("1/2 = (p_k-1)/q1 + 1/q2", (p_k - 1.0) / q1 + 1.0 / q2, 0.5)
    rng("beta(r1)", beta1(r1), lo_s, 1.0)
    rng("beta(r2 (p_k-1))", beta0(r2 * (p_k - 1.0)), 0.0, 1.0)
    eq("1/2 = 1/r1 + 1/r2", 1.0 / r1 + 1.0 / r2, 0.5)
    rng("beta(r3)", beta0(r3), 0.0, 1.0)
    rng("beta(r5)", beta0(r5), 0.0, 1.0)
    rng("beta(r6)", beta1(r6), lo_s, 1.0)
    eq("1/2 = 1/r3 + 1/r4", 1.0 / r3 + inv_r4, 0.5)
    eq("1/r4 = (p_k-2)/r5 + 1/r6", inv_r4, (p_k - 2.0) / r5 + 1.0 / r6)

    params = {"q1": q1, "q2": q2, "r1": r1, "r2": r2, "r3": r3,
              "r4": float(r4), "r5": r5, "r6": r6}
    return {"params": params, "checks": checks,
            "all_ok": all(ch["ok"] for ch in checks)}
