"""Pseudospectral solver for the weakly coupled semilinear system.

The unknown is one real 3-vector field U on a periodic box, solving

    U_tt - a^2 Lap U - (b^2 - a^2) grad div U + (-Lap)^theta U_t = F(U),
    F(U) = (|U_3|^{p1}, |U_1|^{p2}, |U_2|^{p3}),

with the linear part integrated exactly per Fourier mode and the
nonlinearity added by an interaction-picture trapezoid (ETD2 with an
Euler predictor).  Weighted-norm monitors track the solution in the
fixed-point space whose time weights encode the expected decay rates,
including the loss-of-decay parameters g_k of the exponent calculus.

The box is a desk-scale surrogate for free space; runs report a trust
horizon t <= L / (2 b) beyond which wrap-around can pollute the tails.
"""

from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft

from .decay_lab import DEFAULT_SLACK, rho_exponent
from .exponents import ExponentTriple, classify_and_g
from .model import ModelParams
from .propagator import flow_coefficients

__all__ = [
    "SpectralField",
    "RunConfig",
    "WeightedNormTrace",
    "gaussian_box_field",
    "field_from_real",
    "monitor_weights",
    "step",
    "run",
    "picard_probe",
    "save_checkpoint",
    "load_checkpoint",
]

_FFT_WORKERS = -1


@dataclass
class SpectralField:
    """Transform coefficients of (U, U_t) on an N^3 periodic box.

    Uh and Vh hold the real-input transform (rfftn) of the three vector
    components, shape (3, N, N, N // 2 + 1); realness of the fields is
    structural.
    """

    L: float
    Uh: np.ndarray
    Vh: np.ndarray

    @property
    def N(self):
        return self.Uh.shape[1]

    def copy(self):
        return SpectralField(L=self.L, Uh=self.Uh.copy(), Vh=self.Vh.copy())

    def real_fields(self):
        """(U, U_t) in physical space, shape (3, N, N, N) each."""
        n = self.N
        U = sfft.irfftn(self.Uh, s=(n, n, n), axes=(1, 2, 3),
                        workers=_FFT_WORKERS)
        V = sfft.irfftn(self.Vh, s=(n, n, n), axes=(1, 2, 3),
                        workers=_FFT_WORKERS)
        return U, V


def field_from_real(U, V, L):
    """SpectralField from physical-space (U, U_t) arrays of shape (3,N,N,N)."""
    Uh = sfft.rfftn(np.asarray(U, dtype=float), axes=(1, 2, 3),
                    workers=_FFT_WORKERS)
    Vh = sfft.rfftn(np.asarray(V, dtype=float), axes=(1, 2, 3),
                    workers=_FFT_WORKERS)
    return SpectralField(L=float(L), Uh=Uh, Vh=Vh)


def gaussian_box_field(N, L, amplitude, width, center=None):
    """Real gaussian bump, each component normalized to box L2 norm 1.

    Returns an array of shape (3, N, N, N); the returned bump times
    `amplitude` is the standard small-data configuration.
    """
    if center is None:
        center = 0.5 * L
    x = np.arange(N) * (L / N)
    g1 = np.exp(-0.5 * ((x - center) / width) ** 2)
    bump = g1[:, None, None] * g1[None, :, None] * g1[None, None, :]
    h3 = (L / N) ** 3
    bump = bump / np.sqrt(np.sum(bump**2) * h3)
    return amplitude * np.broadcast_to(bump, (3, N, N, N)).copy()


def _wavenumbers(N, L):
    """rho (N,N,Nr), unit directions eta (3,N,N,Nr), 2/3 dealias mask."""
    k1 = 2.0 * np.pi * sfft.fftfreq(N, d=1.0 / N) / L
    kz = 2.0 * np.pi * sfft.rfftfreq(N, d=1.0 / N) / L
    KX, KY, KZ = np.meshgrid(k1, k1, kz, indexing="ij")
    K = np.stack([KX, KY, KZ])
    rho = np.sqrt(np.sum(K**2, axis=0))
    with np.errstate(invalid="ignore", divide="ignore"):
        eta = np.where(rho > 0.0, K / rho, 0.0)
    cut = (2.0 / 3.0) * (N // 2)
    idx = np.abs(sfft.fftfreq(N, d=1.0 / N))
    idz = sfft.rfftfreq(N, d=1.0 / N)
    mask = ((idx[:, None, None] <= cut) & (idx[None, :, None] <= cut)
            & (idz[None, None, :] <= cut))
    return rho, eta, mask


def _hermitian_weight(N):
    """Multiplicity of each rfftn coefficient in the full spectrum."""
    w = np.full((N, N, N // 2 + 1), 2.0)
    w[:, :, 0] = 1.0
    if N % 2 == 0:
        w[:, :, -1] = 1.0
    return w


def box_norm(coeffs, L, rho, herm, order=0.0):
    """Homogeneous Sobolev norm of one component from its coefficients."""
    N = coeffs.shape[0]
    dens = herm * np.abs(coeffs) ** 2
    if order != 0.0:
        dens = dens * rho ** (2.0 * order)
    return float(np.sqrt(L**3 / N**6 * np.sum(dens)))


class _BoxFlow:
    """Cached exact linear flow and Duhamel kernel for one step size."""

    def __init__(self, params, N, L, dt):
        self.params = params
        self.N = N
        self.L = L
        self.dt = dt
        self.rho, self.eta, self.mask = _wavenumbers(N, L)
        self.herm = _hermitian_weight(N)
        p = self.rho ** (2.0 * params.theta)
        self.coef_a = flow_coefficients(p, params.a2 * self.rho**2, dt)
        self.coef_b = flow_coefficients(p, params.b2 * self.rho**2, dt)

    def _split(self, X):
        d = np.sum(self.eta * X, axis=0)
        lon = d[None] * self.eta
        return X - lon, lon

    def _apply(self, idx_a, idx_b, X):
        tr, lon = self._split(X)
        return idx_a * tr + idx_b * lon

    def lin(self, Uh, Vh):
        """One exact linear step of length dt."""
        p0a, p1a, d0a, d1a = self.coef_a
        p0b, p1b, d0b, d1b = self.coef_b
        tr_u, lon_u = self._split(Uh)
        tr_v, lon_v = self._split(Vh)
        U = p0a * tr_u + p1a * tr_v + p0b * lon_u + p1b * lon_v
        V = d0a * tr_u + d1a * tr_v + d0b * lon_u + d1b * lon_v
        return U, V

    def kernel(self, Fh):
        """Exact flow over dt applied to the state (0, Fh)."""
        _, p1a, _, d1a = self.coef_a
        _, p1b, _, d1b = self.coef_b
        tr, lon = self._split(Fh)
        return p1a * tr + p1b * lon, d1a * tr + d1b * lon

    def nonlinearity(self, state, triple):
        """Dealias-filtered transform of F(U) at the state."""
        n = self.N
        U = sfft.irfftn(state.Uh, s=(n, n, n), axes=(1, 2, 3),
                        workers=_FFT_WORKERS)
        F = np.stack([
            np.abs(U[2]) ** triple.p1,
            np.abs(U[0]) ** triple.p2,
            np.abs(U[1]) ** triple.p3,
        ])
        Fh = sfft.rfftn(F, axes=(1, 2, 3), workers=_FFT_WORKERS)
        return Fh * self.mask


@dataclass(frozen=True)
class RunConfig:
    """Full description of one box run."""

    triple: ExponentTriple
    params: ModelParams
    m: float = 1.0
    s: float = 0.0
    regime: str = "cri"
    delta: float = 1e-3
    width: float = 8.0
    N: int = 64
    L: float = 64.0 * np.pi
    dt: float = 0.01
    horizon: float = 100.0
    u1_scale: float = 0.0
    disable_nonlinearity: bool = False
    record_every: int = 1

    def __post_init__(self):
        if not isinstance(self.triple, ExponentTriple):
            object.__setattr__(self, "triple", ExponentTriple(*self.triple))
        if not self.delta > 0.0:
            raise ValueError("delta must be positive")
        if not self.horizon > 0.0:
            raise ValueError("horizon must be positive")
        if self.N < 16 or (self.N & (self.N - 1)) != 0:
            raise ValueError("N must be a power of two, at least 16")

    @property
    def trust_horizon(self):
        return self.L / (2.0 * self.params.b)


_KINDS_BASE = ("L2", "grad-L2", "dt-L2")
_KINDS_S = ("Hs+1", "Hs-dt")


def _kind_order(kind, s):
    """(channel, derivative order) of a monitor norm kind."""
    table = {
        "L2": ("u", 0.0),
        "grad-L2": ("u", 1.0),
        "dt-L2": ("v", 0.0),
        "Hs+1": ("u", s + 1.0),
        "Hs-dt": ("v", s),
    }
    return table[kind]


def monitor_weights(m, s, theta, g):
    """Time-weight exponents of the fixed-point norm, per component.

    Returns a tuple of three lists of (norm-kind, weight).  Covered
    regimes: theta in [1/2, 1] with m in [1, 6/5) or [6/5, 3/2), and
    theta in [0, 1/2) with m = 3/2.
    """
    g = tuple(float(x) for x in g)
    if len(g) != 3:
        raise ValueError("g must have three entries")
    out = []
    if theta >= 0.5 and 1.0 <= m < 1.2:
        base_l2 = (6.0 - 5.0 * m) / (4.0 * m * theta)
        base_d1 = (6.0 - 3.0 * m) / (4.0 * m * theta)
        base_s = (6.0 - 3.0 * m + 2.0 * s * m) / (4.0 * m * theta)
    elif theta >= 0.5 and 1.2 <= m < 1.5:
        base_l2 = -1.0 + (6.0 - 3.0 * m) / (4.0 * m * theta)
        base_d1 = (6.0 - 3.0 * m) / (4.0 * m * theta)
        base_s = (6.0 - 3.0 * m + 2.0 * s * m) / (4.0 * m * theta)
    elif theta < 0.5 and abs(m - 1.5) < 1e-12:
        rho1 = rho_exponent(1.0, m, theta, DEFAULT_SLACK)
        base_l2 = -1.0 + rho1
        base_d1 = rho1
        base_s = rho_exponent(s + 1.0, m, theta, DEFAULT_SLACK)
    else:
        raise ValueError("no proved weight table for m=%g, theta=%g"
                         % (m, theta))
    for gk in g:
        entries = [("L2", base_l2 - gk), ("grad-L2", base_d1 - gk),
                   ("dt-L2", base_d1 - gk)]
        if s > 0.0:
            entries += [("Hs+1", base_s - gk), ("Hs-dt", base_s - gk)]
        out.append(entries)
    return tuple(out)


@dataclass(frozen=True)
class WeightedNormTrace:
    """Raw and time-weighted norm histories of one run."""

    times: np.ndarray
    raw: dict
    weighted: dict
    weights: tuple


def step(config, state, dt=None, flow=None):
    """One ETD2 step: exact linear flow plus trapezoid Duhamel term."""
    if dt is None:
        dt = config.dt
    if flow is None or flow.dt != dt:
        flow = _BoxFlow(config.params, state.N, state.L, dt)
    U_lin, V_lin = flow.lin(state.Uh, state.Vh)
    if config.disable_nonlinearity:
        new = SpectralField(L=state.L, Uh=U_lin, Vh=V_lin)
    else:
        Fn = flow.nonlinearity(state, config.triple)
        K1u, K1v = flow.kernel(Fn)
        pred = SpectralField(L=state.L, Uh=U_lin + dt * K1u,
                             Vh=V_lin + dt * K1v)
        Fstar = flow.nonlinearity(pred, config.triple)
        new = SpectralField(L=state.L,
                            Uh=U_lin + 0.5 * dt * K1u,
                            Vh=V_lin + 0.5 * dt * (K1v + Fstar))
    if not np.all(np.isfinite(new.Uh)):
        raise FloatingPointError("solution lost finiteness during a step")
    return new


def _record(flow, state, weights, s, t, raw, weighted):
    for k in range(3):
        for kind, w in weights[k]:
            channel, order = _kind_order(kind, s)
            coeffs = state.Uh[k] if channel == "u" else state.Vh[k]
            val = box_norm(coeffs, state.L, flow.rho, flow.herm, order)
            raw.setdefault((k + 1, kind), []).append(val)
            weighted.setdefault((k + 1, kind), []).append(
                (1.0 + t) ** w * val)


def _weighted_sum(flow, Uh, Vh, L, weights, s, t):
    total = 0.0
    for k in range(3):
        for kind, w in weights[k]:
            channel, order = _kind_order(kind, s)
            coeffs = Uh[k] if channel == "u" else Vh[k]
            total += (1.0 + t) ** w * box_norm(coeffs, L, flow.rho,
                                               flow.herm, order)
    return total


def initial_state(config):
    """Small-data gaussian configuration (U, u1_scale * U_t-shape).

    The data is band-limited to the dealias ball.  Modes with a Nyquist
    component have no aliased partner, so the longitudinal projection is
    ambiguous there; keeping the state inside the ball makes the split
    flow preserve realness exactly.
    """
    U = gaussian_box_field(config.N, config.L, config.delta, config.width)
    V = config.u1_scale * U
    field = field_from_real(U, V, config.L)
    _, _, mask = _wavenumbers(config.N, config.L)
    field.Uh *= mask
    field.Vh *= mask
    return field


def run(config, data=None):
    """Integrate to the horizon and judge boundedness in weighted norms.

    The verdict is 'bounded' when every weighted component stays within
    three times its value at t = 1 (the transient before t = 1 is not
    judged), 'growing' otherwise.
    """
    report = classify_and_g(config.triple, config.m, config.s,
                            config.params.theta, config.regime)
    if report.case == "inadmissible":
        raise ValueError("exponent triple is inadmissible; no fixed-point "
                         "space to monitor")
    weights = monitor_weights(config.m, config.s, config.params.theta,
                              report.g)
    state = initial_state(config) if data is None else data
    flow = _BoxFlow(config.params, state.N, state.L, config.dt)
    n_steps = int(round(config.horizon / config.dt))
    times = [0.0]
    raw, weighted = {}, {}
    _record(flow, state, weights, config.s, 0.0, raw, weighted)
    for i in range(1, n_steps + 1):
        state = step(config, state, config.dt, flow)
        if i % config.record_every == 0 or i == n_steps:
            t = i * config.dt
            times.append(t)
            _record(flow, state, weights, config.s, t, raw, weighted)
    times = np.asarray(times)
    raw = {k: np.asarray(v) for k, v in raw.items()}
    weighted = {k: np.asarray(v) for k, v in weighted.items()}
    trace = WeightedNormTrace(times=times, raw=raw, weighted=weighted,
                              weights=weights)

    judged = times >= 1.0
    i_ref = int(np.argmax(judged)) if np.any(judged) else len(times) - 1
    bounded = True
    margins = {}
    for key, series in weighted.items():
        ref = series[i_ref]
        peak = float(np.max(series[judged])) if np.any(judged) else ref
        margins[key] = peak / ref if ref > 0.0 else 0.0
        if ref > 0.0 and peak > 3.0 * ref:
            bounded = False
    return {
        "trace": trace,
        "verdict": "bounded" if bounded else "growing",
        "margins": margins,
        "case": report.case,
        "g": report.g,
        "trust_horizon": config.trust_horizon,
        "horizon_exceeds_trust": bool(config.horizon > config.trust_horizon),
        "final_state": state,
    }


def picard_probe(config, iterations=6):
    """Successive-difference norms of the Duhamel fixed-point iteration.

    Advances all iterates U^(1) ... U^(iterations) in lockstep: iterate
    j consumes the forcing F(U^(j-1)) of the previous iterate at both
    trapezoid endpoints, so each step is a discrete Duhamel application.
    Returns the list d_n = X(T)-distance between successive iterates and
    the fitted contraction ratio.
    """
    if iterations < 2:
        raise ValueError("need at least two iterations")
    report = classify_and_g(config.triple, config.m, config.s,
                            config.params.theta, config.regime)
    weights = monitor_weights(config.m, config.s, config.params.theta,
                              report.g)
    data = initial_state(config)
    flow = _BoxFlow(config.params, data.N, data.L, config.dt)
    K = iterations
    states = [data.copy() for _ in range(K)]
    zero = np.zeros_like(data.Uh)
    # Fcur[j] = transform of F(U^(j)) at the current time; index 0 is the
    # zeroth iterate, identically zero
    Fcur = [zero] + [flow.nonlinearity(states[j], config.triple)
                     for j in range(K - 1)]

    def diff_sup(j, t):
        hi = states[j]
        lo_U = states[j - 1].Uh if j >= 1 else zero
        lo_V = states[j - 1].Vh if j >= 1 else zero
        return _weighted_sum(flow, hi.Uh - lo_U, hi.Vh - lo_V, data.L,
                             weights, config.s, t)

    d = np.zeros(K)
    d[0] = _weighted_sum(flow, data.Uh, data.Vh, data.L, weights,
                         config.s, 0.0)
    for j in range(1, K):
        d[j] = 0.0  # iterates coincide at t = 0

    n_steps = int(round(config.horizon / config.dt))
    for i in range(1, n_steps + 1):
        t = i * config.dt
        new_F = [zero]
        for j in range(K):
            U_lin, V_lin = flow.lin(states[j].Uh, states[j].Vh)
            if j == 0:
                states[j] = SpectralField(L=data.L, Uh=U_lin, Vh=V_lin)
            else:
                K1u, K1v = flow.kernel(Fcur[j])
                Fnew_prev = new_F[j]
                states[j] = SpectralField(
                    L=data.L,
                    Uh=U_lin + 0.5 * config.dt * K1u,
                    Vh=V_lin + 0.5 * config.dt * (K1v + Fnew_prev))
            if not np.all(np.isfinite(states[j].Uh)):
                raise FloatingPointError(
                    "iterate %d lost finiteness at t = %g" % (j + 1, t))
            if j < K - 1:
                new_F.append(flow.nonlinearity(states[j], config.triple))
        Fcur = new_F
        for j in range(K):
            if j == 0:
                val = _weighted_sum(flow, states[0].Uh, states[0].Vh,
                                    data.L, weights, config.s, t)
            else:
                val = diff_sup(j, t)
            d[j] = max(d[j], val)

    ratios = [d[n + 1] / d[n] for n in range(K - 1) if d[n] > 0.0]
    tail = ratios[1:] if len(ratios) > 1 else ratios
    diverging = False
    grow = 0
    for n in range(1, K):
        grow = grow + 1 if d[n] > d[n - 1] else 0
        if grow >= 3:
            diverging = True
    fitted = float(max(tail)) if tail else float("nan")
    return {
        "d": list(map(float, d)),
        "ratios": list(map(float, ratios)),
        "fitted_ratio": fitted,
        "contracting": bool(tail and all(r < 1.0 for r in tail)),
        "diverging": diverging,
    }


def save_checkpoint(state, path, params, t):
    """Write the coefficient arrays plus a JSON sidecar describing them.

    The binary file holds Uh followed by Vh as flat little-endian
    complex128 in C order; the sidecar (same path with '.json' appended)
    records the layout, box size, time stamp and model parameters.
    """
    import json

    path = str(path)
    flat = np.concatenate([state.Uh.ravel(), state.Vh.ravel()])
    flat.astype("<c16").tofile(path)
    sidecar = {
        "format": "elastodamp-checkpoint",
        "version": 1,
        "dtype": "complex128-le",
        "layout": "Uh then Vh, C order, shape (3, N, N, N//2 + 1) each",
        "N": int(state.N),
        "L": float(state.L),
        "t": float(t),
        "a2": float(params.a2),
        "b2": float(params.b2),
        "theta": float(params.theta),
        "epsilon": float(params.epsilon),
    }
    with open(path + ".json", "w") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_checkpoint(path):
    """Inverse of save_checkpoint: returns (SpectralField, sidecar dict)."""
    import json

    path = str(path)
    with open(path + ".json") as fh:
        sidecar = json.load(fh)
    if sidecar.get("format") != "elastodamp-checkpoint":
        raise ValueError("not a checkpoint sidecar: %s.json" % path)
    N = int(sidecar["N"])
    shape = (3, N, N, N // 2 + 1)
    count = 2 * int(np.prod(shape))
    flat = np.fromfile(path, dtype="<c16", count=count)
    if flat.size != count:
        raise ValueError("checkpoint payload truncated")
    half = count // 2
    Uh = flat[:half].reshape(shape).astype(complex)
    Vh = flat[half:].reshape(shape).astype(complex)
    return SpectralField(L=float(sidecar["L"]), Uh=Uh, Vh=Vh), sidecar
