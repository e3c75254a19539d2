"""Command-line driver binding every module to config files and reports.

Each subcommand maps to one experiment: symbol expansions, smoothing
probes, Lyapunov checks, decay fits, diffusion-gap fits, exponent
classification, box simulation and the Picard contraction probe.
Configuration is a single JSON document with sections model / profile /
experiment; every run writes a report.json (and per-command CSV) into
the output directory.  Runs with the same config and seed produce
byte-identical artifacts.

Exit codes: 0 success, 2 validation error, 3 numerical failure,
4 check failure when --check is passed.
"""

import argparse
import copy
import csv
import dataclasses
import hashlib
import json
import os
import sys

import numpy as np

from . import __version__, semilinear
from .decay_lab import (EstimateKind, compare, measure_decay,
                        predicted_exponent, sharp_data_pair)
from .diffusion import build_reference, gap_decay
from .exponents import classify_and_g, critical_exponent
from .model import DataProfile, make_params
from .propagator import (ModeState, default_grid_for, norm_quadrature,
                         verify_lyapunov_mid)
from .semilinear import RunConfig, picard_probe, run, save_checkpoint
from .symbol import asymptotic_error_order, exact_mode_roots, gevrey_probe

__all__ = ["main", "COMMANDS", "default_config"]


_PROFILE_DEFAULT = {
    "kind": "gaussian",
    "amplitude": 1.0,
    "width": 1.0,
    "center_frequency": 0.0,
    "direction": [1.0, 0.0, 0.0],
    "lift": 0.0,
}

_EXPERIMENT_DEFAULTS = {
    "symbol-check": {
        "samples_per_fit": 16,
        "n_random_modes": 200,
        "order_tolerance": 0.3,
        "identity_tolerance": 1e-10,
    },
    "gevrey": {
        "rho_decades": 2.0,
        "n_samples": 25,
        "tolerance": 0.1,
    },
    "lyapunov": {
        "n_modes": 100,
        "horizon": 50.0,
        "n_samples": 1000,
        "tolerance": 1e-6,
    },
    "decay-fit": {
        "theorem_id": "additional-decay-D2m",
        "quantity": "energy",
        "m": 1.0,
        "s": 0.0,
        "window": [1e2, 1e4],
        "sample_count": 20,
        "tolerance": 0.05,
        "use_sharp_pair": True,
    },
    "diffusion-gap": {
        "s": 0.0,
        "m": 2.0,
        "window": [1e2, 1e4],
        "sample_count": 20,
        "gap_tolerance": 0.1,
        "use_sharp_pair": False,
    },
    "exponents": {
        "p": [2.0, 2.0, 2.0],
        "m": 1.0,
        "s": 0.0,
        "regime": "cri",
    },
    "simulate": {
        "triple": [2.6, 2.6, 2.6],
        "m": 1.0,
        "s": 0.0,
        "regime": "cri",
        "delta": 1e-3,
        "width": 2.0,
        "N": 64,
        "L": 64.0 * np.pi,
        "dt": 0.025,
        "horizon": 100.0,
        "u1_scale": 0.0,
        "record_every": 4,
        "checkpoint": False,
    },
    "picard": {
        "triple": [2.5, 2.5, 2.5],
        "m": 1.0,
        "s": 0.0,
        "regime": "cri",
        "delta": 1e-3,
        "width": 8.0,
        "N": 32,
        "L": 64.0 * np.pi,
        "dt": 0.025,
        "horizon": 10.0,
        "iterations": 6,
        "ratio_threshold": 0.5,
    },
}


_MODEL_THETA_DEFAULT = {"simulate": 1.0, "picard": 0.5}


def default_config(command):
    """Full default configuration document for one subcommand."""
    if command not in _EXPERIMENT_DEFAULTS:
        raise ValueError("unknown command %r" % (command,))
    theta = _MODEL_THETA_DEFAULT.get(command, 0.25)
    return {
        "model": {"a2": 1.0, "b2": 2.0, "theta": theta, "epsilon": None},
        "profile": {
            "u0": copy.deepcopy(_PROFILE_DEFAULT),
            "u1": copy.deepcopy(_PROFILE_DEFAULT),
        },
        "experiment": copy.deepcopy(_EXPERIMENT_DEFAULTS[command]),
    }


def _merge(base, override, path=""):
    """Deep-merge override into base, rejecting unknown keys."""
    if not isinstance(override, dict):
        raise ValueError("config section %s must be an object" % (path or "/"))
    out = copy.deepcopy(base)
    for key, val in override.items():
        if key not in base:
            raise ValueError("unknown config field %s%s" % (path, key))
        if isinstance(base[key], dict):
            out[key] = _merge(base[key], val, path + key + ".")
        else:
            out[key] = val
    return out


def load_config(command, config_path):
    """Defaults merged with the user document, with field validation."""
    cfg = default_config(command)
    if config_path is None:
        return cfg
    with open(config_path) as fh:
        user = json.load(fh)
    return _merge(cfg, user)


def _config_hash(cfg):
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


def _params_from(cfg):
    m = cfg["model"]
    return make_params(m["a2"], m["b2"], m["theta"], m["epsilon"])


def _profile_from(sub):
    return DataProfile(kind=sub["kind"], amplitude=sub["amplitude"],
                       width=sub["width"],
                       center_frequency=sub["center_frequency"],
                       direction=tuple(sub["direction"]), lift=sub["lift"])


def _profiles_from(cfg):
    return (_profile_from(cfg["profile"]["u0"]),
            _profile_from(cfg["profile"]["u1"]))


def _fmt(x):
    if isinstance(x, float) or isinstance(x, np.floating):
        return "%.17g" % x
    return x


def _write_csv(path, header, rows, cfg_hash):
    with open(path, "w", newline="") as fh:
        fh.write("# elastodamp %s config=%s\n" % (__version__, cfg_hash))
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(x) for x in row])


def _jsonable(obj):
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: _jsonable(getattr(obj, f.name))
                for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, float) and not np.isfinite(obj):
        return repr(obj)
    return obj


def _write_report(outdir, report, cfg, cfg_hash):
    doc = {"tool": "elastodamp", "version": __version__,
           "config_hash": cfg_hash, "config": cfg,
           "report": _jsonable(report)}
    with open(os.path.join(outdir, "report.json"), "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _claimed_order(theta, zone):
    """Guaranteed power of |xi| bounding the expansion error in the zone.

    Heat-like regimes carry remainder order 7 - 12 theta, wave-like ones
    6 theta - 2; the interior fit must reach the claim from above (error
    vanishing at least that fast as |xi| -> 0), the exterior one from
    below (error decaying at least that fast as |xi| -> infinity).
    """
    parabolic = (theta < 0.5) == (zone == "int")
    return 7.0 - 12.0 * theta if parabolic else 6.0 * theta - 2.0


def _order_ok(zone, fitted, claimed, tol):
    if zone == "int":
        return fitted >= claimed - tol
    return fitted <= claimed + tol


def _cmd_symbol_check(cfg, args, outdir, cfg_hash, rng):
    params = _params_from(cfg)
    exp = cfg["experiment"]
    n = int(exp["samples_per_fit"])
    eps = params.epsilon
    rows = []
    orders = {}
    for zone, lo, hi in (("int", eps * 1e-4, eps * 1e-2),
                         ("ext", 1e2 / eps, 1e4 / eps)):
        samples = np.geomspace(lo, hi, n)
        for label, speed2 in (("a", params.a2), ("b", params.b2)):
            order = asymptotic_error_order(params, zone, speed2, samples)
            claim = _claimed_order(params.theta, zone)
            orders["%s-%s" % (zone, label)] = {"fitted": order,
                                               "claimed": claim}
            rows.append((zone, label, order, claim))
    _write_csv(os.path.join(outdir, "symbol_orders.csv"),
               ("zone", "branch", "fitted_order", "claimed_order"),
               rows, cfg_hash)

    # exact root identities on random modes: trace and per-branch product
    n_modes = int(exp["n_random_modes"])
    worst_trace = 0.0
    worst_prod = 0.0
    for _ in range(n_modes):
        rho = float(np.exp(rng.uniform(np.log(1e-3), np.log(1e3))))
        mus = []
        for speed2 in (params.a2, params.a2, params.b2):
            r = exact_mode_roots(params, speed2, rho)
            mus.extend([r.mu_plus, r.mu_minus])
            prod = r.mu_plus * r.mu_minus
            worst_prod = max(worst_prod,
                             abs(prod - speed2 * rho**2)
                             / (speed2 * rho**2))
        trace = np.sum(mus)
        target = 3.0 * rho ** (2.0 * params.theta)
        worst_trace = max(worst_trace, abs(trace - target) / target)
    if not (np.isfinite(worst_trace) and np.isfinite(worst_prod)):
        raise FloatingPointError("root identities produced non-finite values")

    tol = float(exp["order_tolerance"])
    ok = (all(_order_ok(key.split("-")[0], v["fitted"], v["claimed"], tol)
              for key, v in orders.items())
          and worst_trace < float(exp["identity_tolerance"])
          and worst_prod < float(exp["identity_tolerance"]))
    report = {"orders": orders, "trace_residual": worst_trace,
              "product_residual": worst_prod, "check_ok": ok}
    return report, ok


def _cmd_gevrey(cfg, args, outdir, cfg_hash, rng):
    params = _params_from(cfg)
    exp = cfg["experiment"]
    lo = 10.0 / params.epsilon
    hi = lo * 10.0 ** float(exp["rho_decades"])
    samples = np.geomspace(lo, hi, int(exp["n_samples"]))
    slope = gevrey_probe(params, samples, zone="ext")
    expected = 2.0 * min(params.theta, 1.0 - params.theta)
    if params.theta == 0.5:
        expected = 1.0
    if not np.isfinite(slope):
        raise FloatingPointError("smoothing-probe fit is non-finite")
    ok = abs(slope - expected) <= float(exp["tolerance"])
    rows = [(r, g) for r, g in zip(
        samples, [min(exact_mode_roots(params, y2, r).mu_plus.real
                      for y2 in (params.a2, params.b2))
                  for r in samples])]
    _write_csv(os.path.join(outdir, "gevrey_gap.csv"),
               ("rho", "spectral_gap"), rows, cfg_hash)
    report = {"fitted_order": slope, "expected_order": expected,
              "check_ok": ok}
    return report, ok


def _random_mode(params, rng):
    eps = params.epsilon
    rho = float(np.exp(rng.uniform(np.log(eps), np.log(1.0 / eps))))
    eta = rng.standard_normal(3)
    eta = eta / np.linalg.norm(eta)
    u = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    ut = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    return ModeState(u_hat=u, ut_hat=ut, xi=rho * eta)


def _cmd_lyapunov(cfg, args, outdir, cfg_hash, rng):
    params = _params_from(cfg)
    exp = cfg["experiment"]
    tol = float(exp["tolerance"])
    rows = []
    ok = True
    worst = 0.0
    for i in range(int(exp["n_modes"])):
        state = _random_mode(params, rng)
        rep = verify_lyapunov_mid(params, state.rho, state,
                                  float(exp["horizon"]),
                                  n_samples=int(exp["n_samples"]))
        if not np.isfinite(rep["max_violation"]):
            raise FloatingPointError("Lyapunov check returned non-finite "
                                     "violation")
        rel = rep["max_violation"] / rep["F0"] if rep["F0"] > 0.0 else 0.0
        worst = max(worst, rel)
        mode_ok = rel <= tol and rep["gronwall_ok"]
        ok = ok and mode_ok
        rows.append((i, state.rho, rep["max_violation"], rep["F0"],
                     rel, int(rep["gronwall_ok"]), rep["E0"], rep["E_end"]))
    c_report = verify_lyapunov_mid(params, 1.0,
                                   _random_mode(params, rng), 1.0,
                                   n_samples=10)
    report = {"n_modes": int(exp["n_modes"]),
              "worst_relative_violation": worst,
              "constants": {k: c_report[k] for k in
                            ("c0", "c1", "c2", "c3")},
              "check_ok": ok}
    _write_csv(os.path.join(outdir, "lyapunov_modes.csv"),
               ("mode", "rho", "max_violation", "F0",
                "relative_violation", "gronwall_ok", "E0", "E_end"),
               rows, cfg_hash)
    return report, ok


def _cmd_decay_fit(cfg, args, outdir, cfg_hash, rng):
    params = _params_from(cfg)
    exp = cfg["experiment"]
    kind = EstimateKind(theorem_id=exp["theorem_id"], s=float(exp["s"]),
                        m=float(exp["m"]), quantity=exp["quantity"])
    if exp["use_sharp_pair"]:
        u0 = cfg["profile"]["u0"]
        profiles = sharp_data_pair(width=u0["width"],
                                   amplitude=u0["amplitude"],
                                   direction=tuple(u0["direction"]))
    else:
        profiles = _profiles_from(cfg)
    window = tuple(float(x) for x in exp["window"])
    grid = default_grid_for(profiles)
    fit = measure_decay(kind, params, profiles, window=window,
                        sample_count=int(exp["sample_count"]), grid=grid)
    if not np.isfinite(fit.slope):
        raise FloatingPointError("decay fit produced a non-finite slope")
    verdict = compare(kind, params, fit, tolerance=float(exp["tolerance"]))
    norm_kind = "L2" if kind.quantity == "solution-L2" else "energy"
    ts = np.geomspace(window[0], window[1], int(exp["sample_count"]))
    rows = [(t, norm_quadrature(params, profiles, float(t), norm_kind,
                                s=kind.s, grid=grid)) for t in ts]
    _write_csv(os.path.join(outdir, "decay_norms.csv"),
               ("t", "norm"), rows, cfg_hash)
    pred = predicted_exponent(kind, params)
    ok = verdict["verdict"] == "consistent"
    report = {"fit": fit, "prediction": pred, "verdict": verdict,
              "check_ok": ok}
    return report, ok


def _cmd_diffusion_gap(cfg, args, outdir, cfg_hash, rng):
    params = _params_from(cfg)
    exp = cfg["experiment"]
    ref = build_reference(params)
    if exp["use_sharp_pair"]:
        u0 = cfg["profile"]["u0"]
        profiles = sharp_data_pair(width=u0["width"],
                                   amplitude=u0["amplitude"],
                                   direction=tuple(u0["direction"]))
    else:
        profiles = _profiles_from(cfg)
    window = tuple(float(x) for x in exp["window"])
    meas = gap_decay(params, ref, profiles, float(exp["s"]),
                     float(exp["m"]), window,
                     sample_count=int(exp["sample_count"]))
    if not (np.isfinite(meas.solution_slope)
            and np.isfinite(meas.difference_slope)):
        raise FloatingPointError("gap fit produced non-finite slopes")
    rows = list(zip(meas.times, meas.solution_norms,
                    meas.reference_norms, meas.difference_norms))
    _write_csv(os.path.join(outdir, "diffusion_norms.csv"),
               ("t", "solution_norm", "reference_norm", "difference_norm"),
               rows, cfg_hash)
    ok = meas.measured_gap >= meas.predicted_gap - float(exp["gap_tolerance"])
    report = {"solution_slope": meas.solution_slope,
              "difference_slope": meas.difference_slope,
              "difference_r2": meas.difference_r2,
              "predicted_gap": meas.predicted_gap,
              "measured_gap": meas.measured_gap,
              "check_ok": ok}
    return report, ok


def _cmd_exponents(cfg, args, outdir, cfg_hash, rng):
    params = _params_from(cfg)
    exp = cfg["experiment"]
    triple = tuple(float(x) for x in exp["p"])
    report = classify_and_g(triple, float(exp["m"]), float(exp["s"]),
                            params.theta, exp["regime"])
    p_c = critical_exponent(float(exp["m"]), params.theta)
    doc = {"triple": list(triple), "m": float(exp["m"]),
           "s": float(exp["s"]), "theta": params.theta,
           "regime": exp["regime"], "critical_exponent": p_c,
           "case": report.case, "g": list(report.g),
           "rotation": list(report.rotation),
           "threshold": report.threshold,
           "alpha": list(report.alpha),
           "alpha_tilde": list(report.alpha_tilde),
           "admissible_window": list(report.admissible_window)}
    print(json.dumps(_jsonable(doc), indent=2, sort_keys=True))
    ok = report.case != "inadmissible"
    doc["check_ok"] = ok
    return doc, ok


def _run_config_from(cfg):
    params = _params_from(cfg)
    exp = cfg["experiment"]
    return RunConfig(triple=tuple(float(x) for x in exp["triple"]),
                     params=params, m=float(exp["m"]), s=float(exp["s"]),
                     regime=exp["regime"], delta=float(exp["delta"]),
                     width=float(exp["width"]), N=int(exp["N"]),
                     L=float(exp["L"]), dt=float(exp["dt"]),
                     horizon=float(exp["horizon"]),
                     u1_scale=float(exp.get("u1_scale", 0.0)),
                     record_every=int(exp.get("record_every", 1)))


def _cmd_simulate(cfg, args, outdir, cfg_hash, rng):
    run_cfg = _run_config_from(cfg)
    result = run(run_cfg)
    trace = result["trace"]
    keys = sorted(trace.raw.keys())
    header = ["t"]
    for k, kind in keys:
        header.append("raw_k%d_%s" % (k, kind))
        header.append("weighted_k%d_%s" % (k, kind))
    rows = []
    for i, t in enumerate(trace.times):
        row = [float(t)]
        for key in keys:
            row.append(float(trace.raw[key][i]))
            row.append(float(trace.weighted[key][i]))
        rows.append(row)
    _write_csv(os.path.join(outdir, "simulate_norms.csv"), header,
               rows, cfg_hash)
    if cfg["experiment"]["checkpoint"]:
        save_checkpoint(result["final_state"],
                        os.path.join(outdir, "checkpoint.bin"),
                        run_cfg.params, run_cfg.horizon)
    ok = result["verdict"] == "bounded"
    report = {"verdict": result["verdict"], "case": result["case"],
              "g": list(result["g"]),
              "margins": {"k%d_%s" % k: v
                          for k, v in result["margins"].items()},
              "trust_horizon": result["trust_horizon"],
              "horizon_exceeds_trust": result["horizon_exceeds_trust"],
              "check_ok": ok}
    return report, ok


def _cmd_picard(cfg, args, outdir, cfg_hash, rng):
    run_cfg = _run_config_from(cfg)
    exp = cfg["experiment"]
    result = picard_probe(run_cfg, iterations=int(exp["iterations"]))
    rows = [(n, d) for n, d in enumerate(result["d"])]
    _write_csv(os.path.join(outdir, "picard_distances.csv"),
               ("iteration", "distance"), rows, cfg_hash)
    threshold = float(exp["ratio_threshold"])
    ok = (result["contracting"] and not result["diverging"]
          and result["fitted_ratio"] < threshold)
    report = dict(result)
    report["ratio_threshold"] = threshold
    report["check_ok"] = ok
    return report, ok


COMMANDS = {
    "symbol-check": _cmd_symbol_check,
    "gevrey": _cmd_gevrey,
    "lyapunov": _cmd_lyapunov,
    "decay-fit": _cmd_decay_fit,
    "diffusion-gap": _cmd_diffusion_gap,
    "exponents": _cmd_exponents,
    "simulate": _cmd_simulate,
    "picard": _cmd_picard,
}

_CSV_DOC = {
    "symbol-check": "symbol_orders.csv: zone, branch, fitted_order, "
                    "claimed_order",
    "gevrey": "gevrey_gap.csv: rho, spectral_gap",
    "lyapunov": "lyapunov_modes.csv: mode, rho, max_violation, F0, "
                "relative_violation, gronwall_ok, E0, E_end",
    "decay-fit": "decay_norms.csv: t, norm",
    "diffusion-gap": "diffusion_norms.csv: t, solution_norm, "
                     "reference_norm, difference_norm",
    "exponents": "no CSV; JSON report on stdout",
    "simulate": "simulate_norms.csv: t, then raw/weighted columns per "
                "component and norm kind",
    "picard": "picard_distances.csv: iteration, distance",
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="elastodamp",
        description="Spectral experiments for damped elastic waves.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, help=_CSV_DOC[name],
                           description="CSV output: " + _CSV_DOC[name])
        p.add_argument("--config", default=None, metavar="PATH",
                       help="JSON config (sections model/profile/experiment)")
        p.add_argument("--out", default=".", metavar="DIR",
                       help="output directory for CSV/JSON artifacts")
        p.add_argument("--check", action="store_true",
                       help="exit 4 unless the acceptance condition holds")
        p.add_argument("--threads", type=int, default=os.cpu_count(),
                       metavar="N", help="worker threads for transforms")
        p.add_argument("--seed", type=int, default=0, metavar="N",
                       help="seed for randomized experiments")
        p.add_argument("--print-config", action="store_true",
                       help="print the merged config and exit")
        if name == "exponents":
            p.add_argument("--p", type=float, nargs=3, default=None,
                           metavar=("P1", "P2", "P3"))
            p.add_argument("--m", type=float, default=None)
            p.add_argument("--s", type=float, default=None)
            p.add_argument("--theta", type=float, default=None)
            p.add_argument("--regime", default=None,
                           choices=("cri", "bal-m-0", "bal-3/2-s"))
    return parser


def _apply_exponent_flags(cfg, args):
    if getattr(args, "p", None) is not None:
        cfg["experiment"]["p"] = list(args.p)
    for flag in ("m", "s", "regime"):
        val = getattr(args, flag, None)
        if val is not None:
            cfg["experiment"][flag] = val
    if getattr(args, "theta", None) is not None:
        cfg["model"]["theta"] = args.theta


def _log_error(outdir, command, exc, code):
    doc = {"command": command, "error_type": type(exc).__name__,
           "message": str(exc), "exit_code": code}
    try:
        os.makedirs(outdir, exist_ok=True)
        with open(os.path.join(outdir, "error.json"), "w") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError:
        pass
    print("error: %s" % exc, file=sys.stderr)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    outdir = args.out
    try:
        cfg = load_config(args.command, args.config)
        if args.command == "exponents":
            _apply_exponent_flags(cfg, args)
        if args.print_config:
            print(json.dumps(_jsonable(cfg), indent=2, sort_keys=True))
            return 0
        os.makedirs(outdir, exist_ok=True)
        semilinear._FFT_WORKERS = max(1, int(args.threads or 1))
        rng = np.random.default_rng(args.seed)
        cfg_hash = _config_hash(_jsonable(cfg))
        report, ok = COMMANDS[args.command](cfg, args, outdir, cfg_hash, rng)
        _write_report(outdir, report, _jsonable(cfg), cfg_hash)
    except (ValueError, KeyError, TypeError, OSError,
            json.JSONDecodeError) as exc:
        _log_error(outdir, args.command, exc, 2)
        return 2
    except (FloatingPointError, np.linalg.LinAlgError) as exc:
        _log_error(outdir, args.command, exc, 3)
        return 3
    if args.check and not ok:
        print("check failed for %s" % args.command, file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
