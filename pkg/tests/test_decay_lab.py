"""Decay predictions, slope fits and their consistency verdicts."""

import numpy as np
import pytest

from elastodamp.decay_lab import (EstimateKind, compare, measure_decay,
                                  predicted_exponent, rho_exponent,
                                  sharp_data_pair)
from elastodamp.model import DataProfile, make_params
from elastodamp.propagator import QuadratureGrid


def _params(theta):
    return make_params(1.0, 2.0, theta)


def _small_grid(R=12.0):
    return QuadratureGrid.build(R, n_per_panel=12, n_panels=30,
                                n_polar=8, n_azimuth=16)


def test_estimate_kind_validation():
    with pytest.raises(ValueError):
        EstimateKind(theorem_id="nope")
    with pytest.raises(ValueError):
        EstimateKind(theorem_id="D21", quantity="sup")
    with pytest.raises(ValueError):
        EstimateKind(theorem_id="D21", s=-1.0)
    with pytest.raises(ValueError):
        EstimateKind(theorem_id="D21", m=2.5)


def test_predicted_exponent_families():
    p = _params(0.5)
    higher = predicted_exponent(EstimateKind("higher-energy-D22", s=2.0), p)
    assert higher.exponent == pytest.approx(-2.0)
    assert higher.sharp and higher.epsilon_slack == 0.0
    hom = predicted_exponent(EstimateKind("homogeneous"), p)
    assert hom.exponent == 0.0
    energy = predicted_exponent(
        EstimateKind("additional-decay-D2m", m=1.0, s=1.0), p)
    assert energy.exponent == pytest.approx(-2.5)
    growth = predicted_exponent(
        EstimateKind("D21", m=1.0, quantity="solution-L2"), p)
    assert growth.exponent == pytest.approx(1.0)
    with pytest.raises(ValueError):
        predicted_exponent(EstimateKind("homogeneous",
                                        quantity="solution-L2"), p)
    with pytest.raises(ValueError):
        predicted_exponent(
            EstimateKind("additional-decay-D2m", m=1.5,
                         quantity="solution-L2"), p)


def test_predicted_exponent_continuous_in_theta_with_kink():
    kind = EstimateKind("additional-decay-D2m", m=1.0, s=0.0)
    thetas = np.concatenate([np.linspace(0.0, 0.49, 25),
                             np.linspace(0.51, 1.0, 25)])
    vals = [predicted_exponent(kind, _params(t)).exponent for t in thetas]
    diffs = np.abs(np.diff(vals))
    assert np.all(diffs < 0.1)
    at_half = predicted_exponent(kind, _params(0.5)).exponent
    assert at_half == pytest.approx(-1.5)
    # symmetric kink: equal values on both sides, strictly below the vertex
    left = predicted_exponent(kind, _params(0.4)).exponent
    right = predicted_exponent(kind, _params(0.6)).exponent
    assert left == pytest.approx(right)
    assert left > at_half


def test_energy_rate_monotone_in_s_and_m():
    # decay magnitude grows with extra regularity s and with stronger
    # integrability (smaller m), on a 20 x 20 grid
    p = _params(0.75)
    ss = np.linspace(0.0, 3.0, 20)
    ms = np.linspace(1.0, 1.99, 20)
    for m in ms:
        mags = [-predicted_exponent(
            EstimateKind("additional-decay-D2m", m=m, s=s), p).exponent
            for s in ss]
        assert np.all(np.diff(mags) >= -1e-12)
    for s in ss:
        mags = [-predicted_exponent(
            EstimateKind("additional-decay-D2m", m=m, s=s), p).exponent
            for m in ms]
        assert np.all(np.diff(mags) <= 1e-12)


def test_rho_exponent_branches():
    # at theta = 0 the theta-weighted branch is vacuous
    assert rho_exponent(1.0, 1.5, 0.0) == pytest.approx(
        (6.0 - 3.0 * 1.5 + 2.0 * 1.5) / (4.0 * 1.5))
    val = rho_exponent(1.0, 1.5, 0.25, slack=0.02)
    assert val == pytest.approx(min(3.0 / 4.5, 1.5 / 1.5) - 0.02)
    with pytest.raises(ValueError):
        rho_exponent(1.0, 1.5, 0.5)


def test_rho_family_predictions_not_sharp():
    p = _params(0.25)
    pred = predicted_exponent(EstimateKind("Dm1", m=1.5, s=0.0), p)
    assert not pred.sharp
    assert pred.epsilon_slack > 0.0
    sharp = predicted_exponent(EstimateKind("Dm1", m=1.0, s=0.0),
                               _params(0.75))
    assert sharp.sharp and sharp.epsilon_slack == 0.0


def test_sharp_data_pair_shape():
    u0, u1 = sharp_data_pair(width=2.0, amplitude=0.5)
    assert u0.lift == 1.0 and u1.lift == 0.0
    assert u0.width == 2.0 and u1.amplitude == 0.5


def test_measure_decay_input_validation():
    kind = EstimateKind("additional-decay-D2m", m=1.0)
    p = _params(0.5)
    profiles = sharp_data_pair()
    with pytest.raises(ValueError):
        measure_decay(kind, p, profiles, window=(10.0, 50.0))
    with pytest.raises(ValueError):
        measure_decay(kind, p, profiles, sample_count=5)


def test_measure_decay_rejects_zero_data():
    kind = EstimateKind("additional-decay-D2m", m=1.0)
    p = _params(0.5)
    zero = (DataProfile(kind="gaussian", amplitude=0.0), None)
    with pytest.raises(ValueError):
        measure_decay(kind, p, zero, grid=_small_grid())


def test_measured_slope_matches_prediction():
    kind = EstimateKind("additional-decay-D2m", m=1.0, s=0.0)
    p = _params(0.5)
    profiles = sharp_data_pair()
    fit = measure_decay(kind, p, profiles, grid=_small_grid())
    assert fit.r2 > 0.999
    assert not fit.transient_warning
    assert fit.slope == pytest.approx(-1.5, abs=0.05)
    verdict = compare(kind, p, fit)
    assert verdict["verdict"] == "consistent"
    assert not verdict["harness_bug"]


def test_transient_window_flags_warning():
    kind = EstimateKind("additional-decay-D2m", m=1.0, s=0.0)
    p = _params(0.5)
    profiles = sharp_data_pair()
    fit = measure_decay(kind, p, profiles, window=(0.01, 0.5),
                        grid=_small_grid())
    if fit.transient_warning:
        with pytest.raises(ValueError):
            compare(kind, p, fit)
    else:
        # the early window fits cleanly but must not match the decay rate
        assert abs(fit.slope + 1.5) > 0.05


def test_compare_verdicts():
    kind = EstimateKind("additional-decay-D2m", m=1.0, s=0.0)
    p = _params(0.5)
    from elastodamp.decay_lab import SlopeFit

    slow = SlopeFit(window=(1e2, 1e4), slope=-1.0, r2=1.0, samples=20)
    assert compare(kind, p, slow)["verdict"] == "too-slow"
    fast = SlopeFit(window=(1e2, 1e4), slope=-2.0, r2=1.0, samples=20)
    res = compare(kind, p, fast)
    assert res["verdict"] == "faster-than-predicted"
    assert res["harness_bug"]
