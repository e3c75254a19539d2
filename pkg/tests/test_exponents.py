"""Critical exponents, case classification and loss-of-decay parameters."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from elastodamp.exponents import (ExponentTriple, alpha, alpha_tilde,
                                  balanced_exponent, classify_and_g,
                                  critical_exponent, gn_admissible,
                                  pick_gn_parameters)
from elastodamp.exponents import _g_one_loss, _g_two_losses


def test_critical_exponent_values_and_domain():
    assert critical_exponent(1.0, 0.5) == 2.0
    assert critical_exponent(1.0, 1.0) == pytest.approx(2.5)
    with pytest.raises(ValueError):
        critical_exponent(1.3, 0.5)
    with pytest.raises(ValueError):
        critical_exponent(1.0, 0.25)


def test_balanced_exponent_domains():
    val = balanced_exponent(1.5, 0.25, 0.25)
    assert val > 2.0
    assert balanced_exponent(1.3, 0.0, 0.75) > 2.0
    with pytest.raises(ValueError):
        balanced_exponent(1.0, 0.0, 0.75)


def test_triple_cyclic_access_and_validation():
    tr = ExponentTriple(2.0, 2.5, 3.0)
    assert tr[1] == 2.0 and tr[4] == 2.0
    assert tr[2] == 2.5 and tr[0] == 3.0
    with pytest.raises(ValueError):
        ExponentTriple(1.0, 2.0, 2.0)


@given(m=st.floats(1.0, 1.19), theta=st.floats(0.5, 1.0),
       ps=st.tuples(st.floats(1.05, 4.0), st.floats(1.05, 4.0),
                    st.floats(1.05, 4.0)))
@settings(max_examples=500, deadline=None)
def test_alpha_and_critical_exponent_sign_equivalence(m, theta, ps):
    # 3/2 - alpha_k and p_{k+1}(p_k + 1 - p_c) - p_c carry the same sign;
    # the tilde variant uses the lumped power (p_{k+1}+1) p_{k+2}
    triple = ExponentTriple(*ps)
    p_c = critical_exponent(m, theta)
    for k in (1, 2, 3):
        lhs = 1.5 - alpha(k, triple, m, theta)
        rhs = triple[k + 1] * (triple[k] + 1.0 - p_c) - p_c
        if abs(rhs) > 1e-9:
            assert np.sign(lhs) == np.sign(rhs)
        lumped = (triple[k + 1] + 1.0) * triple[k + 2]
        prod = triple.p1 * triple.p2 * triple.p3
        lhs_t = 1.5 - alpha_tilde(k, triple, m, theta)
        rhs_t = lumped * (prod / lumped + 1.0 - p_c) - p_c
        if abs(rhs_t) > 1e-9:
            assert np.sign(lhs_t) == np.sign(rhs_t)


@given(m=st.floats(1.0, 1.19), theta=st.floats(0.5, 1.0),
       p2=st.floats(1.1, 3.5))
@settings(max_examples=300, deadline=None)
def test_g_formula_continuity_at_threshold(m, theta, p2):
    # one-loss g vanishes at the threshold, and with the first power at the
    # threshold the two-losses formula degenerates to the one-loss formula
    p_c = critical_exponent(m, theta)
    assert abs(_g_one_loss("cri", p_c, m, 0.0, theta)) < 1e-10
    g2 = _g_two_losses("cri", p_c, p2, m, 0.0, theta)
    g1 = _g_one_loss("cri", p2, m, 0.0, theta)
    assert abs(g2 - g1) < 1e-10


def test_classify_case_i():
    report = classify_and_g((2.6, 2.6, 2.6), 1.0, 0.0, 1.0, "cri")
    assert report.case == "i"
    assert report.g == (0.0, 0.0, 0.0)
    assert report.threshold == pytest.approx(2.5)


def test_classify_case_ii_and_rotation():
    report = classify_and_g((1.8, 3.0, 3.0), 1.0, 0.0, 0.5, "cri")
    assert report.case == "ii"
    assert report.rotation == (1, 2, 3)
    assert np.allclose(report.g, (0.4, 0.0, 0.0), atol=1e-12)
    rotated = classify_and_g((3.0, 1.8, 3.0), 1.0, 0.0, 0.5, "cri")
    assert rotated.case == "ii"
    assert rotated.rotation == (2, 3, 1)
    assert np.allclose(rotated.g, (0.0, 0.4, 0.0), atol=1e-12)


def test_classify_case_ii_at_theta_one():
    report = classify_and_g((2.4, 2.9, 2.9), 1.0, 0.0, 1.0, "cri")
    assert report.case == "ii"
    assert np.allclose(report.g, (0.1, 0.0, 0.0), atol=1e-12)


def test_classify_inadmissible_when_alpha_condition_fails():
    report = classify_and_g((2.2, 2.8, 2.8), 1.0, 0.0, 1.0, "cri")
    assert report.case == "inadmissible"
    assert np.all(np.isnan(report.g))


def test_classify_case_iii():
    # two consecutive sub-threshold powers with a large third one
    found = None
    for p3 in np.linspace(8.0, 30.0, 12):
        report = classify_and_g((1.9, 1.9, p3), 1.0, 0.0, 0.5, "cri")
        if report.case == "iii":
            found = report
            break
    assert found is not None
    assert found.g[0] > 0.0 and found.g[1] > 0.0 and found.g[2] == 0.0


def test_boundary_exponent_charged_epsilon():
    report = classify_and_g((2.0, 2.5, 2.5), 1.0, 0.0, 0.5, "cri")
    assert report.case == "i"
    assert report.g[0] == pytest.approx(1e-3)
    assert report.g[1] == 0.0


def test_gn_admissible_windows():
    res = gn_admissible((2.0, 2.5, 3.0), 1.0, 0.0)
    assert res["window"] == (2.0, 3.0)
    assert res["all_admissible"]
    res = gn_admissible((2.0, 2.5, 3.2), 1.0, 0.0)
    assert res["admissible"] == (True, True, False)
    res = gn_admissible((2.1, 2.5, 3.0), 1.0, 0.25)
    assert res["window"] == (2.0, 5.0)
    assert res["lower_strict"]
    res = gn_admissible((2.5, 2.6, 9.0), 1.0, 1.0)
    assert res["window"][1] == np.inf
    assert res["admissible"] == (True, True, True)


def test_pick_gn_parameters_inside_and_outside():
    inside = pick_gn_parameters(2.5, 0.0)
    assert inside["all_ok"]
    assert inside["params"]["q1"] == pytest.approx(4.5)
    outside = pick_gn_parameters(3.05, 0.0)
    assert not outside["all_ok"]
    bad = [c["name"] for c in outside["checks"] if not c["ok"]]
    assert "beta(q1)" in bad


@given(s=st.floats(0.0, 1.4), u=st.floats(0.0, 1.0))
@settings(max_examples=300, deadline=None)
def test_pick_gn_parameters_on_admissible_window(s, u):
    window = gn_admissible((2.0, 2.0, 2.0), 1.0, s)["window"]
    lo, hi = window
    hi_eff = min(hi, lo + 6.0)
    p = lo + 1e-6 + u * (hi_eff - lo - 2e-6)
    assert pick_gn_parameters(p, s)["all_ok"]
