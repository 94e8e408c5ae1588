import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from wimanlab.bounds import (
    BOUND_CSV_HEADER,
    BoundForm,
    BoundParams,
    evaluate_functional,
    log_derivative_check,
    ratio_report,
    reports_to_csv,
    wiman_functional,
)
from wimanlab.errors import DimensionError
from wimanlab.series import CoefficientRule, RadiusVector, maximal_term, plan_truncation, sum_modulus
from wimanlab.signs import SignModel, SignRealization
from wimanlab.torus import torus_max

E = math.e
R1 = RadiusVector.from_log_inv_gaps([1.0])
R2 = RadiusVector.from_log_inv_gaps([1.0, 1.0])


def test_functional_examples():
    p0 = BoundParams(0.0)
    assert wiman_functional("DiscDet", p0, E - 1, R1) == pytest.approx(E + 0.5, rel=1e-14)
    assert wiman_functional("DiscRandom", p0, E - 1, R1) == pytest.approx(E - 0.25, rel=1e-14)
    assert wiman_functional("PolyRandom", p0, 0.0, R2) == pytest.approx(1 + math.log(math.sqrt(2)), rel=1e-14)


def test_disc_forms_need_p1():
    with pytest.raises(DimensionError):
        wiman_functional("DiscDet", BoundParams(), 0.0, R2)


def test_params_validation():
    with pytest.raises(ValueError):
        BoundParams(-0.1)
    with pytest.raises(ValueError):
        BoundParams(0.1, 0.0)


def test_clamp_flag():
    assert evaluate_functional("DiscDet", BoundParams(), -5.0, RadiusVector.of(0.1)).clamped
    assert not evaluate_functional("DiscDet", BoundParams(), 5.0, RadiusVector.of(0.9)).clamped


@given(st.floats(0, 200), st.floats(0.01, 12), st.floats(0, 2))
def test_poly_forms_reduce_consistently(ln_mu, s, delta):
    # PolyDet at p=1 and DiscDet share G and ln L; only the ln L weight differs
    r = RadiusVector.from_log_inv_gaps([s])
    prm = BoundParams(delta)
    L = max(ln_mu + s, 1.0)
    pd = wiman_functional("PolyDet", prm, ln_mu, r)
    dd = wiman_functional("DiscDet", prm, ln_mu, r)
    assert pd - dd == pytest.approx((1 + delta) * 0.5 * math.log(L) - (0.5 + delta) * math.log(L), abs=1e-9)


@given(st.floats(0, 200), st.floats(0.01, 12), st.floats(0, 0.5))
def test_random_below_deterministic(ln_mu, s, delta):
    # the disc random form carries 1/2 + 2 delta on G against 1 + delta
    r = RadiusVector.from_log_inv_gaps([s])
    prm = BoundParams(delta)
    assert wiman_functional("DiscRandom", prm, ln_mu, r) <= wiman_functional("DiscDet", prm, ln_mu, r) + 1e-12
    assert wiman_functional("PolyRandom", prm, ln_mu, r) <= wiman_functional("PolyDet", prm, ln_mu, r) + 1e-12


def test_ratio_report_examples():
    prm = BoundParams(0.0)
    b = wiman_functional("DiscDet", prm, 1.0, R1)
    rep = ratio_report("DiscDet", prm, 1.0, b, R1)
    assert rep.ln_ratio == 0.0 and not rep.violated
    rep = ratio_report("PolyRandomLower", BoundParams(0.0, 1.0), 0.0, 10.0, R2)
    assert rep.ln_ratio > 0 and not rep.violated
    text = reports_to_csv([rep])
    assert text.splitlines()[0] == ",".join(BOUND_CSV_HEADER)


def test_disc_det_holds_for_measured_maximum():
    rule = CoefficientRule.sqrt_half()
    r = RadiusVector.of(0.99)
    trunc = plan_truncation(rule, r, 0.25)
    res = torus_max(rule, SignRealization(SignModel("PlusOnly")), r, trunc)
    rep = ratio_report(BoundForm.DiscDet, BoundParams(0.25), maximal_term(rule, r).ln_mu, res.ln_max, r)
    assert rep.ln_ratio <= 0


def test_derivative_check_geometric_closed_form():
    geo = CoefficientRule.geometric()
    chk = log_derivative_check(geo, RadiusVector.of(1 - math.exp(-2)), 0, 0.0, 1e-5)
    assert chk.lhs == pytest.approx(math.exp(2), rel=1e-4)
    assert chk.rhs == pytest.approx(2 * math.exp(2), rel=1e-4)
    assert chk.holds
    chk = log_derivative_check(geo, RadiusVector.of(0.5), 0, 0.0, 1e-5)
    assert chk.lhs == pytest.approx(2.0, rel=1e-4)
    assert chk.rhs == pytest.approx(2 * math.log(2), rel=1e-4)
    assert not chk.holds


def termwise_log_derivative(r0):
    """``sum n |a_n| r^(n-1) / sum |a_n| r^n`` for ``a_n = e^{sqrt(n)/2}``, summed directly."""
    import numpy as np

    n = np.arange(0, 400_000)
    logs = np.sqrt(n) / 2 + n * math.log(r0)
    top = logs.max()
    w = np.exp(logs - top)
    return float((n * w).sum() / w.sum() / r0)


@pytest.mark.parametrize("r0", [0.9, 0.95])
def test_derivative_check_sqrt_half_termwise(r0):
    rule = CoefficientRule.sqrt_half()
    chk = log_derivative_check(rule, RadiusVector.of(r0), 0, 0.5, 1e-6)
    assert chk.lhs == pytest.approx(termwise_log_derivative(r0), rel=1e-3)


def test_derivative_check_polydisc_axis():
    rule = CoefficientRule.geometric(2)
    r = RadiusVector.of(0.6, 0.8)
    chk = log_derivative_check(rule, r, 1, 0.0, 1e-6)
    assert chk.lhs == pytest.approx(1 / 0.2, rel=1e-6)
    ln_M = sum_modulus(rule, r)
    assert chk.rhs == pytest.approx(ln_M / 0.2, rel=1e-12)


def test_derivative_check_step_validation():
    with pytest.raises(ValueError):
        log_derivative_check(CoefficientRule.geometric(), RadiusVector.of(0.9), 0, 0.0, 0.05)
    with pytest.raises(DimensionError):
        log_derivative_check(CoefficientRule.geometric(), RadiusVector.of(0.9), 1, 0.0)
