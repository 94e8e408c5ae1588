import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.special import logsumexp

from wimanlab.errors import DimensionError
from wimanlab.series import (
    CoefficientRule,
    RadiusVector,
    lc_peak,
    log_coeff,
    maximal_term,
    plan_truncation,
    sum_modulus,
    tail_sum,
    truncation_degree,
)

from conftest import brute_log_terms

E = math.e
GEO = CoefficientRule.geometric()
SQH = CoefficientRule.sqrt_half()
PSH = CoefficientRule.product_sqrt_half(2)

rules_1d = st.sampled_from(
    [GEO, SQH, CoefficientRule.sqrt(), CoefficientRule.power_exp(0.3), CoefficientRule.power_exp(0.7)]
)


# --- log_coeff -------------------------------------------------------------


def test_log_coeff_examples():
    assert log_coeff(GEO, 7) == 0.0
    assert log_coeff(SQH, 4) == 1.0
    assert log_coeff(PSH, (1, 4)) == 1.5


def test_log_coeff_errors():
    with pytest.raises(DimensionError):
        log_coeff(PSH, (1,))
    with pytest.raises(DimensionError):
        log_coeff(SQH, (1, 2))
    table = CoefficientRule.from_table({0: 0.0, 3: -1.0})
    assert log_coeff(table, 3) == -1.0
    with pytest.raises(KeyError):
        log_coeff(table, 2)


def test_kind_aliases_and_validation():
    assert CoefficientRule("sqrt-half").kind == "SqrtHalf"
    assert CoefficientRule("product-sqrt-half", 3).p == 3
    with pytest.raises(ValueError):
        CoefficientRule("Nope")
    with pytest.raises(ValueError):
        CoefficientRule.power_exp(1.0)
    with pytest.raises(ValueError):
        CoefficientRule.power_exp(0.0)


@given(
    st.dictionaries(
        st.tuples(st.integers(0, 40), st.integers(0, 40)),
        st.floats(-50, 50, allow_nan=False),
        min_size=1,
        max_size=12,
    )
)
def test_table_json_roundtrip(entries):
    rule = CoefficientRule.from_table(entries)
    back = CoefficientRule.from_json(rule.to_json())
    assert back == rule
    for n, v in entries.items():
        assert log_coeff(back, n) == v


@pytest.mark.parametrize("rule", [GEO, SQH, PSH, CoefficientRule.power_exp(0.25), CoefficientRule.geometric(3)])
def test_builtin_json_roundtrip(rule):
    assert CoefficientRule.from_json(rule.to_json()) == rule


# --- radius vectors ----------------------------------------------------------


def test_radius_validation_and_dyadic():
    with pytest.raises(ValueError):
        RadiusVector.of(1.0)
    with pytest.raises(ValueError):
        RadiusVector.of(-0.1)
    r = RadiusVector.dyadic(10, 2)
    assert r.radii == (1 - 2.0**-10,) * 2
    assert r.abscissa == pytest.approx(20 * math.log(2), rel=1e-15)
    s = RadiusVector.from_log_inv_gaps([30.0])
    assert s.gaps[0] == pytest.approx(math.exp(-30.0), rel=1e-15)
    with pytest.raises(ValueError):
        RadiusVector.from_log_inv_gaps([40.0])  # 1 - e^-40 rounds to 1


# --- maximal term --------------------------------------------------------------


def test_maximal_term_examples():
    assert maximal_term(GEO, RadiusVector.of(0.5)) == (0.0, (0,))
    mt = maximal_term(SQH, RadiusVector.of(math.exp(-0.25)))
    assert mt.ln_mu == pytest.approx(0.25, abs=1e-15) and mt.argmax == (1,)
    mt = maximal_term(PSH, RadiusVector.of(math.exp(-0.25), math.exp(-0.25)))
    assert mt.ln_mu == pytest.approx(0.5, abs=1e-15) and mt.argmax == (1, 1)


def test_maximal_term_exhaustive_scan_oracle():
    r = RadiusVector.of(math.exp(-0.25))
    idx, vals = brute_log_terms(SQH, r, 10_000)
    assert maximal_term(SQH, r).ln_mu == pytest.approx(vals.max(), abs=1e-12)
    r2 = RadiusVector.of(math.exp(-0.25), math.exp(-0.25))
    idx, vals = brute_log_terms(PSH, r2, 300)
    assert maximal_term(PSH, r2).ln_mu == pytest.approx(vals.max(), abs=1e-12)


@given(rules_1d, st.floats(0.01, 0.97))
def test_maximal_term_matches_brute_force(rule, r0):
    r = RadiusVector.of(r0)
    mt = maximal_term(rule, r)
    n_max = max(50, 4 * mt.argmax[0] + 50)
    idx, vals = brute_log_terms(rule, r, n_max)
    assert mt.ln_mu == pytest.approx(vals.max(), rel=1e-12, abs=1e-12)
    assert math.isclose(vals[mt.argmax[0]], mt.ln_mu, rel_tol=1e-12, abs_tol=1e-12)


@given(st.floats(0.2, 0.97), st.floats(0.2, 0.97))
def test_product_maximal_term_is_sum_of_axes(a, b):
    both = maximal_term(PSH, RadiusVector.of(a, b)).ln_mu
    parts = maximal_term(SQH, RadiusVector.of(a)).ln_mu + maximal_term(SQH, RadiusVector.of(b)).ln_mu
    assert both == pytest.approx(parts, rel=1e-14, abs=1e-14)


def test_maximal_term_far_out_agrees_with_stationary_point():
    # close to r = 1 the terms near the peak agree to an ulp; the maximiser
    # must still sit next to the continuous stationary point
    for s in (12.0, 17.7, 18.4, 19.0):
        r = RadiusVector.from_log_inv_gaps([s])
        ln_r = r.log_radii[0]
        x = 1.0 / (16 * ln_r * ln_r)
        cand = max(0.5 * math.sqrt(n) + n * ln_r for n in (math.floor(x), math.floor(x) + 1))
        assert maximal_term(SQH, r, verify=False).ln_mu == pytest.approx(cand, rel=1e-14)


def test_table_maximal_term_ties_pick_smallest():
    rule = CoefficientRule.from_table({(0, 2): 0.0, (1, 1): 0.0, (2, 0): 0.0})
    mt = maximal_term(rule, RadiusVector.of(0.5, 0.5))
    assert mt.argmax == (0, 2)


@given(st.integers(0, 200), st.floats(-3, 3))
def test_lc_peak_on_quadratics(centre, scale):
    f = lambda n: -((np.asarray(n, dtype=float) - centre - 0.3) ** 2) * math.exp(scale)
    n, _ = lc_peak(f, 0, 400)
    assert n == centre


# --- sum modulus -------------------------------------------------------------


def test_sum_modulus_examples():
    assert sum_modulus(GEO, RadiusVector.of(0.5)) == pytest.approx(math.log(2), rel=1e-12)
    assert sum_modulus(CoefficientRule.geometric(2), RadiusVector.of(0.5, 0.5)) == pytest.approx(
        math.log(4), rel=1e-12
    )
    r = RadiusVector.of(0.5)
    assert sum_modulus(SQH, r) >= maximal_term(SQH, r).ln_mu


@given(rules_1d, st.floats(0.0, 0.97))
def test_sum_modulus_direct_summation_oracle(rule, r0):
    r = RadiusVector.of(r0)
    n = 200
    while True:
        _, vals = brute_log_terms(rule, r, n)
        total = logsumexp(vals)
        if vals[-1] < total + math.log(1e-16):
            break
        n *= 2
    assert sum_modulus(rule, r) == pytest.approx(total, rel=1e-11, abs=1e-11)


def test_sum_modulus_polydisc_oracle():
    r = RadiusVector.of(0.6, 0.85)
    _, vals = brute_log_terms(PSH, r, 400)
    assert sum_modulus(PSH, r) == pytest.approx(logsumexp(vals), rel=1e-11)


def test_sum_modulus_large_exponents_stay_finite():
    # mu exceeds e^250 here; nothing may overflow
    r = RadiusVector.dyadic(12)
    v = sum_modulus(SQH, r)
    assert 250 < maximal_term(SQH, r).ln_mu < v < math.inf


# --- tail sums -----------------------------------------------------------------


def test_tail_sum_examples():
    assert tail_sum(GEO, RadiusVector.of(0.5), 10) == pytest.approx(-9 * math.log(2), rel=1e-12)
    assert tail_sum(CoefficientRule.geometric(2), RadiusVector.of(0.5, 0.5), 1) == pytest.approx(
        math.log(3), rel=1e-12
    )
    r = RadiusVector.of(0.9)
    ln_mu = maximal_term(SQH, r).ln_mu
    d = truncation_degree(ln_mu, r, 0.5).total_degree_d
    assert tail_sum(SQH, r, d) <= ln_mu


@given(st.floats(0.3, 0.95), st.floats(0.3, 0.95), st.integers(0, 120))
def test_tail_sum_polydisc_brute_force(a, b, D):
    r = RadiusVector.of(a, b)
    idx, vals = brute_log_terms(PSH, r, 700)
    mask = idx.sum(axis=1) >= D
    expected = logsumexp(vals[mask])
    assert tail_sum(PSH, r, D) == pytest.approx(expected, rel=1e-10, abs=1e-10)


def test_tail_sum_table_exact():
    rule = CoefficientRule.from_table({0: 0.0, 1: 0.0, 5: 2.0})
    r = RadiusVector.of(0.5)
    assert tail_sum(rule, r, 2) == pytest.approx(2.0 + 5 * math.log(0.5), rel=1e-14)
    assert tail_sum(rule, r, 6) == -math.inf


# --- truncation degrees --------------------------------------------------------


def test_truncation_degree_examples():
    r = RadiusVector.from_log_inv_gaps([1.0])
    t = truncation_degree(1.0, r, 1.0)
    assert t.total_degree_d == pytest.approx(math.exp(10) * 2**2.5, rel=1e-12)
    assert t.total_degree_d1 == pytest.approx(32 * math.exp(10), rel=1e-12)
    r2 = RadiusVector.from_log_inv_gaps([1.0, 1.0])
    with pytest.warns(UserWarning):
        t2 = truncation_degree(0.0, r2, 0.0)
    assert t2.total_degree_d == pytest.approx(4 * math.exp(8), rel=1e-12)
    assert t2.delta_zero


def test_truncation_degree_rejects_negative_delta():
    with pytest.raises(ValueError):
        truncation_degree(1.0, RadiusVector.of(0.5), -0.1)


@pytest.mark.parametrize("k", [4, 7, 10])
def test_plan_truncation_tail_matches_discarded_mass(k):
    r = RadiusVector.dyadic(k)
    plan = plan_truncation(SQH, r, 0.25)
    cap = plan.per_axis_caps[0]
    total = sum_modulus(SQH, r)
    _, vals = brute_log_terms(SQH, r, cap)
    kept = logsumexp(vals)
    assert plan.tail_log_estimate <= plan.tail_log_estimate  # finite or -inf, never NaN
    discarded = total + math.log(-math.expm1(kept - total)) if kept < total else -math.inf
    if math.isfinite(discarded) and discarded > total - 25:
        assert plan.tail_log_estimate == pytest.approx(discarded, abs=1e-6)
    assert plan.tail_log_estimate <= total + math.log(1e-12) + 1e-9


def test_plan_truncation_respects_axis_cap():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        plan = plan_truncation(SQH, RadiusVector.dyadic(10), 0.25, max_axis_cap=1000)
    assert plan.per_axis_caps == (1000,) and plan.budget_clamped
    assert plan.tail_log_estimate > maximal_term(SQH, RadiusVector.dyadic(10)).ln_mu
