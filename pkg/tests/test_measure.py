import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from wimanlab.errors import BracketError
from wimanlab.measure import (
    Box,
    RegionEvaluationError,
    box_log_measure,
    check_2s,
    default_t_star,
    estar_log_measure,
    estar_slice,
    g_eval,
    g_inverse,
    ln_mu_sqrt_half,
    region_log_measure,
)
from wimanlab.series import CoefficientRule, RadiusVector, maximal_term

LN2 = math.log(2)


def test_box_examples():
    assert box_log_measure([[0, 1 - math.exp(-1)]]) == pytest.approx(1.0, rel=1e-15)
    assert box_log_measure(Box.cube(0.5, 0.75, 2)) == pytest.approx(LN2**2, rel=1e-15)
    assert box_log_measure([[0.3, 0.3]]) == 0.0


@given(st.floats(0, 0.99), st.floats(0, 0.99), st.floats(0, 0.99))
def test_box_measure_additive(a, b, c):
    lo, mid, hi = sorted((a, b, c))
    assert box_log_measure([[lo, hi]]) == pytest.approx(
        box_log_measure([[lo, mid]]) + box_log_measure([[mid, hi]]), abs=1e-12
    )


def test_box_validation():
    with pytest.raises(ValueError):
        Box((0.5,), (0.4,))
    with pytest.raises(ValueError):
        Box((0.5,), (1.0,))


def test_region_examples():
    assert region_log_measure(lambda r: False, Box.cube(0.0, 0.9, 2), 8).value == 0.0
    est = region_log_measure(lambda r: True, Box((0.0,), (1 - math.exp(-1),)), 50)
    assert est.value == pytest.approx(1.0, rel=0.01)
    inside = lambda r: all(0.5 <= x <= 0.75 for x in r.radii)
    est = region_log_measure(inside, Box.cube(0.0, 0.9, 2), 512)
    assert est.value == pytest.approx(LN2**2, rel=0.02)
    assert est.grid_cells == 512**2


def test_region_error_carries_cell():
    def bad(r):
        if r.radii[0] > 0.8:
            raise ZeroDivisionError("boom")
        return True

    with pytest.raises(RegionEvaluationError) as info:
        region_log_measure(bad, Box((0.0,), (0.9,)), 10)
    assert info.value.cell == (7,)
    assert info.value.radii[0] > 0.8


def test_estimate_json():
    est = region_log_measure(lambda r: True, Box((0.0,), (0.5,)), 4)
    d = json.loads(est.to_json())
    assert set(d) == {"value", "method", "cells", "witness"}


def test_g_examples():
    t = math.exp(-0.25)
    assert g_eval(t) == pytest.approx(0.25 - math.log1p(-t), rel=1e-14)
    assert 0.95 <= g_eval(1 - 2.0**-12) * 16 * 2.0**-12 <= 1.10
    assert g_inverse(g_eval(0.9), 1e-9) == pytest.approx(0.9, abs=1e-8)


def test_profile_closed_form_matches_maximal_term():
    rule = CoefficientRule.sqrt_half()
    for s in np.linspace(0.01, 19.0, 400):
        r = RadiusVector.from_log_inv_gaps([s])
        assert ln_mu_sqrt_half(s) == pytest.approx(maximal_term(rule, r, verify=False).ln_mu, rel=1e-14, abs=1e-15)


@given(st.floats(0.5, 1 - 2.0**-20))
def test_g_inverse_roundtrip(t):
    assert g_inverse(g_eval(t), 1e-10) == pytest.approx(t, abs=1e-8)


@given(st.floats(0.51, 0.999), st.floats(0.51, 0.999))
def test_g_strictly_increasing(a, b):
    if a < b:
        assert g_eval(a) < g_eval(b)


def test_g_inverse_out_of_range():
    with pytest.raises(BracketError):
        g_inverse(-1.0)
    with pytest.raises(BracketError):
        g_inverse(1e12)


@pytest.mark.parametrize("t", [0.99, 0.999] + [1 - 2.0**-k for k in range(7, 15)])
def test_check_2s_holds(t):
    chk = check_2s(t)
    assert chk.holds and chk.lhs > chk.rhs > 0


def test_check_2s_reports_outside_regime():
    chk = check_2s(0.6)
    assert math.isfinite(chk.lhs) and math.isfinite(chk.rhs)


def test_default_t_star_on_grid():
    t = default_t_star()
    k = round(-math.log2(1 - t))
    assert t == 1 - 2.0**-k and 2 <= k <= 14


def test_estar_slice():
    x, y = estar_slice(0.98, 0.99)
    assert x < 0.99 < y
    assert g_eval(x) == pytest.approx(g_eval(0.99) / 3, abs=1e-9)
    assert g_eval(y) == pytest.approx(3 * g_eval(0.99), abs=1e-9)
    with pytest.raises(ValueError):
        estar_slice(0.99, 0.98)


def test_estar_measure_vs_witness_and_p1():
    est = estar_log_measure(0.98, 1 - 2.0**-14)
    assert est.value >= est.lower_bound_witness
    one = estar_log_measure(0.98, 1 - 2.0**-12, p=1)
    assert one.value == pytest.approx(12 * LN2 + math.log1p(-0.98), rel=1e-9)


def test_estar_increments_grow_linearly():
    vals = [estar_log_measure(0.98, 1 - 2.0**-k, cells=8).value for k in (10, 11, 12)]
    for a, b in zip(vals, vals[1:]):
        assert b - a >= 0.99 * LN2**2
