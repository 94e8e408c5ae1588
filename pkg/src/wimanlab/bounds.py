"""Wiman-type functionals in log space, and a log-derivative diagnostic.

With ``G = sum_j ln(1/(1-r_j))`` and ``L = ln mu + G`` (clamped to ``>= 1``),
the forms evaluate to

=================  ==============================================
DiscDet            ln mu + (1+d) G + (1/2+d) ln L
DiscDetLower       ln C + ln mu + G + (1/2) ln L
DiscRandom         ln mu + (1/4+d) (2G + ln L)
DiscRandomLower    ln C + ln mu + (1/4) (2G + ln L)
PolyDet            ln mu + (1+d) (G + (p/2) ln L)
PolyRandom         ln mu + (1+d) (G/2 + (p/4) ln L)
PolyRandomLower    ln C + ln mu + G/2 + (p/4) ln L
=================  ==============================================
"""

from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

from .errors import DimensionError
from .series import CoefficientRule, RadiusVector, sum_modulus


class BoundForm(str, enum.Enum):
    DiscDet = "DiscDet"
    DiscDetLower = "DiscDetLower"
    DiscRandom = "DiscRandom"
    DiscRandomLower = "DiscRandomLower"
    PolyDet = "PolyDet"
    PolyRandom = "PolyRandom"
    PolyRandomLower = "PolyRandomLower"

    @property
    def disc(self) -> bool:
        return self.value.startswith("Disc")

    @property
    def lower(self) -> bool:
        return self.value.endswith("Lower")


@dataclass(frozen=True)
class BoundParams:
    delta: float = 0.0
    lower_constant_C: float = 1.0

    def __post_init__(self):
        if self.delta < 0:
            raise ValueError("delta must be >= 0")
        if not self.lower_constant_C > 0:
            raise ValueError("lower bound constant C must be > 0")


class Functional(NamedTuple):
    ln_value: float
    clamped: bool


def evaluate_functional(form: BoundForm | str, params: BoundParams, ln_mu: float, r: RadiusVector) -> Functional:
    form = BoundForm(form)
    p = r.p
    if form.disc and p != 1:
        raise DimensionError(f"{form.value} needs p=1, got p={p}")
    d = params.delta
    G = r.abscissa
    L = ln_mu + G
    clamped = L < 1.0
    lnL = math.log(max(L, 1.0))
    lnC = math.log(params.lower_constant_C)
    if form is BoundForm.DiscDet:
        v = ln_mu + (1 + d) * G + (0.5 + d) * lnL
    elif form is BoundForm.DiscDetLower:
        v = lnC + ln_mu + G + 0.5 * lnL
    elif form is BoundForm.DiscRandom:
        v = ln_mu + (0.25 + d) * (2 * G + lnL)
    elif form is BoundForm.DiscRandomLower:
        v = lnC + ln_mu + 0.25 * (2 * G + lnL)
    elif form is BoundForm.PolyDet:
        v = ln_mu + (1 + d) * (G + 0.5 * p * lnL)
    elif form is BoundForm.PolyRandom:
        v = ln_mu + (1 + d) * (0.5 * G + 0.25 * p * lnL)
    else:
        v = lnC + ln_mu + 0.5 * G + 0.25 * p * lnL
    return Functional(v, clamped)


def wiman_functional(form: BoundForm | str, params: BoundParams, ln_mu: float, r: RadiusVector) -> float:
    """Log of the chosen Wiman functional at ``(mu_f(r), r)``."""
    return evaluate_functional(form, params, ln_mu, r).ln_value


@dataclass(frozen=True)
class BoundReport:
    form: BoundForm
    delta: float
    C: float
    ln_mu: float
    ln_M: float
    ln_bound: float
    ln_ratio: float
    clamped: bool

    @property
    def violated(self) -> bool:
        """Upper forms: the measured maximum exceeds the bound.  Lower forms: it falls short."""
        return self.ln_ratio < 0 if self.form.lower else self.ln_ratio > 0


def ratio_report(form, params: BoundParams, ln_mu: float, ln_M: float, r: RadiusVector) -> BoundReport:
    """``ln M - ln(bound)``; for lower forms a positive ratio witnesses the bound."""
    form = BoundForm(form)
    val, clamped = evaluate_functional(form, params, ln_mu, r)
    return BoundReport(form, params.delta, params.lower_constant_C, ln_mu, ln_M, val, ln_M - val, clamped)


BOUND_CSV_HEADER = ("form", "delta", "C", "ln_mu", "ln_M", "ln_bound", "ln_ratio", "clamped")


def reports_to_csv(reports: Sequence[BoundReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(BOUND_CSV_HEADER)
    for rep in reports:
        w.writerow([rep.form.value, repr(rep.delta), repr(rep.C), repr(rep.ln_mu), repr(rep.ln_M),
                    repr(rep.ln_bound), repr(rep.ln_ratio), int(rep.clamped)])
    return buf.getvalue()


class DerivativeCheck(NamedTuple):
    lhs: float
    rhs: float
    holds: bool


def log_derivative_check(
    rule: CoefficientRule,
    r: RadiusVector,
    axis: int,
    delta: float,
    h: float | None = None,
    rel_tol: float = 1e-15,
) -> DerivativeCheck:
    """Compare ``d/dr_s ln M_frak(r)`` (central difference) with
    ``(ln M_frak)^(1+delta) / (1-r_s) * prod_{j != s} (1-r_j)^(-delta)``.
    """
    if not 0 <= axis < r.p:
        raise DimensionError(f"axis {axis} out of range for p={r.p}")
    gaps = r.gaps
    if h is None:
        h = 1e-6 * gaps[axis]
    if not 0 < h < min(gaps) / 4:
        raise ValueError(f"step h={h} must lie in (0, min(1-r_j)/4)")
    up = sum_modulus(rule, r.shifted(axis, h), rel_tol)
    down = sum_modulus(rule, r.shifted(axis, -h), rel_tol)
    lhs = (up - down) / (2 * h)
    ln_M = sum_modulus(rule, r, rel_tol)
    rhs = max(ln_M, 0.0) ** (1 + delta) / gaps[axis]
    for j, g in enumerate(gaps):
        if j != axis:
            rhs *= g ** (-delta)
    return DerivativeCheck(lhs, rhs, lhs <= rhs)
