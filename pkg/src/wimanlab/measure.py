"""Logarithmic measure of subsets of the unit polydisc radii, and the
sharpness construction built on the profile ``g``.

The log measure of ``E`` in ``[0, 1)^p`` is ``int_E prod_j dr_j / (1 - r_j)``.
In the coordinates ``s_j = ln(1/(1 - r_j))`` it is plain Lebesgue measure,
which is how every quantity here is computed.
"""

from __future__ import annotations

import functools
import itertools
import json
import math
import warnings
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy.integrate import IntegrationWarning, quad
from scipy.optimize import brentq

from .errors import BracketError, WimanError
from .series import CoefficientRule, RadiusVector, maximal_term

_SQRT_HALF = CoefficientRule.sqrt_half()


def _s_of(r: float) -> float:
    return -math.log1p(-r)


def _r_of(s: float) -> float:
    return -math.expm1(-s)


@dataclass(frozen=True)
class Box:
    """Axis-aligned box ``prod_j [lo_j, hi_j]`` with ``0 <= lo_j <= hi_j < 1``."""

    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self):
        lo = tuple(float(x) for x in self.lo)
        hi = tuple(float(x) for x in self.hi)
        if len(lo) != len(hi) or not lo:
            raise ValueError("box needs matching, non-empty lo and hi")
        for a, b in zip(lo, hi):
            if not (0.0 <= a <= b < 1.0):
                raise ValueError(f"need 0 <= lo <= hi < 1, got [{a}, {b}]")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def cube(cls, lo: float, hi: float, p: int) -> Box:
        return cls((lo,) * p, (hi,) * p)

    @property
    def p(self) -> int:
        return len(self.lo)

    def s_bounds(self) -> list[tuple[float, float]]:
        return [(_s_of(a), _s_of(b)) for a, b in zip(self.lo, self.hi)]


def box_log_measure(box: Box | Sequence[Sequence[float]]) -> float:
    """``prod_j ln((1 - lo_j) / (1 - hi_j))``.

    Accepts a :class:`Box` or a list of ``[lo, hi]`` intervals.
    """
    if not isinstance(box, Box):
        box = Box(tuple(iv[0] for iv in box), tuple(iv[1] for iv in box))
    return math.prod(hi - lo for lo, hi in box.s_bounds())


@dataclass(frozen=True)
class LogMeasureEstimate:
    value: float
    method: str
    grid_cells: int
    lower_bound_witness: float | None = None

    def to_dict(self) -> dict:
        return {"value": self.value, "method": self.method, "cells": self.grid_cells,
                "witness": self.lower_bound_witness}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


class RegionEvaluationError(WimanError, RuntimeError):
    """The region predicate failed at a grid cell."""

    def __init__(self, cell: tuple[int, ...], radii: tuple[float, ...], cause: BaseException):
        self.cell = cell
        self.radii = radii
        super().__init__(f"predicate failed at cell {cell} (r={radii}): {cause!r}")


def region_log_measure(
    predicate: Callable[[RadiusVector], bool],
    domain: Box,
    cells_per_axis: int | Sequence[int] = 64,
) -> LogMeasureEstimate:
    """Midpoint-rule estimate of the log measure of ``{r in domain : predicate(r)}``.

    The grid is uniform in ``s = ln(1/(1-r))``, so every cell carries the
    same weight and the estimate is exact for unions of grid cells.
    """
    p = domain.p
    cells = [int(cells_per_axis)] * p if np.ndim(cells_per_axis) == 0 else [int(c) for c in cells_per_axis]
    if len(cells) != p or min(cells) < 1:
        raise ValueError("cells_per_axis must be a positive count per axis")
    mids, widths = [], []
    for (a, b), c in zip(domain.s_bounds(), cells):
        w = (b - a) / c
        mids.append(a + w * (np.arange(c) + 0.5))
        widths.append(w)
    weight = math.prod(widths)
    hits = 0
    for cell in itertools.product(*(range(c) for c in cells)):
        s = [float(mids[j][i]) for j, i in enumerate(cell)]
        r = RadiusVector.from_log_inv_gaps(s)
        try:
            inside = bool(predicate(r))
        except Exception as exc:
            raise RegionEvaluationError(cell, r.radii, exc) from exc
        hits += inside
    return LogMeasureEstimate(hits * weight, "grid", math.prod(cells), None)


# ---------------------------------------------------------------------------
# Sharpness profile g(t) = ln(mu(t) / (1 - t)) for a_n = exp(sqrt(n)/2)
# ---------------------------------------------------------------------------


def ln_mu_sqrt_half(s: float) -> float:
    """``ln mu(t)`` for ``a_n = exp(sqrt(n)/2)`` at ``t = 1 - e^{-s}``.

    ``sqrt(n)/2 + n ln t`` is concave in ``n`` with its continuous maximum at
    ``1/(16 ln^2 t)``, so the integer maximum is at one of the two
    neighbours.  Agrees with :func:`maximal_term` (tested).
    """
    ln_t = math.log1p(-math.exp(-s))
    x = 1.0 / (16.0 * ln_t * ln_t)
    m = math.floor(x)
    return max(0.5 * math.sqrt(n) + n * ln_t for n in (m, m + 1))


class SharpnessProfile:
    """``G(s) = g(t)`` with ``t = 1 - e^{-s}``, tabulated for inversion.

    ``G`` is strictly increasing (``G' >= 1``), so inversion is a bracketed
    root find started from the table.
    """

    def __init__(self, s_min: float = 1e-4, s_max: float = 19.0, points: int = 2048):
        if not 0 < s_min < s_max:
            raise ValueError("need 0 < s_min < s_max")
        self.s_min = float(s_min)
        self.s_max = float(s_max)
        self.s_table = np.linspace(self.s_min, self.s_max, points)
        self.G_table = np.array([self.G(s) for s in self.s_table])

    @staticmethod
    def G(s: float) -> float:
        return ln_mu_sqrt_half(s) + s

    def g_eval(self, t: float) -> float:
        """``ln mu(t) + ln(1/(1-t))``."""
        if not 0.0 < t < 1.0:
            raise ValueError(f"t={t} outside (0, 1)")
        s = _s_of(t)
        if s > self.s_max:
            raise ValueError(f"t={t} beyond the profile domain (ln 1/(1-t) <= {self.s_max})")
        return self.G(s)

    def inverse_gap(self, v: float, tol: float = 1e-10) -> float:
        """``s`` with ``|G(s) - v| <= tol`` (or ``s`` pinned to float resolution)."""
        if not self.G_table[0] <= v <= self.G_table[-1]:
            raise BracketError(
                f"value {v} outside the profile range [{self.G_table[0]:.6g}, {self.G_table[-1]:.6g}]"
            )
        i = int(np.searchsorted(self.G_table, v))
        if self.G_table[i] == v:
            return float(self.s_table[i])
        a, b = float(self.s_table[i - 1]), float(self.s_table[i])
        # G is convex in s, so the secant slope at the right end bounds G' on [a, b]
        slope = 2.0 * max(1.0, (self.G_table[i] - self.G_table[i - 1]) / (b - a))
        if i + 1 < len(self.s_table):
            slope = max(slope, 2.0 * (self.G_table[i + 1] - self.G_table[i]) / (self.s_table[i + 1] - b))
        return brentq(lambda s: self.G(s) - v, a, b, xtol=tol / slope, rtol=4 * np.finfo(float).eps)

    def g_inverse(self, v: float, tol: float = 1e-10) -> float:
        """The ``t`` in ``(0, 1)`` with ``g(t) = v``."""
        return _r_of(self.inverse_gap(v, tol))


@functools.lru_cache(maxsize=1)
def default_profile() -> SharpnessProfile:
    return SharpnessProfile()


def g_eval(t: float) -> float:
    """``g(t) = ln(mu(t) / (1 - t))`` for ``a_n = exp(sqrt(n)/2)``."""
    return default_profile().g_eval(t)


def g_inverse(v: float, tol: float = 1e-10) -> float:
    return default_profile().g_inverse(v, tol)


class TwoSidedCheck(NamedTuple):
    holds: bool
    lhs: float
    rhs: float


def check_2s(t: float, tol: float = 1e-10) -> TwoSidedCheck:
    """Compare ``y - x`` with ``1 - y`` where ``g(x) = g(t)/3`` and ``g(y) = 3 g(t)``.

    ``lhs = (1-x) - (1-y)``, ``rhs = 1 - y``; both are computed from gaps
    so nothing cancels near ``t = 1``.
    """
    prof = default_profile()
    v = prof.g_eval(t)
    gx = math.exp(-prof.inverse_gap(v / 3.0, tol))
    gy = math.exp(-prof.inverse_gap(3.0 * v, tol))
    return TwoSidedCheck(gx - gy > gy, gx - gy, gy)


def _slice_gaps(s1: float, tol: float) -> tuple[float, float]:
    prof = default_profile()
    v = prof.G(s1)
    return prof.inverse_gap(v / 3.0, tol), prof.inverse_gap(3.0 * v, tol)


def estar_slice(t_star: float, r1: float, tol: float = 1e-10) -> tuple[float, float]:
    """The ``r_2``-interval ``(x, y)`` of the exceptional set above ``r_1``."""
    if not 0.0 < t_star < r1 < 1.0:
        raise ValueError(f"need 0 < t_star < r1 < 1, got t_star={t_star}, r1={r1}")
    sx, sy = _slice_gaps(_s_of(r1), tol)
    x, y = _r_of(sx), _r_of(sy)
    if not x < r1 < y:
        raise ValueError(f"slice ({x}, {y}) does not straddle r1={r1}")
    return x, y


def estar_log_measure(
    t_star: float,
    upper: float,
    cells: int = 16,
    p: int = 2,
    tol: float = 1e-10,
    quad_rtol: float = 1e-8,
) -> LogMeasureEstimate:
    """Log measure of the exceptional set truncated to ``r_1 < upper``.

    In ``s`` coordinates the set is ``{s_1 > s*, s_x(s_1) < s_j < s_y(s_1)}``,
    so its measure is ``int (s_y - s_x)^(p-1) ds_1``; the integral is done
    by adaptive quadrature on ``cells`` equal pieces.  Each slice has log
    length at least ``ln 2`` once the two-sided condition holds, which gives
    the witness ``(ln 2)^(p-1) (s_upper - s*)``.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    if not 0.0 < t_star < upper < 1.0:
        raise ValueError(f"need 0 < t_star < upper < 1, got {t_star}, {upper}")
    a, b = _s_of(t_star), _s_of(upper)

    def width(s1):
        sx, sy = _slice_gaps(s1, tol)
        return (sy - sx) ** (p - 1)

    edges = np.linspace(a, b, cells + 1)
    total = 0.0
    with warnings.catch_warnings():
        # the width has kinks where the maximal-term index jumps; quad may
        # report roundoff there, which is far below quad_rtol
        warnings.simplefilter("ignore", IntegrationWarning)
        for lo, hi in zip(edges[:-1], edges[1:]):
            val, _ = quad(width, lo, hi, epsabs=0.0, epsrel=quad_rtol, limit=100)
            total += val
    return LogMeasureEstimate(total, "quadrature", int(cells), math.log(2.0) ** (p - 1) * (b - a))


def default_t_star(k_min: int = 2, k_max: int = 18) -> float:
    """Smallest dyadic ``t = 1 - 2^{-k}`` from which the two-sided check holds
    for every tested ``k' >= k`` up to ``k_max``."""
    ok = [check_2s(-math.expm1(-k * math.log(2.0))).holds for k in range(k_min, k_max + 1)]
    if not ok[-1]:
        raise WimanError("two-sided condition fails at the top of the tested range")
    k = k_max
    while k - 1 >= k_min and ok[k - 1 - k_min]:
        k -= 1
    return 1.0 - 2.0**-k
