"""Maximum modulus of truncated (random) power series on the torus.

``|f|`` on ``{|z_j| <= r_j}`` peaks on the distinguished boundary
``|z_j| = r_j``, so the maximum modulus is the sup over ``psi`` of the
trigonometric polynomial ``h(psi) = sum_n c_n e^{i n.psi}`` with
``c_n = X_n a_n r^n / mu_f(r)``.  ``h`` is evaluated on an oversampled grid
by one multidimensional FFT of the zero-padded coefficient box, then the
best grid point is polished by coordinate ascent.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import NamedTuple

import numpy as np
import scipy.fft as sfft
from scipy.optimize import minimize_scalar

from .errors import BudgetExceededError, DimensionError
from .series import CoefficientRule, RadiusVector, TruncationSpec, axis_term, maximal_term
from .signs import SignRealization

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class TorusGridSpec:
    oversample: int = 4
    refine_steps: int = 20
    refine_tol: float = 1e-10
    max_entries: int = 2**26
    max_candidates: int = 8

    def __post_init__(self):
        if self.oversample < 2:
            raise ValueError("oversample must be >= 2")
        if self.max_candidates < 1:
            raise ValueError("max_candidates must be >= 1")
        if self.refine_steps < 0:
            raise ValueError("refine_steps must be >= 0")
        if not self.refine_tol > 0:
            raise ValueError("refine_tol must be > 0")

    def grid_shape(self, box_shape) -> tuple[int, ...]:
        return tuple(sfft.next_fast_len(self.oversample * int(m)) for m in box_shape)


@dataclass(frozen=True)
class TorusMaxResult:
    ln_max: float
    argmax_psi: tuple[float, ...]
    grid_ln_max: float
    tail_log_bound: float

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


class PolyMax(NamedTuple):
    max_abs: float
    psi: tuple[float, ...]
    grid_max_abs: float


def _phases(n: int, theta: float) -> np.ndarray:
    return np.exp(1j * theta * np.arange(n))


def _reduce(coef: np.ndarray, psi, keep: int) -> np.ndarray:
    """Contract every axis but ``keep`` against ``e^{i n_j psi_j}``."""
    out = coef
    for j in reversed(range(coef.ndim)):
        if j == keep:
            continue
        out = np.tensordot(out, _phases(coef.shape[j], psi[j]), axes=([j], [0]))
    return out


def evaluate_polynomial(coef: np.ndarray, psi) -> complex:
    """``sum_n coef[n] e^{i n.psi}`` at one point."""
    out = coef
    for j in reversed(range(coef.ndim)):
        out = np.tensordot(out, _phases(coef.shape[j], psi[j]), axes=([j], [0]))
    return complex(out)


def _line_max(fun, a: float, b: float, tol: float) -> tuple[float, float]:
    res = minimize_scalar(lambda x: -fun(x), bounds=(a, b), method="bounded", options={"xatol": tol})
    return float(res.x), float(-res.fun)


def _candidates(mag: np.ndarray, shape, limit: int, mirror: bool) -> list[tuple[tuple[int, ...], float]]:
    """Up to ``limit`` well-separated grid peaks, best first, with their grid values.

    With ``mirror`` (real coefficients, so ``|h(psi)| = |h(-psi)|``) the
    reflection of a picked cell counts as already picked.
    """
    flat = mag.ravel()
    pool = min(flat.size, 64 * limit)
    order = np.argpartition(flat, flat.size - pool)[flat.size - pool:]
    order = order[np.argsort(-flat[order], kind="stable")]
    picked: list[tuple[tuple[int, ...], float]] = []
    taken: list[tuple[int, ...]] = []
    for f in order:
        if len(picked) == limit:
            break
        cell = tuple(int(c) for c in np.unravel_index(int(f), shape))
        near = any(
            all(min(abs(a - b), L - abs(a - b)) <= 2 for a, b, L in zip(cell, q, shape)) for q in taken
        )
        if not near:
            picked.append((cell, float(flat[f])))
            taken.append(cell)
            if mirror:
                taken.append(tuple((-c) % L for c, L in zip(cell, shape)))
    return picked


def _ascend(coef: np.ndarray, psi: list, shape, grid: TorusGridSpec) -> tuple[float, list]:
    best = abs(evaluate_polynomial(coef, psi))
    for _ in range(grid.refine_steps):
        start = best
        for j in range(coef.ndim):
            b = _reduce(coef, psi, j)
            k = np.arange(b.shape[0], dtype=float)

            def sq(theta, b=b, k=k):
                v = np.dot(b, np.exp(1j * theta * k))
                return v.real * v.real + v.imag * v.imag

            step = TWO_PI / shape[j]
            theta, val = _line_max(sq, psi[j] - step, psi[j] + step, grid.refine_tol)
            edge = abs(abs(theta - psi[j]) - step) <= 2 * grid.refine_tol
            val = math.sqrt(val)
            if val > best:
                psi[j], best = theta, val
        # one axis: an interior line maximum is already final
        if coef.ndim == 1 and not edge:
            break
        if best - start <= grid.refine_tol * max(best, 1e-300):
            break
    return best, psi


def maximize_polynomial(coef: np.ndarray, grid: TorusGridSpec) -> PolyMax:
    """Max over the torus of ``|sum_n coef[n] e^{i n.psi}|``, ``coef`` indexed by the box ``n``.

    The oversampled FFT grid is searched first.  Separated grid peaks are
    then polished by coordinate ascent, best first, keeping the best result.
    For an analytic polynomial of degree ``n_j`` sampled with spacing
    ``2 pi / L_j`` the grid point nearest the maximiser keeps at least
    ``cos(sum_j pi n_j / (2 L_j))`` of the maximum, so a peak whose grid
    value is below that fraction of the best polished value is skipped.
    At most ``grid.max_candidates`` peaks are polished.
    """
    coef = np.asarray(coef)
    shape = grid.grid_shape(coef.shape)
    need = math.prod(shape)
    if need > grid.max_entries:
        raise BudgetExceededError(need, grid.max_entries)
    mag = np.abs(sfft.ifftn(coef, s=shape, norm="forward"))
    grid_best = float(mag.max())
    cells = _candidates(mag, shape, grid.max_candidates, not np.iscomplexobj(coef))
    del mag
    angle = sum(math.pi * (m - 1) / (2 * L) for m, L in zip(coef.shape, shape))
    keep = math.cos(angle) if angle < math.pi / 2 else 0.0
    best, best_psi = -1.0, None
    for cell, val in cells:
        if best_psi is not None and val <= keep * best:
            break
        psi = [TWO_PI * m / L for m, L in zip(cell, shape)]
        val, psi = _ascend(coef, psi, shape, grid)
        if val > best:
            best, best_psi = val, psi
    return PolyMax(best, tuple(float(x % TWO_PI) for x in best_psi), grid_best)


def coefficient_box(rule: CoefficientRule, r: RadiusVector, trunc: TruncationSpec) -> tuple[float, np.ndarray]:
    """``(ln mu_f(r), |a_n| r^n / mu_f(r))`` over the truncation box.

    Entries with ``||n|| > trunc.total_cap`` are zeroed.
    """
    if rule.p != r.p or trunc.p != r.p:
        raise DimensionError("rule, radius and truncation dimensions differ")
    ln_mu = maximal_term(rule, r).ln_mu
    shape = tuple(int(c) + 1 for c in trunc.per_axis_caps)
    if rule.kind == "Table":
        idx, val = rule.table_arrays
        ln_r = np.array(r.log_radii)
        with np.errstate(invalid="ignore"):
            contrib = np.where(idx > 0, idx * ln_r, 0.0).sum(axis=1)
        inside = (idx < np.array(shape)).all(axis=1)
        mags = np.zeros(shape)
        mags[tuple(idx[inside].T)] = np.exp(val[inside] + contrib[inside] - ln_mu)
    else:
        logs = [
            axis_term(rule, j, ln_r)(np.arange(shape[j], dtype=np.int64))
            for j, ln_r in enumerate(r.log_radii)
        ]
        tops = [float(v.max()) for v in logs]
        mags = np.exp(logs[0] - tops[0])
        for v, top in zip(logs[1:], tops[1:]):
            mags = np.multiply.outer(mags, np.exp(v - top))
        mags *= math.exp(sum(tops) - ln_mu)
    if trunc.total_cap < sum(shape) - len(shape):
        norms = np.indices(shape).sum(axis=0)
        mags[norms > trunc.total_cap] = 0.0
    return ln_mu, mags


def truncated_sum_modulus(rule: CoefficientRule, r: RadiusVector, trunc: TruncationSpec) -> float:
    """``ln sum |a_n| r^n`` over the truncation region, by direct summation."""
    ln_mu, mags = coefficient_box(rule, r, trunc)
    return ln_mu + math.log(float(mags.sum()))


def _check_budget(trunc: TruncationSpec, grid: TorusGridSpec):
    shape = grid.grid_shape(int(c) + 1 for c in trunc.per_axis_caps)
    need = math.prod(shape)
    if need > grid.max_entries:
        raise BudgetExceededError(need, grid.max_entries)


def torus_max(
    rule: CoefficientRule,
    signs: SignRealization,
    r: RadiusVector,
    trunc: TruncationSpec,
    grid: TorusGridSpec | None = None,
) -> TorusMaxResult:
    """``ln max_psi |sum_n X_n a_n r^n e^{i n.psi}|`` over the truncation box."""
    grid = grid or TorusGridSpec()
    _check_budget(trunc, grid)
    ln_mu, mags = coefficient_box(rule, r, trunc)
    coef = mags * signs.on_box(mags.shape)
    res = maximize_polynomial(coef, grid)

    def ln(x):
        return math.log(x) if x > 0 else -math.inf

    return TorusMaxResult(
        ln_max=ln_mu + ln(res.max_abs),
        argmax_psi=res.psi,
        grid_ln_max=ln_mu + ln(res.grid_max_abs),
        tail_log_bound=trunc.tail_log_estimate,
    )


def parseval_residual(
    rule: CoefficientRule,
    signs: SignRealization,
    r: RadiusVector,
    trunc: TruncationSpec,
    grid_points: int | None = None,
) -> float:
    """``|Q - S| / S`` with ``S = sum |a_n|^2 r^{2n}`` and ``Q`` the grid mean of ``|f(r e^{i theta})|^2``.

    An equispaced grid of at least ``2N+1`` points integrates a degree-``N``
    trigonometric polynomial's square modulus exactly.
    """
    if r.p != 1:
        raise DimensionError("Parseval residual is one-dimensional")
    if not signs.unit_modulus:
        raise ValueError("Parseval identity check needs unit-modulus signs")
    _, mags = coefficient_box(rule, r, trunc)
    N = mags.shape[0] - 1
    M = grid_points if grid_points is not None else sfft.next_fast_len(2 * N + 1)
    if M < 2 * N + 1:
        raise ValueError(f"grid of {M} points is smaller than 2N+1 = {2 * N + 1}")
    coef = mags * signs.on_box(mags.shape)
    vals = sfft.ifft(coef, n=M, norm="forward")
    Q = float(np.mean(vals.real**2 + vals.imag**2))
    S = float(np.sum(mags**2))
    return abs(Q - S) / S
