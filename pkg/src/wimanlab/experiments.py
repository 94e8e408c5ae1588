"""Radius sweeps on the dyadic schedule ``r = 1 - 2^{-k}`` and exponent read-out."""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
from scipy import fft as sfft
from scipy import stats

from .bounds import BoundForm, BoundParams, evaluate_functional
from .series import CoefficientRule, RadiusVector, TruncationSpec, plan_truncation
from .signs import SignModel, realize_signs
from .torus import TorusGridSpec, coefficient_box, maximize_polynomial

COMPLEX_BYTES = 16


def entries_for_budget(budget_mb: float) -> int:
    """Complex128 entries that fit in ``budget_mb`` MiB."""
    if not budget_mb > 0:
        raise ValueError("budget must be positive")
    return int(budget_mb * 2**20) // COMPLEX_BYTES


def applicable_forms(p: int) -> tuple[BoundForm, ...]:
    return tuple(f for f in BoundForm if p == 1 or not f.disc)


@dataclass(frozen=True)
class SweepConfig:
    rule: CoefficientRule
    sign_model: SignModel = field(default_factory=SignModel)
    delta: float = 0.25
    k_min: int = 4
    k_max: int = 10
    realizations: int = 1
    grid: TorusGridSpec = field(default_factory=TorusGridSpec)
    rel_cut: float = 1e-12
    lower_constant_C: float = 1.0
    workers: int = 1
    output_path: str | None = None

    def __post_init__(self):
        if self.k_min < 2:
            raise ValueError("k_min must be >= 2")
        if self.k_max < self.k_min:
            raise ValueError("k_max must be >= k_min")
        if self.realizations < 1:
            raise ValueError("realizations must be >= 1")
        if self.delta < 0:
            raise ValueError("delta must be >= 0")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")

    @property
    def p(self) -> int:
        return self.rule.p

    def with_budget_mb(self, budget_mb: float) -> SweepConfig:
        return replace(self, grid=replace(self.grid, max_entries=entries_for_budget(budget_mb)))

    def to_dict(self) -> dict:
        return {
            "rule": self.rule.to_dict(),
            "signs": self.sign_model.kind,
            "seed": self.sign_model.seed,
            "delta": self.delta,
            "k_min": self.k_min,
            "k_max": self.k_max,
            "realizations": self.realizations,
            "oversample": self.grid.oversample,
            "max_entries": self.grid.max_entries,
        }


@dataclass(frozen=True)
class SweepRow:
    k: int
    r: float
    abscissa: float
    ln_mu: float
    ln_M: tuple[float, ...]
    ln_frak_trunc: float
    ln_bound: dict
    tail_log_bound: float
    d: float
    d1: float
    caps: tuple[int, ...]
    total_cap: int
    oversample: int
    clamped: bool
    budget_truncated: bool

    @property
    def ln_M_median(self) -> float:
        return float(np.median(self.ln_M))

    @property
    def ln_M_min(self) -> float:
        return min(self.ln_M)

    @property
    def ln_M_max(self) -> float:
        return max(self.ln_M)

    @property
    def excess(self) -> float:
        """``median ln M - ln mu``, the slope-fit response."""
        return self.ln_M_median - self.ln_mu

    def ln_ratio(self, form: BoundForm | str) -> float:
        """Median over realisations of ``ln M - ln(bound)``."""
        return self.ln_M_median - self.ln_bound[BoundForm(form).value]

    def violations(self, form: BoundForm | str) -> int:
        form = BoundForm(form)
        b = self.ln_bound[form.value]
        if form.lower:
            return sum(m < b for m in self.ln_M)
        return sum(m > b for m in self.ln_M)


def _max_axis_cap(p: int, oversample: int, max_entries: int) -> int:
    """Largest uniform per-axis cap whose padded grid fits ``max_entries``."""
    side = int(math.floor(max_entries ** (1.0 / p))) + 1
    while side > 1 and sfft.next_fast_len(side) ** p > max_entries:
        side -= 1
    # largest c with next_fast_len(oversample (c+1)) <= side
    c = side // oversample - 1
    while c > 0 and sfft.next_fast_len(oversample * (c + 1)) > side:
        c -= 1
    return max(c, 0)


def plan_for_budget(
    rule: CoefficientRule, r: RadiusVector, delta: float, grid: TorusGridSpec, rel_cut: float = 1e-12,
    ln_mu: float | None = None,
) -> tuple[TruncationSpec, TorusGridSpec]:
    """Truncation and grid that fit ``grid.max_entries``.

    Natural caps at the configured oversampling first; then oversampling 2;
    then caps clamped to the budget (``budget_clamped`` set on the spec).
    """
    trunc = plan_truncation(rule, r, delta, rel_cut, ln_mu=ln_mu)
    box = [c + 1 for c in trunc.per_axis_caps]
    for ov in sorted({grid.oversample, 2}, reverse=True):
        g = replace(grid, oversample=ov)
        if math.prod(g.grid_shape(box)) <= grid.max_entries:
            return trunc, g
    g = replace(grid, oversample=2)
    cap = _max_axis_cap(r.p, 2, grid.max_entries)
    return plan_truncation(rule, r, delta, rel_cut, max_axis_cap=cap, ln_mu=ln_mu), g


def _sweep_k(cfg: SweepConfig, k: int, pool) -> SweepRow:
    r = RadiusVector.dyadic(k, cfg.p)
    trunc, grid = plan_for_budget(cfg.rule, r, cfg.delta, cfg.grid, cfg.rel_cut)
    ln_mu, mags = coefficient_box(cfg.rule, r, trunc)

    def one(rid: int) -> float:
        coef = mags * realize_signs(cfg.sign_model, rid).on_box(mags.shape)
        m = maximize_polynomial(coef, grid).max_abs
        return ln_mu + (math.log(m) if m > 0 else -math.inf)

    ids = range(cfg.realizations)
    ln_M = tuple(pool.map(one, ids)) if pool is not None else tuple(map(one, ids))
    params = BoundParams(cfg.delta, cfg.lower_constant_C)
    bounds, clamped = {}, trunc.clamped
    for form in applicable_forms(cfg.p):
        val, c = evaluate_functional(form, params, ln_mu, r)
        bounds[form.value] = val
        clamped = clamped or c
    return SweepRow(
        k=k,
        r=r.radii[0],
        abscissa=r.abscissa,
        ln_mu=ln_mu,
        ln_M=ln_M,
        ln_frak_trunc=ln_mu + math.log(float(mags.sum())),
        ln_bound=bounds,
        tail_log_bound=trunc.tail_log_estimate,
        d=trunc.total_degree_d,
        d1=trunc.total_degree_d1,
        caps=tuple(trunc.per_axis_caps),
        total_cap=trunc.total_cap,
        oversample=grid.oversample,
        clamped=clamped,
        budget_truncated=trunc.budget_clamped,
    )


def run_sweep(cfg: SweepConfig) -> list[SweepRow]:
    """One row per ``k``; realisation ``i`` uses sign stream ``i`` of ``cfg.sign_model``.

    Rows whose truncation had to be clamped to the memory budget carry
    ``budget_truncated=True`` and a ``tail_log_bound`` covering everything
    dropped.  Output does not depend on ``workers``.
    """
    pool = ThreadPoolExecutor(cfg.workers) if cfg.workers > 1 else None
    try:
        return [_sweep_k(cfg, k, pool) for k in range(cfg.k_min, cfg.k_max + 1)]
    finally:
        if pool is not None:
            pool.shutdown()


# ---------------------------------------------------------------------------
# Read-out
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    stderr: float
    intercept: float
    n: int


RESPONSES: dict[str, Callable[[SweepRow], float]] = {
    "excess": lambda row: row.excess,
    "excess_min": lambda row: row.ln_M_min - row.ln_mu,
    "excess_max": lambda row: row.ln_M_max - row.ln_mu,
    "ln_M": lambda row: row.ln_M_median,
    "ln_mu": lambda row: row.ln_mu,
}


def fit_slope(rows: Sequence, response: str | Callable = "excess", abscissa: Callable | None = None) -> SlopeFit:
    """OLS slope (and its standard error) of ``response`` against the abscissa
    ``sum_j ln(1/(1-r_j))``."""
    if len(rows) < 4:
        raise ValueError(f"need at least 4 rows, got {len(rows)}")
    resp = RESPONSES[response] if isinstance(response, str) else response
    absc = abscissa or (lambda row: row.abscissa)
    x = np.array([absc(row) for row in rows], dtype=float)
    y = np.array([resp(row) for row in rows], dtype=float)
    if not np.all(np.isfinite(x)) or not np.all(np.isfinite(y)):
        raise ValueError("non-finite abscissa or response")
    if np.ptp(x) == 0:
        raise ValueError("degenerate abscissa: all rows share one radius")
    fit = stats.linregress(x, y)
    return SlopeFit(float(fit.slope), float(fit.stderr), float(fit.intercept), len(rows))


@dataclass(frozen=True)
class LevyResult:
    det: SlopeFit
    rand: SlopeFit
    det_rows: list
    rand_rows: list

    @property
    def ratio(self) -> float:
        return self.rand.slope / self.det.slope

    def to_dict(self) -> dict:
        return {
            "det_slope": self.det.slope,
            "det_stderr": self.det.stderr,
            "rand_slope": self.rand.slope,
            "rand_stderr": self.rand.stderr,
            "ratio": self.ratio,
            "budget_truncated": any(r.budget_truncated for r in self.det_rows + self.rand_rows),
        }


def levy_experiment(cfg: SweepConfig) -> LevyResult:
    """Paired sweeps: ``PlusOnly`` (one realisation) and ``cfg.sign_model``."""
    det_cfg = replace(cfg, sign_model=SignModel("PlusOnly", cfg.sign_model.seed), realizations=1)
    det_rows = run_sweep(det_cfg)
    rand_rows = run_sweep(cfg)
    return LevyResult(fit_slope(det_rows), fit_slope(rand_rows), det_rows, rand_rows)


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------


def sweep_csv_header(p: int) -> list[str]:
    head = [
        "k", "r", "abscissa", "ln_mu", "ln_M_median", "ln_M_min", "ln_M_max", "realizations",
        "ln_frak_trunc", "tail_log_bound", "d", "d1", "caps", "total_cap", "oversample",
        "clamped", "budget_truncated",
    ]
    for form in applicable_forms(p):
        head += [f"ln_bound_{form.value}", f"ln_ratio_{form.value}", f"violations_{form.value}"]
    return head


def rows_to_csv(rows: Sequence[SweepRow], p: int) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(sweep_csv_header(p))
    for row in rows:
        line = [
            row.k, repr(row.r), repr(row.abscissa), repr(row.ln_mu), repr(row.ln_M_median),
            repr(row.ln_M_min), repr(row.ln_M_max), len(row.ln_M), repr(row.ln_frak_trunc),
            repr(row.tail_log_bound), repr(row.d), repr(row.d1), ";".join(map(str, row.caps)),
            row.total_cap, row.oversample, int(row.clamped), int(row.budget_truncated),
        ]
        for form in applicable_forms(p):
            line += [repr(row.ln_bound[form.value]), repr(row.ln_ratio(form)), row.violations(form)]
        w.writerow(line)
    return buf.getvalue()


def realizations_to_csv(rows: Sequence[SweepRow]) -> str:
    """Long format: one line per ``(k, realisation)``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["k", "realization", "ln_mu", "ln_M"])
    for row in rows:
        for i, m in enumerate(row.ln_M):
            w.writerow([row.k, i, repr(row.ln_mu), repr(m)])
    return buf.getvalue()


def config_from_json(text: str) -> dict:
    """Parse a JSON config file into a flat ``{flag_name: value}`` dict."""
    obj = json.loads(text)
    if not isinstance(obj, dict):
        raise ValueError("config must be a JSON object")
    return {k.replace("-", "_"): v for k, v in obj.items()}
