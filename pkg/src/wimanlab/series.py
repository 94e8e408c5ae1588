"""Coefficient models, maximal term, modulus sums, truncation degrees and tails.

Every magnitude is carried as a natural logarithm: near r -> 1 the maximal
term of ``sum exp(sqrt(n)/2) z**n`` passes ``e**250`` long before the sweeps
stop, so nothing here ever exponentiates an un-normalised quantity.

The built-in coefficient kinds are *separable*: ``ln|a_n| = sum_j phi_j(n_j)``
with every ``phi_j`` concave.  Each per-axis term sequence
``phi_j(n) + n ln r_j`` is then log-concave, which buys two things used
throughout:

* the maximal term is found by integer ternary search (O(log) evaluations);
* a partial sum can be stopped with a certified bound on the remainder,
  because past any index the term ratios are non-increasing.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Callable, Iterable, Mapping, NamedTuple, Sequence

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import logsumexp

from .errors import DimensionError, NonConvergenceError

HARD_TERM_CAP = 10**8
# largest index where float64 still resolves consecutive integers
INDEX_CEIL = 2**53
# stand-in for caps whose formula value overflows float64
UNBOUNDED_CAP = 2**62

LN2 = math.log(2.0)

_KIND_ALIASES = {
    "geometric": "Geometric",
    "power-exp": "PowerExp",
    "powerexp": "PowerExp",
    "sqrt-half": "SqrtHalf",
    "sqrthalf": "SqrtHalf",
    "sqrt": "Sqrt",
    "product-sqrt-half": "ProductSqrtHalf",
    "productsqrthalf": "ProductSqrtHalf",
    "table": "Table",
}
KINDS = ("Geometric", "PowerExp", "SqrtHalf", "Sqrt", "ProductSqrtHalf", "Table")


def canonical_kind(name: str) -> str:
    if name in KINDS:
        return name
    try:
        return _KIND_ALIASES[name.lower().replace("_", "-")]
    except KeyError:
        raise ValueError(f"unknown coefficient kind {name!r}; expected one of {KINDS}") from None


def multi_index(n: int | Iterable[int]) -> tuple[int, ...]:
    """Normalise ``n`` to a tuple of non-negative ints."""
    if isinstance(n, (int, np.integer)):
        n = (int(n),)
    n = tuple(int(v) for v in n)
    if any(v < 0 for v in n):
        raise ValueError(f"multi-index entries must be >= 0, got {n}")
    return n


def norm(n: Sequence[int]) -> int:
    return int(sum(n))


@dataclass(frozen=True)
class CoefficientRule:
    """Closed-form coefficient magnitudes ``|a_n|`` over multi-indices.

    ``Table`` rules hold a finite map from multi-index to ``ln|a_n|``;
    indices absent from the table have ``a_n = 0``.
    """

    kind: str
    p: int = 1
    epsilon: float | None = None
    table: tuple[tuple[tuple[int, ...], float], ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", canonical_kind(self.kind))
        if self.p < 1:
            raise ValueError("dimension p must be >= 1")
        if self.kind in ("PowerExp", "SqrtHalf", "Sqrt") and self.p != 1:
            raise DimensionError(f"{self.kind} is defined for p=1 only")
        if self.kind == "PowerExp":
            if self.epsilon is None or not 0.0 < self.epsilon < 1.0:
                raise ValueError("PowerExp needs epsilon in (0, 1)")
        if self.kind == "Table":
            if not self.table:
                raise ValueError("Table rule needs at least one entry")
            for idx, val in self.table:
                if len(idx) != self.p:
                    raise DimensionError(f"table index {idx} has dimension != {self.p}")
                if any(v < 0 for v in idx):
                    raise ValueError(f"table index {idx} has a negative entry")
                if not math.isfinite(val):
                    raise ValueError(f"table entry {idx} -> {val} is not finite")

    # constructors -----------------------------------------------------------

    @classmethod
    def geometric(cls, p: int = 1) -> CoefficientRule:
        return cls("Geometric", p)

    @classmethod
    def power_exp(cls, epsilon: float) -> CoefficientRule:
        return cls("PowerExp", 1, epsilon=float(epsilon))

    @classmethod
    def sqrt_half(cls) -> CoefficientRule:
        return cls("SqrtHalf", 1)

    @classmethod
    def sqrt(cls) -> CoefficientRule:
        return cls("Sqrt", 1)

    @classmethod
    def product_sqrt_half(cls, p: int = 2) -> CoefficientRule:
        return cls("ProductSqrtHalf", p)

    @classmethod
    def from_table(cls, entries: Mapping | Iterable, p: int | None = None) -> CoefficientRule:
        """Build a Table rule from ``{index: ln|a_n|}`` or ``[(index, ln|a_n|), ...]``."""
        items = entries.items() if isinstance(entries, Mapping) else entries
        pairs = {}
        for idx, val in items:
            idx = multi_index(idx)
            pairs[idx] = float(val)
        if p is None:
            p = len(next(iter(pairs)))
        return cls("Table", p, table=tuple(sorted(pairs.items())))

    # serialisation ----------------------------------------------------------

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "p": self.p}
        if self.epsilon is not None:
            out["epsilon"] = self.epsilon
        if self.table is not None:
            out["table"] = [[*idx, val] for idx, val in self.table]
        return out

    @classmethod
    def from_dict(cls, obj: Mapping) -> CoefficientRule:
        kind = canonical_kind(obj["kind"])
        p = int(obj.get("p", 1))
        if kind == "Table":
            rows = obj["table"]
            return cls.from_table(((row[:-1], row[-1]) for row in rows), p=p)
        eps = obj.get("epsilon")
        return cls(kind, p, epsilon=None if eps is None else float(eps))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> CoefficientRule:
        return cls.from_dict(json.loads(text))

    # evaluation -------------------------------------------------------------

    @property
    def separable(self) -> bool:
        return self.kind != "Table"

    @cached_property
    def table_map(self) -> dict[tuple[int, ...], float]:
        return dict(self.table or ())

    @cached_property
    def table_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        idx = np.array([k for k, _ in self.table], dtype=np.int64).reshape(-1, self.p)
        val = np.array([v for _, v in self.table], dtype=float)
        return idx, val

    def axis_log(self, axis: int, n) -> np.ndarray:
        """Per-axis log-coefficient ``phi_axis(n)`` for separable kinds."""
        n = np.asarray(n, dtype=float)
        if self.kind == "Geometric":
            return np.zeros_like(n)
        if self.kind == "PowerExp":
            return n**self.epsilon
        if self.kind in ("SqrtHalf", "ProductSqrtHalf"):
            return 0.5 * np.sqrt(n)
        if self.kind == "Sqrt":
            return np.sqrt(n)
        raise TypeError("Table rules are not separable")

    def stationary_point(self, ln_r: float) -> float:
        """Continuous maximiser of ``phi(x) + x ln r`` along one axis."""
        a = -ln_r
        if self.kind == "Geometric" or a == math.inf:
            return 0.0
        if self.kind == "PowerExp":
            return (self.epsilon / a) ** (1.0 / (1.0 - self.epsilon))
        if self.kind in ("SqrtHalf", "ProductSqrtHalf"):
            return 1.0 / (16.0 * a * a)
        if self.kind == "Sqrt":
            return 1.0 / (4.0 * a * a)
        raise TypeError("Table rules are not separable")


def log_coeff(rule: CoefficientRule, n) -> float:
    """``ln|a_n|`` for the multi-index ``n``."""
    n = multi_index(n)
    if len(n) != rule.p:
        raise DimensionError(f"multi-index {n} has dimension {len(n)}, rule has p={rule.p}")
    if rule.kind == "Table":
        try:
            return rule.table_map[n]
        except KeyError:
            raise KeyError(f"index {n} not in coefficient table") from None
    return float(sum(rule.axis_log(j, nj) for j, nj in enumerate(n)))


@dataclass(frozen=True)
class RadiusVector:
    """A polyradius ``r`` in ``[0,1)^p`` with cached ``ln(1/(1-r_j))``.

    Build from gaps when ``1-r`` must be exact (``from_log_inv_gaps``);
    ``r = 1 - 2**-k`` is ``dyadic(k, p)``.
    """

    radii: tuple[float, ...]
    log_inv_gaps: tuple[float, ...]

    def __post_init__(self):
        if len(self.radii) != len(self.log_inv_gaps) or not self.radii:
            raise ValueError("radii and log_inv_gaps must be non-empty and equal length")
        for r, s in zip(self.radii, self.log_inv_gaps):
            if not 0.0 <= r < 1.0:
                raise ValueError(f"radius {r} outside [0, 1)")
            if not (s >= 0.0 and math.isfinite(s)):
                raise ValueError(f"log inverse gap {s} must be finite and >= 0")
            if abs(-math.expm1(-s) - r) > 4e-16 * max(1.0, r):
                raise ValueError(f"radius {r} inconsistent with log inverse gap {s}")

    @classmethod
    def of(cls, *radii: float) -> RadiusVector:
        if len(radii) == 1 and not isinstance(radii[0], (int, float, np.floating, np.integer)):
            radii = tuple(radii[0])
        radii = tuple(float(r) for r in radii)
        for r in radii:
            if not 0.0 <= r < 1.0:
                raise ValueError(f"radius {r} outside [0, 1)")
        return cls(radii, tuple(-math.log1p(-r) for r in radii))

    @classmethod
    def from_log_inv_gaps(cls, gaps: Iterable[float]) -> RadiusVector:
        gaps = tuple(float(s) for s in gaps)
        return cls(tuple(-math.expm1(-s) for s in gaps), gaps)

    @classmethod
    def dyadic(cls, k: float, p: int = 1) -> RadiusVector:
        return cls.from_log_inv_gaps([k * LN2] * p)

    @property
    def p(self) -> int:
        return len(self.radii)

    @property
    def gaps(self) -> tuple[float, ...]:
        return tuple(math.exp(-s) for s in self.log_inv_gaps)

    @property
    def log_radii(self) -> tuple[float, ...]:
        out = []
        for s in self.log_inv_gaps:
            gap = math.exp(-s)
            out.append(-math.inf if gap >= 1.0 else math.log1p(-gap))
        return tuple(out)

    @property
    def abscissa(self) -> float:
        """``sum_j ln(1/(1-r_j))``."""
        return float(sum(self.log_inv_gaps))

    def shifted(self, axis: int, h: float) -> RadiusVector:
        radii = list(self.radii)
        radii[axis] += h
        return RadiusVector.of(*radii)


def _check_dims(rule: CoefficientRule, r: RadiusVector):
    if rule.p != r.p:
        raise DimensionError(f"rule has p={rule.p} but radius has p={r.p}")


# ---------------------------------------------------------------------------
# log-concave sequence machinery
# ---------------------------------------------------------------------------

LogTerm = Callable[[np.ndarray], np.ndarray]


def axis_term(rule: CoefficientRule, axis: int, ln_r: float) -> LogTerm:
    """Vectorised ``n -> phi_axis(n) + n ln r`` (log of the axis term)."""
    if ln_r == -math.inf:
        phi0 = float(rule.axis_log(axis, 0))

        def term(n):
            n = np.asarray(n)
            return np.where(n == 0, phi0, -np.inf)

        return term

    def term(n):
        n = np.asarray(n)
        return rule.axis_log(axis, n) + n.astype(float) * ln_r

    return term


class _Counter:
    def __init__(self, cap: int = HARD_TERM_CAP):
        self.cap = cap
        self.used = 0

    def add(self, k: int):
        self.used += k
        if self.used > self.cap:
            raise NonConvergenceError(
                f"series scan exceeded the hard cap of {self.cap} terms without a certified stop"
            )


def _at(f: LogTerm, n: int) -> float:
    return float(f(np.array([n], dtype=np.int64))[0])


def _upper_bracket(f: LogTerm, lo: int) -> int:
    """An index ``x >= lo`` at which the unimodal sequence has started to fall."""
    x, step = lo, 1
    fx = _at(f, x)
    while True:
        nxt = _at(f, x + 1)
        if nxt < fx or nxt == -math.inf:
            return x
        x = lo + step
        step *= 2
        if x > INDEX_CEIL:
            raise NonConvergenceError(
                "term sequence still increasing past 2**53; the series does not converge at this radius"
            )
        fx = _at(f, x)


def lc_peak(f: LogTerm, lo: int = 0, hi: int | None = None, hint: float | None = None) -> tuple[int, float]:
    """Argmax (smallest on ties) and max of a log-concave sequence on ``[lo, hi]``.

    ``hint`` (the continuous stationary point of a concave log-term) narrows
    the bracket when the sequence is seen to rise into it and fall out of
    it, or when the window is flat to rounding: far out the terms agree to
    an ulp and a bracketing search would chase noise.
    """
    if hint is not None and math.isfinite(hint) and hint < INDEX_CEIL:
        a = max(lo, int(math.floor(hint)) - 2)
        b = int(math.floor(hint)) + 3
        if hi is not None:
            b = min(b, hi)
        if a <= b:
            win = f(np.arange(max(lo, a - 1), b + 2, dtype=np.int64))
            rises = a == lo or win[0] <= win[1]
            falls = (hi is not None and b == hi) or win[-1] < win[-2]
            flat = float(np.ptp(win)) <= 64.0 * np.spacing(float(np.max(np.abs(win))))
            if (rises and falls) or flat:
                lo, hi = a, b
    if hi is None:
        hi = _upper_bracket(f, lo)
    a, b = lo, hi
    cache: dict[int, float] = {}

    def val(i):
        if i not in cache:
            cache[i] = _at(f, i)
        return cache[i]

    while b - a > 2:
        m1 = a + (b - a) // 3
        m2 = b - (b - a) // 3
        if val(m1) < val(m2):
            a = m1 + 1
        else:
            b = m2
    idx = np.arange(a, b + 1, dtype=np.int64)
    vals = f(idx)
    k = int(np.argmax(vals))
    return int(idx[k]), float(vals[k])


def lc_logsum(
    f: LogTerm,
    lo: int = 0,
    hi: int | None = None,
    rel_tol: float = 1e-15,
    counter: _Counter | None = None,
) -> float:
    """``ln sum_{n=lo}^{hi} exp(f(n))`` for a log-concave sequence.

    Sums outward from the peak in growing chunks. On an unbounded side the
    scan stops once ``v_last * q / (1 - q) <= rel_tol * running``, with ``q``
    the last term ratio; log-concavity makes every later ratio ``<= q``.
    """
    if hi is not None and hi < lo:
        return -math.inf
    counter = counter or _Counter()
    m, fm = lc_peak(f, lo, hi)
    if fm == -math.inf:
        return -math.inf
    acc = 1.0
    ln_tol = math.log(rel_tol)

    # right of the peak
    end, chunk = m, 64
    while hi is None or end < hi:
        a = end + 1
        b = a + chunk - 1 if hi is None else min(a + chunk - 1, hi)
        v = f(np.arange(a, b + 1, dtype=np.int64))
        counter.add(v.size)
        acc += float(np.exp(v - fm).sum())
        end = b
        if hi is not None and end >= hi:
            break
        last = float(v[-1])
        if last == -math.inf:
            break
        prev = float(v[-2]) if v.size > 1 else fm
        lq = last - prev
        if lq < 0:
            ln_rem = last - fm + lq - math.log(-math.expm1(lq))
            if ln_rem <= ln_tol + math.log(acc):
                break
        chunk = min(chunk * 2, 1 << 22)

    # left of the peak
    start, chunk = m, 64
    while start > lo:
        b = start - 1
        a = max(lo, b - chunk + 1)
        v = f(np.arange(a, b + 1, dtype=np.int64))
        counter.add(v.size)
        acc += float(np.exp(v - fm).sum())
        start = a
        if start <= lo:
            break
        first = float(v[0])
        if first == -math.inf:
            break
        nxt = float(v[1]) if v.size > 1 else fm
        lq = first - nxt
        if lq < 0:
            # bounded side: the rest is at most (a - lo) terms, and also geometric
            ln_rem = first - fm + lq - math.log(-math.expm1(lq))
            if ln_rem <= ln_tol + math.log(acc):
                break
        chunk = min(chunk * 2, 1 << 22)
    return fm + math.log(acc)


# ---------------------------------------------------------------------------
# maximal term, modulus sum, tails
# ---------------------------------------------------------------------------


class MaximalTerm(NamedTuple):
    ln_mu: float
    argmax: tuple[int, ...]


def _table_log_terms(rule: CoefficientRule, r: RadiusVector) -> tuple[np.ndarray, np.ndarray]:
    idx, val = rule.table_arrays
    ln_r = np.array(r.log_radii)
    with np.errstate(invalid="ignore"):
        contrib = np.where(idx > 0, idx * ln_r, 0.0)
    return idx, val + contrib.sum(axis=1)


def maximal_term(rule: CoefficientRule, r: RadiusVector, verify: bool = True) -> MaximalTerm:
    """``ln mu_f(r)`` and the (lexicographically smallest) maximising index.

    Separable rules maximise each axis independently by integer ternary
    search; ``verify`` re-scans a window of ``+-ceil(3 sqrt(n*))`` around each
    axis maximiser and keeps the best value found.
    """
    _check_dims(rule, r)
    if rule.kind == "Table":
        idx, terms = _table_log_terms(rule, r)
        best = terms.max()
        cands = sorted(tuple(int(v) for v in idx[i]) for i in np.flatnonzero(terms == best))
        return MaximalTerm(float(best), cands[0])
    ln_mu, arg = 0.0, []
    for j, ln_r in enumerate(r.log_radii):
        f = axis_term(rule, j, ln_r)
        m, fm = lc_peak(f, 0, hint=rule.stationary_point(ln_r))
        if verify:
            w = math.ceil(3.0 * math.sqrt(max(m, 1)))
            win = np.arange(max(0, m - w), m + w + 1, dtype=np.int64)
            vals = f(win)
            k = int(np.argmax(vals))
            if vals[k] > fm:
                m, fm = int(win[k]), float(vals[k])
        ln_mu += fm
        arg.append(m)
    return MaximalTerm(float(ln_mu), tuple(arg))


def sum_modulus(rule: CoefficientRule, r: RadiusVector, rel_tol: float = 1e-12) -> float:
    """``ln M_frak(r) = ln sum_n |a_n| r^n``.

    Separable rules factor into per-axis sums, each accumulated outward
    from its peak until the certified remainder is below ``rel_tol``.
    """
    _check_dims(rule, r)
    if rel_tol <= 0:
        raise ValueError("rel_tol must be > 0")
    if rule.kind == "Table":
        _, terms = _table_log_terms(rule, r)
        return float(logsumexp(terms))
    counter = _Counter()
    return float(
        sum(
            lc_logsum(axis_term(rule, j, ln_r), 0, None, rel_tol / rule.p, counter)
            for j, ln_r in enumerate(r.log_radii)
        )
    )


def _tail_separable(terms: list[LogTerm], totals: list[float], D: int, rel_tol: float, counter) -> float:
    """``ln sum_{||n|| >= D}`` of a product of per-axis log-concave sequences.

    Peels off the first axis:
    ``T_p(D) = sum_{i<D} u_i T_{p-1}(D-i) + U(D) * S_rest``.  The summand is
    log-concave in ``i`` (tails of log-concave sequences are log-concave).
    """
    if D <= 0:
        return float(sum(totals))
    if len(terms) == 1:
        return lc_logsum(terms[0], D, None, rel_tol, counter)
    u, rest, rest_totals = terms[0], terms[1:], totals[1:]
    memo: dict[int, float] = {}

    def inner(m: int) -> float:
        if m not in memo:
            memo[m] = _tail_separable(rest, rest_totals, m, rel_tol, counter)
        return memo[m]

    def h(i):
        i = np.asarray(i)
        return u(i) + np.array([inner(D - int(k)) for k in i.ravel()]).reshape(i.shape)

    head = lc_logsum(h, 0, D - 1, rel_tol, counter)
    far = lc_logsum(u, D, None, rel_tol, counter) + float(sum(rest_totals))
    return float(np.logaddexp(head, far))


def _tail_saddle_bound(rule: CoefficientRule, log_radii: Sequence[float], D: int) -> float:
    """Upper bound ``min_lam [-D lam + ln M_frak(e**lam r)]`` on the degree-``D`` tail.

    Valid for every ``lam >= 0`` since ``1 <= e**(lam (||n|| - D))`` on the
    tail.  ``lam`` is kept below half the smallest ``ln(1/r_j)`` so the
    tilted sums stay cheap; the bound is then loose by far less than the
    magnitudes it is compared against.
    """
    live = [(j, lr) for j, lr in enumerate(log_radii) if lr > -math.inf]
    const = sum(float(rule.axis_log(j, 0)) for j, lr in enumerate(log_radii) if lr == -math.inf)
    if not live:
        return -math.inf if D > 0 else const
    counter = _Counter()

    def F(lam):
        return -D * lam + sum(
            lc_logsum(axis_term(rule, j, lr + lam), 0, None, 1e-12, counter) for j, lr in live
        )

    hi = 0.5 * min(-lr for _, lr in live)
    res = minimize_scalar(F, bounds=(0.0, hi), method="bounded", options={"xatol": 1e-10 * hi})
    return const + min(F(0.0), float(res.fun), F(hi))


def tail_sum(
    rule: CoefficientRule,
    r: RadiusVector,
    d: float,
    rel_tol: float = 1e-12,
    allow_bound: bool = True,
    exact_term_cap: int = 2_000_000,
) -> float:
    """``ln sum_{||n|| >= ceil(d)} |a_n| r^n``.

    Exact for tables and for ``p = 1``.  For separable ``p >= 2`` the shells
    near a huge ``d`` are nearly flat (``~d`` comparable terms each), so once
    exact summation would scan more than ``exact_term_cap`` terms the
    saddle-point upper bound is returned instead (``allow_bound=False``
    raises ``NonConvergenceError``).
    """
    _check_dims(rule, r)
    D = max(0, math.ceil(d))
    if rule.kind == "Table":
        idx, terms = _table_log_terms(rule, r)
        sel = terms[idx.sum(axis=1) >= D]
        return float(logsumexp(sel)) if sel.size else -math.inf
    if D > INDEX_CEIL:
        if not allow_bound:
            raise NonConvergenceError(f"tail degree {D} is beyond exactly representable indices")
        return _tail_saddle_bound(rule, r.log_radii, D)
    terms = [axis_term(rule, j, ln_r) for j, ln_r in enumerate(r.log_radii)]
    if rule.p == 1:
        return lc_logsum(terms[0], D, None, rel_tol, _Counter())
    counter = _Counter(exact_term_cap if allow_bound else HARD_TERM_CAP)
    try:
        totals = [lc_logsum(f, 0, None, rel_tol, counter) for f in terms]
        return _tail_separable(terms, totals, D, rel_tol, counter)
    except NonConvergenceError:
        if not allow_bound:
            raise
    return _tail_saddle_bound(rule, r.log_radii, D)


# ---------------------------------------------------------------------------
# truncation degrees
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TruncationSpec:
    """Total-degree cut-offs ``d(r)``, ``d_1(r)`` and the caps actually used.

    ``total_cap`` bounds ``||n||`` and ``per_axis_caps`` bound each ``n_j``.
    ``tail_log_estimate`` is ``ln`` of the discarded part of ``sum |a_n| r^n``
    (or an upper bound on it).
    """

    total_degree_d: float
    total_degree_d1: float
    per_axis_caps: tuple[int, ...]
    tail_log_estimate: float
    ln_d: float = math.nan
    ln_d1: float = math.nan
    total_cap: int = UNBOUNDED_CAP
    clamped: bool = False
    delta_zero: bool = False
    budget_clamped: bool = False

    @property
    def p(self) -> int:
        return len(self.per_axis_caps)

    def to_dict(self) -> dict:
        return {
            "d": self.total_degree_d,
            "d1": self.total_degree_d1,
            "per_axis_caps": list(self.per_axis_caps),
            "total_cap": self.total_cap,
            "tail_log_estimate": self.tail_log_estimate,
            "clamped": self.clamped,
            "budget_clamped": self.budget_clamped,
        }


def _safe_exp(x: float) -> float:
    return math.exp(x) if x < 709.0 else math.inf


def _ceil_cap(x: float) -> int:
    return UNBOUNDED_CAP if not math.isfinite(x) or x >= UNBOUNDED_CAP else max(1, math.ceil(x))


def truncation_degree(ln_mu: float, r: RadiusVector, delta: float) -> TruncationSpec:
    """Degrees ``d(r)`` and ``d_1(r)`` past which the series tail is at most ``mu_f(r)``.

    ``d = prod_j (e/(1-r_j))**(2+3 delta) * ln**(p/2+1+p delta)(mu prod_j 1/(1-r_j))``,
    and ``d_1`` is the same with ``e**2 mu`` inside the logarithm.  Logarithm
    arguments below ``e`` are clamped to ``e`` and flagged.
    """
    if delta < 0:
        raise ValueError("delta must be >= 0")
    if delta == 0:
        warnings.warn("delta = 0: outside the range where the tail bound is proved", stacklevel=2)
    p = r.p
    G = r.abscissa
    ln_arg = ln_mu + G
    clamped = ln_arg < 1.0
    L = max(ln_arg, 1.0)
    L1 = max(ln_arg + 2.0, 1.0)
    a = 2.0 + 3.0 * delta
    expo = p / 2.0 + 1.0 + p * delta
    ln_d = p * a + a * G + expo * math.log(L)
    ln_d1 = p * a + a * G + expo * math.log(L1)
    d, d1 = _safe_exp(ln_d), _safe_exp(ln_d1)
    cap = _ceil_cap(2.0 * d1)
    return TruncationSpec(
        total_degree_d=d,
        total_degree_d1=d1,
        per_axis_caps=(cap,) * p,
        tail_log_estimate=ln_mu,
        ln_d=ln_d,
        ln_d1=ln_d1,
        total_cap=cap,
        clamped=clamped,
        delta_zero=delta == 0,
    )


def _numeric_axis_cap(f: LogTerm, ln_total: float, start: int, ln_cut: float, counter) -> int:
    """Smallest ``m >= start`` whose tail past ``m`` is below ``exp(ln_cut)`` relative."""

    def ok(m):
        return lc_logsum(f, m + 1, None, 1e-6, counter) - ln_total <= ln_cut

    if ok(start):
        return start
    lo, step = start, 16
    hi = start + step
    while not ok(hi):
        lo, step = hi, step * 2
        hi = start + step
        if hi > INDEX_CEIL:
            raise NonConvergenceError("could not find a negligible-tail cap")
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi


def plan_truncation(
    rule: CoefficientRule,
    r: RadiusVector,
    delta: float = 0.25,
    rel_cut: float = 1e-12,
    max_axis_cap: int | Sequence[int] | None = None,
    ln_mu: float | None = None,
) -> TruncationSpec:
    """Truncation actually used for torus evaluation.

    Per-axis caps are the smallest of ``ceil(2 d_1)``, the index past which
    the axis tail is below ``rel_cut`` of the axis sum, and ``max_axis_cap``.
    The tail estimate is the exact log of everything discarded (box
    complement), combined with the total-degree tail as an upper bound when
    ``ceil(2 d_1)`` cuts into the box.
    """
    _check_dims(rule, r)
    if ln_mu is None:
        ln_mu = maximal_term(rule, r).ln_mu
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        base = truncation_degree(ln_mu, r, delta)
    p = r.p
    if max_axis_cap is None:
        limits = [UNBOUNDED_CAP] * p
    elif isinstance(max_axis_cap, (int, np.integer)):
        limits = [int(max_axis_cap)] * p
    else:
        limits = [int(v) for v in max_axis_cap]
    ln_cut = math.log(rel_cut)
    counter = _Counter()

    if rule.kind == "Table":
        idx, terms = _table_log_terms(rule, r)
        numeric = [int(idx[:, j].max()) for j in range(p)]
    else:
        terms_f = [axis_term(rule, j, ln_r) for j, ln_r in enumerate(r.log_radii)]
        totals = [lc_logsum(f, 0, None, 1e-15, counter) for f in terms_f]
        peaks = [lc_peak(f, 0)[0] for f in terms_f]
        numeric = [
            _numeric_axis_cap(f, tot, pk, ln_cut, counter) for f, tot, pk in zip(terms_f, totals, peaks)
        ]

    caps = tuple(min(n, base.total_cap, lim) for n, lim in zip(numeric, limits))
    budget_clamped = any(lim < min(n, base.total_cap) for n, lim in zip(numeric, limits))
    total_cap = min(base.total_cap, sum(caps))

    if rule.kind == "Table":
        outside = (idx > np.array(caps)).any(axis=1) | (idx.sum(axis=1) > total_cap)
        tail = float(logsumexp(terms[outside])) if outside.any() else -math.inf
    else:
        ln_rel, ln_totals = [], 0.0
        for f, cap in zip(terms_f, caps):
            ln_b = lc_logsum(f, 0, cap, 1e-15, counter)
            ln_t = lc_logsum(f, cap + 1, None, 1e-15, counter)
            ln_totals += float(np.logaddexp(ln_b, ln_t))
            ln_rel.append(ln_t - ln_b)
        if max(ln_rel) == -math.inf:
            tail = -math.inf
        elif max(ln_rel) < -30.0:
            # 1 - prod(1/(1+x_j)) = sum x_j to relative error ~1e-13
            tail = ln_totals + float(logsumexp(ln_rel))
        else:
            keep = -sum(math.log1p(math.exp(v)) for v in ln_rel)
            tail = ln_totals + math.log(-math.expm1(keep))
        if total_cap < sum(caps):
            tail = float(np.logaddexp(tail, tail_sum(rule, r, total_cap + 1)))
    return replace(
        base,
        per_axis_caps=caps,
        total_cap=total_cap,
        tail_log_estimate=tail,
        budget_clamped=budget_clamped,
    )
