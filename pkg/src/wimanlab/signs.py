"""Seeded multiplicative sign systems and the random-polynomial tail experiment.

Signs are produced by counter-based keyed hashing: the value at a
multi-index is a pure function of ``(seed, realization_id, index)``, so it
does not depend on enumeration order, array shape or scheduling.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .series import multi_index

SIGN_KINDS = ("Rademacher", "UnitPhase", "PlusOnly")
_ALIASES = {
    "rademacher": "Rademacher",
    "unit-phase": "UnitPhase",
    "unitphase": "UnitPhase",
    "steinhaus": "UnitPhase",
    "plus-only": "PlusOnly",
    "plusonly": "PlusOnly",
    "plus": "PlusOnly",
}

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_MASK64 = (1 << 64) - 1


def _mix(z: np.ndarray) -> np.ndarray:
    """splitmix64 finaliser, elementwise on uint64 arrays (wrapping)."""
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def hash_indices(seed: int, realization_id: int, indices: np.ndarray) -> np.ndarray:
    """64-bit keyed hash of each row of an ``(m, p)`` integer index array."""
    indices = np.asarray(indices, dtype=np.int64)
    if indices.ndim == 1:
        indices = indices[:, None]
    with np.errstate(over="ignore"):
        key = _mix(np.array([seed & _MASK64], dtype=np.uint64) + _GOLDEN)
        key = _mix(key ^ np.array([realization_id & _MASK64], dtype=np.uint64))
        h = np.broadcast_to(key, (indices.shape[0],)).copy()
        for j in range(indices.shape[1]):
            salt = np.uint64((j + 1) * 0x632BE59BD9B4E019 & _MASK64)
            h = _mix(h ^ (indices[:, j].astype(np.uint64) * _GOLDEN + salt))
    return h


def _uniform53(h: np.ndarray) -> np.ndarray:
    return (h >> np.uint64(11)).astype(np.float64) * 2.0**-53


@dataclass(frozen=True)
class SignModel:
    """Law of the sign system: ``Rademacher`` (+-1), ``UnitPhase`` (uniform on the circle) or ``PlusOnly``."""

    kind: str = "Rademacher"
    seed: int = 0

    def __post_init__(self):
        kind = self.kind if self.kind in SIGN_KINDS else _ALIASES.get(self.kind.lower().replace("_", "-"))
        if kind is None:
            raise ValueError(f"unknown sign model {self.kind!r}; expected one of {SIGN_KINDS}")
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "seed", int(self.seed) & _MASK64)

    @property
    def real(self) -> bool:
        return self.kind != "UnitPhase"

    def draw(self, realization_id: int, indices: np.ndarray) -> np.ndarray:
        indices = np.asarray(indices, dtype=np.int64)
        m = indices.shape[0]
        if self.kind == "PlusOnly":
            return np.ones(m)
        h = hash_indices(self.seed, realization_id, indices)
        if self.kind == "Rademacher":
            return np.where(h >> np.uint64(63), 1.0, -1.0)
        return np.exp(2j * np.pi * _uniform53(h))


@dataclass(frozen=True)
class SignRealization:
    """One draw ``n -> X_n(t)`` of a sign system.

    Values are computed on demand from the model; ``fixed`` pins explicit
    values (indices not listed default to +1), which is how hand-built
    examples are expressed.
    """

    model: SignModel | None
    realization_id: int = 0
    fixed: Mapping[tuple[int, ...], complex] | None = None

    @classmethod
    def explicit(cls, values: Mapping | Sequence) -> SignRealization:
        """Pinned signs, from ``{index: value}`` or a sequence indexed by ``n`` (p=1)."""
        if not isinstance(values, Mapping):
            values = {(i,): v for i, v in enumerate(values)}
        fixed = {multi_index(k): complex(v) for k, v in values.items()}
        for k, v in fixed.items():
            if abs(v) > 1.0 + 1e-15:
                raise ValueError(f"sign at {k} has modulus {abs(v)} > 1")
        return cls(None, 0, fixed)

    @property
    def real(self) -> bool:
        if self.fixed is not None:
            return all(v.imag == 0 for v in self.fixed.values())
        return self.model.real

    @property
    def unit_modulus(self) -> bool:
        if self.fixed is not None:
            return all(abs(abs(v) - 1.0) < 1e-12 for v in self.fixed.values())
        return True

    def at(self, indices) -> np.ndarray:
        """Values at the rows of an ``(m, p)`` index array."""
        indices = np.asarray(indices, dtype=np.int64)
        if indices.ndim == 1:
            indices = indices[:, None]
        if self.fixed is None:
            return self.model.draw(self.realization_id, indices)
        dtype = float if self.real else complex
        out = np.ones(indices.shape[0], dtype=dtype)
        for i, row in enumerate(map(tuple, indices.tolist())):
            if row in self.fixed:
                v = self.fixed[row]
                out[i] = v.real if dtype is float else v
        return out

    def __getitem__(self, n) -> complex:
        return self.at(np.array([multi_index(n)]))[0]

    def on_box(self, shape: Sequence[int]) -> np.ndarray:
        """Values on the full box ``prod_j [0, shape_j)``, shaped like it."""
        grids = np.indices(tuple(shape), dtype=np.int64).reshape(len(shape), -1).T
        return self.at(grids).reshape(tuple(shape))


def realize_signs(
    model: SignModel, realization_id: int, indices: Iterable | None = None
) -> SignRealization:
    """Realisation ``realization_id`` of ``model``.

    With ``indices`` the values at those indices are materialised into the
    returned object; they are identical to what lazy evaluation would give.
    """
    real = SignRealization(model, int(realization_id))
    if indices is None:
        return real
    idx = [multi_index(n) for n in indices]
    if not idx:
        return real
    vals = real.at(np.array(idx))
    return SignRealization(model, int(realization_id), dict(zip(idx, (complex(v) for v in vals))))


# ---------------------------------------------------------------------------
# Salem-Zygmund-type tail experiment
# ---------------------------------------------------------------------------


def wilson_interval(k: int, n: int, z: float = 1.959963984540054) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion ``k/n``."""
    if n <= 0:
        raise ValueError("n must be positive")
    phat = k / n
    denom = 1.0 + z * z / n
    centre = (phat + z * z / (2 * n)) / denom
    half = z * math.sqrt(phat * (1 - phat) / n + z * z / (4 * n * n)) / denom
    lo = 0.0 if k == 0 else max(0.0, centre - half)
    hi = 1.0 if k == n else min(1.0, centre + half)
    return lo, hi


@dataclass(frozen=True)
class TailExperimentRow:
    N: int
    A: float
    trials: int
    exceed_count: int
    s_N: float
    threshold: float

    @property
    def freq(self) -> float:
        return self.exceed_count / self.trials

    @property
    def wilson(self) -> tuple[float, float]:
        return wilson_interval(self.exceed_count, self.trials)


TAIL_CSV_HEADER = ("N", "A", "trials", "exceed", "s_N", "threshold", "freq", "wilson_lo", "wilson_hi")


def tail_rows_to_csv(rows: Sequence[TailExperimentRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TAIL_CSV_HEADER)
    for row in rows:
        lo, hi = row.wilson
        w.writerow(
            [row.N, repr(row.A), row.trials, row.exceed_count, repr(row.s_N), repr(row.threshold),
             repr(row.freq), repr(lo), repr(hi)]
        )
    return buf.getvalue()


def _simplex_indices(N: int, p: int) -> np.ndarray:
    grid = np.indices((N + 1,) * p, dtype=np.int64).reshape(p, -1).T
    return grid[grid.sum(axis=1) <= N]


def _coefficient_magnitudes(coeff, idx: np.ndarray) -> np.ndarray:
    if callable(coeff):
        return np.asarray(coeff(idx), dtype=float)
    c = np.asarray(coeff, dtype=float)
    if c.ndim == 0:
        return np.full(idx.shape[0], float(c))
    if idx.shape[1] != 1:
        raise ValueError("a coefficient list is only accepted for p=1; pass a callable for p>=2")
    if c.size <= idx[:, 0].max():
        raise ValueError(f"need {idx[:, 0].max() + 1} coefficients, got {c.size}")
    return c[idx[:, 0]]


def sz_tail_experiment(
    coeff: float | Sequence[float] | Callable[[np.ndarray], np.ndarray],
    model: SignModel,
    N_list: Sequence[int],
    A_grid: Sequence[float],
    trials: int,
    p: int = 1,
    grid=None,
) -> list[TailExperimentRow]:
    """Exceedance counts of ``max_psi |sum_{||n||<=N} c_n X_n e^{i n.psi}| >= A S_N sqrt(ln N)``.

    Each trial ``i`` uses realisation ``i`` of ``model``; one torus
    maximisation per ``(N, trial)`` serves every ``A``.
    """
    from .torus import TorusGridSpec, maximize_polynomial

    grid = grid or TorusGridSpec()
    if trials < 100:
        raise ValueError("trials must be >= 100")
    n_min = max(p, 4 * math.pi)
    rows = []
    for N in N_list:
        if N < n_min:
            raise ValueError(f"N={N} below max(p, 4 pi) = {n_min:.4f}")
        idx = _simplex_indices(int(N), p)
        mags = _coefficient_magnitudes(coeff, idx)
        s_N = float(np.sqrt(np.sum(mags**2)))
        shape = (int(N) + 1,) * p
        maxima = np.empty(trials)
        for t in range(trials):
            vals = mags * realize_signs(model, t).at(idx)
            arr = np.zeros(shape, dtype=vals.dtype)
            arr[tuple(idx.T)] = vals
            maxima[t] = maximize_polynomial(arr, grid).max_abs
        for A in A_grid:
            thr = float(A) * s_N * math.sqrt(math.log(N))
            rows.append(TailExperimentRow(int(N), float(A), trials, int(np.sum(maxima >= thr)), s_N, thr))
    return rows
