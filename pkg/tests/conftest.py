import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


def oracle_log_coeff(rule, idx):
    """``ln |a_n|`` from the defining formulas, vectorised over rows of ``idx``."""
    idx = np.asarray(idx, dtype=float)
    if rule.kind == "Geometric":
        return np.zeros(len(idx))
    if rule.kind == "PowerExp":
        return idx[:, 0] ** rule.epsilon
    if rule.kind == "Sqrt":
        return np.sqrt(idx[:, 0])
    if rule.kind in ("SqrtHalf", "ProductSqrtHalf"):
        return np.sqrt(idx).sum(axis=1) / 2
    table = dict(rule.table)
    return np.array([table.get(tuple(int(v) for v in n), -np.inf) for n in idx])


def brute_log_terms(rule, r, n_max):
    """``ln |a_n| r^n`` on the full box ``[0, n_max]^p`` by direct evaluation."""
    p = r.p
    idx = np.indices((n_max + 1,) * p).reshape(p, -1).T
    ln_r = np.array([math.log(x) if x > 0 else -np.inf for x in r.radii])
    with np.errstate(invalid="ignore"):
        powers = np.where(idx > 0, idx * ln_r, 0.0).sum(axis=1)
    return idx, oracle_log_coeff(rule, idx) + powers


@pytest.fixture
def brute():
    return brute_log_terms


def rel(a, b):
    return abs(a - b) / max(1.0, abs(b))


@pytest.fixture
def close():
    return lambda a, b, tol: rel(a, b) <= tol and not math.isnan(a)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
