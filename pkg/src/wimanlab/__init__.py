"""Numerical laboratory for Wiman-type inequalities of power series in the
unit disc and polydisc, and their improvement under random signs."""

from .bounds import BoundForm, BoundParams, BoundReport, log_derivative_check, ratio_report, wiman_functional
from .errors import BracketError, BudgetExceededError, DimensionError, NonConvergenceError, WimanError
from .experiments import SweepConfig, SweepRow, fit_slope, levy_experiment, run_sweep
from .measure import (
    Box,
    LogMeasureEstimate,
    box_log_measure,
    check_2s,
    estar_log_measure,
    estar_slice,
    g_eval,
    g_inverse,
    region_log_measure,
)
from .series import (
    CoefficientRule,
    MaximalTerm,
    RadiusVector,
    TruncationSpec,
    log_coeff,
    maximal_term,
    plan_truncation,
    sum_modulus,
    tail_sum,
    truncation_degree,
)
from .signs import SignModel, SignRealization, realize_signs, sz_tail_experiment, wilson_interval
from .torus import TorusGridSpec, TorusMaxResult, parseval_residual, torus_max

__version__ = "0.1.0"

__all__ = [
    "BoundForm", "BoundParams", "BoundReport", "Box", "BracketError", "BudgetExceededError",
    "CoefficientRule", "DimensionError", "LogMeasureEstimate", "MaximalTerm", "NonConvergenceError",
    "RadiusVector", "SignModel", "SignRealization", "SweepConfig", "SweepRow", "TorusGridSpec",
    "TorusMaxResult", "TruncationSpec", "WimanError", "box_log_measure", "check_2s",
    "estar_log_measure", "estar_slice", "fit_slope", "g_eval", "g_inverse", "levy_experiment",
    "log_coeff", "log_derivative_check", "maximal_term", "parseval_residual", "plan_truncation",
    "ratio_report", "realize_signs", "region_log_measure", "run_sweep", "sum_modulus",
    "sz_tail_experiment", "tail_sum", "torus_max", "truncation_degree", "wiman_functional",
    "wilson_interval",
]
