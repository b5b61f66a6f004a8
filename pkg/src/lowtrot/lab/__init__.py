"""Measurement, certification and sweep engine built on dense oracles."""

from .measure import (
    DegenerateSeriesError,
    FitResult,
    VacuousLadderWarning,
    corollary_check,
    corollary_checks,
    fit_loglog,
    formula_errors,
    identity_residual,
    measure_effective_leakage,
    measure_formula_error,
    measure_leakage,
    measure_moment_leakage,
    order_fit,
    order_fit_record,
)
from .model import DenseModel, as_model, gallery_model, resolve_energy
from .plan import PlanTable, crossover, plan_compare
from .records import (
    CSV_COLUMNS,
    ExperimentRecord,
    read_csv,
    summarize,
    to_csv,
    to_json,
    write_records,
)
from .sweep import ConfigError, SweepConfig, SweepResult, acceptance_tasks, sweep

__all__ = [
    "CSV_COLUMNS", "ConfigError", "DegenerateSeriesError", "DenseModel", "ExperimentRecord", "FitResult",
    "PlanTable", "SweepConfig", "SweepResult", "VacuousLadderWarning", "acceptance_tasks", "as_model",
    "corollary_check", "corollary_checks", "crossover", "fit_loglog", "formula_errors", "gallery_model",
    "identity_residual", "measure_effective_leakage", "measure_formula_error", "measure_leakage",
    "measure_moment_leakage", "order_fit", "order_fit_record", "plan_compare", "read_csv", "resolve_energy",
    "summarize", "sweep", "to_csv", "to_json", "write_records",
]
