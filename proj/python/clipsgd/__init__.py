"""Clipped SGD with double sampling for (L0, L1)-smooth convex problems."""

from ._clipsgd import (
    Objective,
    cosh,
    quadratic,
    quartic_synthetic,
    quartic_regression,
    harmonic_diagonal,
    clip_factor,
    threshold,
    step_scale,
    run,
    run_ensemble,
    list_checks,
    run_check,
    load_spec,
    run_experiment,
    spec_schema,
    ingest_csv,
    log_plus,
    project_ball,
    VARIANTS,
)

__all__ = [
    "Objective",
    "cosh",
    "quadratic",
    "quartic_synthetic",
    "quartic_regression",
    "harmonic_diagonal",
    "clip_factor",
    "threshold",
    "step_scale",
    "run",
    "run_ensemble",
    "list_checks",
    "run_check",
    "load_spec",
    "run_experiment",
    "spec_schema",
    "ingest_csv",
    "log_plus",
    "project_ball",
    "VARIANTS",
]
