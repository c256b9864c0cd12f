"""Sparse group lasso penalized quantile regression by dual ADMM."""

from ._sglq import (
    DivergenceError,
    InvalidInput,
    IterativeFailure,
    box_project,
    check_loss,
    fit,
    group_soft_threshold,
    lambda_grid,
    lambda_max,
    metrics,
    objective,
    prox_h,
    sample_quantile,
    simulate,
    soft_threshold,
    solve_path,
)

__all__ = [
    "DivergenceError",
    "InvalidInput",
    "IterativeFailure",
    "box_project",
    "check_loss",
    "fit",
    "group_soft_threshold",
    "lambda_grid",
    "lambda_max",
    "metrics",
    "objective",
    "prox_h",
    "sample_quantile",
    "simulate",
    "soft_threshold",
    "solve_path",
]
