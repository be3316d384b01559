"""Evaluation metrics."""

from .metrics import (
    GAP_REGIONS,
    FidelityGapReport,
    FieldErrorReport,
    evaluate_model,
    fidelity_gap_report,
    nearest_neighbor_interpolate,
    nmae,
    normalized_mse,
    save_gap_report,
)

__all__ = [
    "GAP_REGIONS",
    "FidelityGapReport",
    "FieldErrorReport",
    "evaluate_model",
    "fidelity_gap_report",
    "nearest_neighbor_interpolate",
    "nmae",
    "normalized_mse",
    "save_gap_report",
]
