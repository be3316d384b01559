"""Scaling analysis of sweep results."""

from .report import AnalysisResult, analyze_results
from .scaling import (
    AggregateCell,
    ScalingFit,
    TransferVerdict,
    aggregate_runs,
    baseline_cell,
    detect_positive_transfer,
    fit_cells,
    fit_power_law,
    optimal_composition,
    transfer_verdicts,
)

__all__ = [
    "AnalysisResult",
    "analyze_results",
    "AggregateCell",
    "ScalingFit",
    "TransferVerdict",
    "aggregate_runs",
    "baseline_cell",
    "detect_positive_transfer",
    "fit_cells",
    "fit_power_law",
    "optimal_composition",
    "transfer_verdicts",
]
