"""Analysis tables and the text summary written by `analyze`."""

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from ..errors import ResultsParseError
from ..storage.results import read_results
from ..utils import format_budget, get_logger, save_text
from .scaling import (
    FIELDS,
    AggregateCell,
    ScalingFit,
    TransferVerdict,
    aggregate_runs,
    baseline_cell,
    fit_cells,
    transfer_verdicts,
)

logger = get_logger(__name__)

AGGREGATE_HEADER = ["field", "budget_db", "composition_dc", "mean", "std", "n_seeds"]
FITS_HEADER = ["field", "composition_dc", "a", "alpha", "l_inf", "residual", "fit_ok", "n_budgets"]
VERDICTS_HEADER = ["field", "budget_db", "best_dc", "best_mean_error", "positive_transfer"]


@dataclass
class AnalysisResult:
    cells: list[AggregateCell]
    baseline: Optional[AggregateCell]
    fits: dict[tuple[str, float], ScalingFit]
    verdicts: list[TransferVerdict]
    paths: dict[str, Path]


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    if value is None:
        return ""
    return str(value)


def _write_csv(path: Path, header: list[str], rows: list[list]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        writer.writerows([[_fmt(v) for v in row] for row in rows])
    return path


def write_aggregate(cells: list[AggregateCell], path: Path) -> Path:
    rows = [
        [field, c.budget_db, c.composition_dc, c.mean[field], c.std[field], c.n_seeds]
        for field in FIELDS for c in cells
    ]
    return _write_csv(path, AGGREGATE_HEADER, rows)


def write_fits(fits: dict[tuple[str, float], ScalingFit], path: Path) -> Path:
    rows = [
        [field, dc, f.a, f.alpha, f.l_inf, f.residual, f.fit_ok, f.n_budgets]
        for (field, dc), f in fits.items()
    ]
    return _write_csv(path, FITS_HEADER, rows)


def write_verdicts(verdicts: list[TransferVerdict], path: Path) -> Path:
    rows = [
        [v.field, v.budget_db, v.best_dc, v.best_mean_error, v.positive_transfer]
        for v in verdicts
    ]
    return _write_csv(path, VERDICTS_HEADER, rows)


def render_summary(
    cells: list[AggregateCell],
    baseline: Optional[AggregateCell],
    fits: dict[tuple[str, float], ScalingFit],
    verdicts: list[TransferVerdict],
    n_failed: int = 0,
) -> str:
    """Human-readable digest of the optimal mixes and transfer verdicts."""
    lines = ["Multi-fidelity scaling study", "=" * 28, ""]
    budgets = sorted({c.budget_db for c in cells})
    lines.append(
        f"{len(cells)} cells over {len(budgets)} budgets, "
        f"{len({c.composition_dc for c in cells})} compositions"
    )
    if n_failed:
        lines.append(f"{n_failed} failed rows were excluded")
    lines.append("")

    lines.append("Optimal high-fidelity share per budget")
    for v in verdicts:
        transfer = {True: "yes", False: "no", None: "n/a"}[v.positive_transfer]
        lines.append(
            f"  {v.field:<6} D_b={format_budget(v.budget_db):>10}  best D_c={v.best_dc:.2f}  "
            f"mse={v.best_mean_error:.4e}  positive transfer: {transfer}"
        )
    lines.append("")

    lines.append("Power-law fits  L = a * D_b^-alpha + l_inf")
    for (field, dc), fit in fits.items():
        if fit.fit_ok:
            lines.append(
                f"  {field:<6} D_c={dc:.2f}  a={fit.a:.4g}  alpha={fit.alpha:.4g}  "
                f"l_inf={fit.l_inf:.4g}"
            )
        else:
            lines.append(f"  {field:<6} D_c={dc:.2f}  not fitted ({fit.n_budgets} budgets)")
    lines.append("")

    if baseline is None:
        lines.append("Full high-fidelity baseline: not available")
    else:
        lines.append(f"Full high-fidelity baseline (D_b={format_budget(baseline.budget_db)})")
        for field in FIELDS:
            lines.append(f"  {field:<6} mse={baseline.mean[field]:.4e}")
    return "\n".join(lines) + "\n"


def analyze_results(results_path: Path, out_dir: Path) -> AnalysisResult:
    """Aggregate a results file and write the analysis tables next to it."""
    records = read_results(results_path)
    cells = aggregate_runs(records)
    if not cells:
        raise ResultsParseError(f"{results_path} has no successful sweep rows")

    baseline = baseline_cell(records)
    fits = fit_cells(cells)
    verdicts = transfer_verdicts(cells)
    n_failed = sum(1 for r in records if not r.ok)

    out_dir = Path(out_dir)
    paths = {
        "aggregate": write_aggregate(cells, out_dir / "aggregate.csv"),
        "fits": write_fits(fits, out_dir / "fits.csv"),
        "verdicts": write_verdicts(verdicts, out_dir / "verdicts.csv"),
    }
    summary_path = out_dir / "summary.txt"
    save_text(render_summary(cells, baseline, fits, verdicts, n_failed), summary_path)
    paths["summary"] = summary_path
    logger.info(f"Analysis written to {out_dir}")
    return AnalysisResult(cells, baseline, fits, verdicts, paths)
