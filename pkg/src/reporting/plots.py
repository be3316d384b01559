"""SVG charts of test error against high-fidelity share.

Each chart carries its plotted numbers in an XML comment so the values can be
checked without reading the drawing.
"""

import io
from pathlib import Path
from typing import Optional

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from ..analysis.scaling import FIELDS, AggregateCell, aggregate_runs, baseline_cell  # noqa: E402
from ..errors import ResultsParseError  # noqa: E402
from ..storage.results import read_results  # noqa: E402
from ..utils import format_budget, get_logger, save_text  # noqa: E402

logger = get_logger(__name__)

DATA_TAG = "multifid-data"
DATA_HEADER = "budget_db,composition_dc,mean,std,n_seeds"
FIELD_TITLES = {"u": "velocity u (volume)", "tau_w": "wall shear stress (surface)"}

_RC = {
    "svg.hashsalt": "multifid",
    "svg.fonttype": "none",
    "path.simplify": False,
}


def chart_name(field: str) -> str:
    return f"scaling_{field}.svg"


def _data_block(field: str, cells: list[AggregateCell], baseline: Optional[AggregateCell]) -> str:
    lines = [f"<!-- {DATA_TAG}", f"field={field}", DATA_HEADER]
    for c in cells:
        lines.append(
            f"{c.budget_db!r},{c.composition_dc!r},{c.mean[field]!r},{c.std[field]!r},{c.n_seeds}"
        )
    if baseline is not None:
        lines.append(f"baseline={baseline.mean[field]!r}")
    lines.append("-->")
    return "\n".join(lines)


def _embed(svg: str, block: str) -> str:
    """Place the data comment right after the XML declaration."""
    head, sep, rest = svg.partition("?>\n")
    if not sep:
        return block + "\n" + svg
    return head + sep + block + "\n" + rest


def render_chart(
    field: str, cells: list[AggregateCell], baseline: Optional[AggregateCell]
) -> str:
    """One line per budget with std error bars; dashed full high-fidelity line."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(6.4, 4.4))
        for budget in sorted({c.budget_db for c in cells}):
            row = sorted(
                (c for c in cells if c.budget_db == budget), key=lambda c: c.composition_dc
            )
            ax.errorbar(
                [100.0 * c.composition_dc for c in row],
                [c.mean[field] for c in row],
                yerr=[c.std[field] for c in row],
                marker="o",
                capsize=3,
                label=f"D_b = {format_budget(budget)}",
            )
        if baseline is not None:
            ax.axhline(
                baseline.mean[field], color="black", linestyle="--", linewidth=1.0,
                label="full high-fidelity",
            )
        ax.set_yscale("log")
        ax.set_xlabel("high-fidelity share D_c [%]")
        ax.set_ylabel("test MSE (normalized)")
        ax.set_title(FIELD_TITLES.get(field, field))
        ax.legend(loc="best", fontsize="small")
        fig.tight_layout()

        buffer = io.StringIO()
        fig.savefig(buffer, format="svg", metadata={"Date": None})
        plt.close(fig)
    return _embed(buffer.getvalue(), _data_block(field, cells, baseline))


def emit_plots(results_path: Path, out_dir: Path) -> list[Path]:
    """Write one chart per field from a results file; returns the SVG paths."""
    records = read_results(results_path)
    cells = aggregate_runs(records)
    if not cells:
        raise ResultsParseError(f"{results_path} has no successful sweep rows to plot")
    baseline = baseline_cell(records)

    out_dir = Path(out_dir)
    paths = []
    for field in FIELDS:
        path = out_dir / chart_name(field)
        save_text(render_chart(field, cells, baseline), path)
        paths.append(path)
    logger.info(f"Wrote {len(paths)} charts to {out_dir}")
    return paths


def parse_svg_data(svg: str) -> dict:
    """Read back the embedded data comment of a chart."""
    start = svg.find(f"<!-- {DATA_TAG}")
    if start < 0:
        raise ResultsParseError("chart has no embedded data block")
    end = svg.find("-->", start)
    lines = svg[start:end].splitlines()[1:]

    data = {"field": None, "cells": [], "baseline": None}
    for line in lines:
        line = line.strip()
        if not line or line == DATA_HEADER:
            continue
        if line.startswith("field="):
            data["field"] = line.split("=", 1)[1]
        elif line.startswith("baseline="):
            data["baseline"] = float(line.split("=", 1)[1])
        else:
            budget, dc, mean, std, n = line.split(",")
            data["cells"].append((float(budget), float(dc), float(mean), float(std), int(n)))
    return data
