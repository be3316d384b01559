"""Results CSV: one row per sweep cell plus the baseline row."""

import csv
import io
import os
from pathlib import Path

from pydantic import ValidationError

from ..errors import ResultsParseError
from ..models import RunRecord
from ..utils import get_logger

logger = get_logger(__name__)

RESULTS_HEADER = [
    "budget_db", "composition_dc", "mode", "seed", "n_low", "n_high",
    "total_cost", "mse_u", "mse_tau", "epochs_run", "status",
]
IN_PROGRESS_SUFFIX = ".inprogress"


def sort_key(record: RunRecord) -> tuple:
    """Sweep rows by (budget, composition, seed), baseline rows last."""
    return (record.is_baseline, record.budget_db, record.composition_dc, record.seed, record.mode)


def _cell(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def render_results(records: list[RunRecord]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(RESULTS_HEADER)
    for record in sorted(records, key=sort_key):
        writer.writerow([_cell(getattr(record, name)) for name in RESULTS_HEADER])
    return buffer.getvalue()


def write_results(records: list[RunRecord], path: Path) -> Path:
    """Write sorted records through an in-progress file and rename it into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    partial = path.with_name(path.name + IN_PROGRESS_SUFFIX)
    with open(partial, "w", newline="") as f:
        f.write(render_results(records))
    os.replace(partial, path)
    logger.info(f"Wrote {len(records)} result rows: {path}")
    return path


def parse_results(text: str, source: str = "results") -> list[RunRecord]:
    """Parse results CSV text; errors carry the 1-based line number."""
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None:
        raise ResultsParseError(f"{source} is empty", line=1)
    if header != RESULTS_HEADER:
        raise ResultsParseError(f"{source}: unexpected header {','.join(header)}", line=1)

    records = []
    for row in reader:
        line = reader.line_num
        if not row:
            continue
        if len(row) != len(RESULTS_HEADER):
            raise ResultsParseError(
                f"expected {len(RESULTS_HEADER)} columns, got {len(row)}", line=line
            )
        try:
            records.append(RunRecord(**dict(zip(RESULTS_HEADER, row))))
        except ValidationError as e:
            first = e.errors()[0]
            field = ".".join(str(p) for p in first["loc"]) or "row"
            raise ResultsParseError(f"{field}: {first['msg']}", line=line) from e
    return records


def read_results(path: Path) -> list[RunRecord]:
    path = Path(path)
    if not path.exists():
        raise ResultsParseError(f"results file not found: {path}")
    return parse_results(path.read_text(), source=str(path))
