"""Field-wise error metrics and the low/high fidelity gap."""

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Literal, Optional, Sequence

import numpy as np

from ..errors import ContractError, DegenerateDenominatorError
from ..models import FidelityLevel
from ..solver.mesh import Mesh
from ..solver.pool import SamplePool
from ..surrogate.trainer import NormalizationStats, TrainedModel, predict
from ..utils import get_logger

logger = get_logger(__name__)

GAP_REPORT_HEADER = ["field", "location", "nmae", "n_pairs", "n_excluded", "region", "scope"]
FIELD_LOCATIONS = {"u": "volume", "tau_w": "surface"}
GAP_REGIONS = ("overlap", "full")


def _nodes(mesh: Mesh | np.ndarray) -> np.ndarray:
    return mesh.node_y if isinstance(mesh, Mesh) else np.asarray(mesh, dtype=float)


def nearest_neighbor_interpolate(
    source_mesh: Mesh | np.ndarray,
    source_field: np.ndarray,
    target_mesh: Mesh | np.ndarray,
) -> np.ndarray:
    """Give every target node the value of its nearest source node.

    Equidistant targets take the lower source index.
    """
    src = _nodes(source_mesh)
    tgt = _nodes(target_mesh)
    values = np.asarray(source_field, dtype=float)
    if src.size == 0:
        raise ContractError("source mesh is empty")
    if values.shape != src.shape:
        raise ContractError(f"field of shape {values.shape} does not match mesh {src.shape}")
    if not (np.all(np.isfinite(src)) and np.all(np.isfinite(tgt))):
        raise ContractError("mesh coordinates must be finite")

    # argmin returns the first minimum, which is the lower index on ties
    nearest = np.argmin(np.abs(tgt[:, None] - src[None, :]), axis=1)
    return values[nearest]


def nmae(lf_on_hf: np.ndarray, hf: np.ndarray) -> float:
    """sum |lf - hf| / sum |hf|."""
    lf_on_hf = np.asarray(lf_on_hf, dtype=float).ravel()
    hf = np.asarray(hf, dtype=float).ravel()
    if lf_on_hf.shape != hf.shape:
        raise ContractError(f"length mismatch: {lf_on_hf.size} vs {hf.size}")
    denom = math.fsum(np.abs(hf))
    if denom == 0:
        raise DegenerateDenominatorError("reference field is identically zero")
    return math.fsum(np.abs(lf_on_hf - hf)) / denom


def normalized_mse(
    prediction: np.ndarray,
    reference: np.ndarray,
    stats: NormalizationStats,
) -> float:
    """Mean squared difference after z-scoring both arrays with the same stats."""
    prediction = np.asarray(prediction, dtype=float).ravel()
    reference = np.asarray(reference, dtype=float).ravel()
    if prediction.shape != reference.shape:
        raise ContractError(f"length mismatch: {prediction.size} vs {reference.size}")
    if prediction.size == 0:
        raise ContractError("cannot score empty fields")
    mean = float(np.ravel(stats.mean)[0])
    std = float(np.ravel(stats.std)[0])
    diff = (prediction - mean) / std - (reference - mean) / std
    return math.fsum(diff * diff) / diff.size


@dataclass
class FidelityGapReport:
    """Mean low-vs-high nMAE per field."""
    nmae: dict[str, float]
    n_pairs: dict[str, int]
    n_excluded: dict[str, int]
    region: str = "overlap"
    scope: str = "pool"

    @property
    def u(self) -> float:
        return self.nmae["u"]

    @property
    def tau_w(self) -> float:
        return self.nmae["tau_w"]


def _pair_gaps(pool: SamplePool, case_id: int, region: str) -> dict[str, float]:
    low = pool.solution(case_id, FidelityLevel.LOW)
    high = pool.solution(case_id, FidelityLevel.HIGH)
    target = high.mesh.node_y
    reference = high.u
    if region == "overlap":
        keep = target >= low.mesh.node_y[0]
        target, reference = target[keep], reference[keep]
    gaps = {}
    if target.size:
        interp = nearest_neighbor_interpolate(low.mesh, low.u, target)
        gaps["u"] = nmae(interp, reference)
    gaps["tau_w"] = nmae([low.tau_w], [high.tau_w])
    return gaps


def fidelity_gap_report(
    pool: SamplePool,
    region: Literal["overlap", "full"] = "overlap",
    case_ids: Optional[Iterable[int]] = None,
    scope: str = "pool",
) -> FidelityGapReport:
    """Average nMAE of interpolated low-fidelity fields against high fidelity.

    The overlap region compares only high-fidelity nodes at or above the
    low-fidelity first cell centre. Pairs with a degenerate reference or no
    overlapping nodes are excluded and counted.
    """
    if region not in GAP_REGIONS:
        raise ContractError(f"unknown gap region {region!r}")
    ids = sorted(pool.case_ids if case_ids is None else set(case_ids))

    values: dict[str, list[float]] = {name: [] for name in FIELD_LOCATIONS}
    excluded = {name: 0 for name in FIELD_LOCATIONS}
    for cid in ids:
        try:
            gaps = _pair_gaps(pool, cid, region)
        except DegenerateDenominatorError:
            gaps = {}
        for name in FIELD_LOCATIONS:
            if name in gaps:
                values[name].append(gaps[name])
            else:
                excluded[name] += 1

    for name, count in excluded.items():
        if count:
            logger.warning(f"Fidelity gap: excluded {count} pairs for {name}")

    return FidelityGapReport(
        nmae={
            name: math.fsum(vals) / len(vals) if vals else math.nan
            for name, vals in values.items()
        },
        n_pairs={name: len(vals) for name, vals in values.items()},
        n_excluded=excluded,
        region=region,
        scope=scope,
    )


def save_gap_report(
    reports: FidelityGapReport | Sequence[FidelityGapReport], path: Path
) -> Path:
    """Write one row per field for each report, in the order given."""
    if isinstance(reports, FidelityGapReport):
        reports = [reports]
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(GAP_REPORT_HEADER)
        for report in reports:
            for name, location in FIELD_LOCATIONS.items():
                writer.writerow([
                    name, location, repr(report.nmae[name]), report.n_pairs[name],
                    report.n_excluded[name], report.region, report.scope,
                ])
    return path


@dataclass
class FieldErrorReport:
    """Per-sample averaged normalized MSE on the high-fidelity test set."""
    mse_u: float
    mse_tau: float
    n_test_samples: int
    n_extrapolated: int = 0
    per_sample: list[tuple[int, float, float]] = field(default_factory=list)


def evaluate_model(model: TrainedModel, test_pool: SamplePool) -> FieldErrorReport:
    """Score a model on every high-fidelity sample of the test pool, on its own mesh."""
    if len(test_pool) == 0:
        raise ContractError("test pool is empty")

    rows = []
    n_extrapolated = 0
    for cid in test_pool.case_ids:
        truth = test_pool.solution(cid, FidelityLevel.HIGH)
        pred = predict(model, test_pool.case(cid), truth.mesh)
        n_extrapolated += int(pred.extrapolated)
        rows.append((
            cid,
            normalized_mse(pred.u, truth.u, model.field_output),
            normalized_mse([pred.tau_w], [truth.tau_w], model.scalar_output),
        ))

    if n_extrapolated:
        logger.warning(f"{n_extrapolated} of {len(rows)} test cases needed extrapolation")

    return FieldErrorReport(
        mse_u=math.fsum(r[1] for r in rows) / len(rows),
        mse_tau=math.fsum(r[2] for r in rows) / len(rows),
        n_test_samples=len(rows),
        n_extrapolated=n_extrapolated,
        per_sample=rows,
    )
