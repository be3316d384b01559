"""Matched low/high-fidelity sample pools and their on-disk manifest."""

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import repeat
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from ..config import SolverConfig
from ..errors import ConfigurationError, PoolGenerationError
from ..models import BETA_P_RANGE, RE_DELTA_RANGE, CostModel, FidelityLevel, FlowCase
from ..utils import get_logger, load_json, save_json
from .mesh import Mesh, yplus_bounds
from .solve import FieldSolution, SolutionStatus, solve_case

logger = get_logger(__name__)

MANIFEST_NAME = "manifest.json"
FIELD_HEADER = "node_y,u,tau_w"
MANIFEST_VERSION = 1


@dataclass(eq=False)
class SamplePool:
    """Matched pairs: one low- and one high-fidelity solution per case."""
    cases: list[FlowCase]
    low_solutions: list[FieldSolution]
    high_solutions: list[FieldSolution]
    cost_model: CostModel
    seed: Optional[int] = None
    dropped: list[int] = field(default_factory=list)

    def __post_init__(self):
        if not (len(self.cases) == len(self.low_solutions) == len(self.high_solutions)):
            raise PoolGenerationError("every case needs exactly one solution per fidelity")
        self._index = {case.case_id: i for i, case in enumerate(self.cases)}
        if len(self._index) != len(self.cases):
            raise PoolGenerationError("duplicate case ids in pool")

    def __len__(self) -> int:
        return len(self.cases)

    @property
    def case_ids(self) -> list[int]:
        return sorted(self._index)

    def __contains__(self, case_id: int) -> bool:
        return case_id in self._index

    def case(self, case_id: int) -> FlowCase:
        return self.cases[self._index[case_id]]

    def solution(self, case_id: int, fidelity: FidelityLevel) -> FieldSolution:
        i = self._index[case_id]
        if fidelity is FidelityLevel.HIGH:
            return self.high_solutions[i]
        return self.low_solutions[i]

    def cost(self, case_id: int, fidelity: FidelityLevel) -> int:
        return self.solution(case_id, fidelity).work_units

    def total_cost(self, fidelity: Optional[FidelityLevel] = None) -> int:
        levels = [fidelity] if fidelity else list(FidelityLevel)
        return sum(self.cost(cid, level) for cid in self.case_ids for level in levels)

    def subset(self, case_ids: Iterable[int]) -> "SamplePool":
        """Pool restricted to the given cases, with its own cost model."""
        ids = sorted(set(case_ids))
        missing = [cid for cid in ids if cid not in self._index]
        if missing:
            raise PoolGenerationError(f"case ids not in pool: {missing[:5]}")
        low = [self.solution(cid, FidelityLevel.LOW) for cid in ids]
        high = [self.solution(cid, FidelityLevel.HIGH) for cid in ids]
        return SamplePool(
            cases=[self.case(cid) for cid in ids],
            low_solutions=low,
            high_solutions=high,
            cost_model=build_cost_model(low, high),
            seed=self.seed,
        )


@dataclass
class FidelitySummary:
    """Per-fidelity characteristics of a pool."""
    fidelity: str
    sublayer: str
    avg_nodes: float
    avg_first_cell_height: float
    yplus_min: float
    yplus_max: float
    avg_work_units: float
    total_bytes: int


def build_cost_model(
    low_solutions: list[FieldSolution], high_solutions: list[FieldSolution]
) -> CostModel:
    """Average realized work units per fidelity."""
    if not low_solutions or not high_solutions:
        raise PoolGenerationError("cannot build a cost model from an empty pool")
    return CostModel(
        avg_cost_low=math.fsum(s.work_units for s in low_solutions) / len(low_solutions),
        avg_cost_high=math.fsum(s.work_units for s in high_solutions) / len(high_solutions),
    )


def sample_cases(n_cases: int, seed: int) -> list[FlowCase]:
    """Draw cases with log-uniform re_delta and uniform beta_p."""
    rng = np.random.default_rng(seed)
    log_re = rng.uniform(math.log10(RE_DELTA_RANGE[0]), math.log10(RE_DELTA_RANGE[1]), n_cases)
    beta = rng.uniform(BETA_P_RANGE[0], BETA_P_RANGE[1], n_cases)
    return [
        FlowCase(case_id=i, re_delta=float(10.0 ** lr), beta_p=float(b))
        for i, (lr, b) in enumerate(zip(log_re, beta))
    ]


def _solve_pair(case: FlowCase, solver: SolverConfig) -> tuple[FieldSolution, FieldSolution]:
    low = solve_case(case, FidelityLevel.LOW, solver)
    high = solve_case(case, FidelityLevel.HIGH, solver)
    return low, high


def _rejection_reason(solution: FieldSolution) -> Optional[str]:
    if not solution.accepted:
        return solution.status.value
    lo, hi = yplus_bounds(solution.fidelity)
    yp = solution.first_center_yplus
    if solution.fidelity is FidelityLevel.HIGH and not yp < hi:
        return f"first-cell y+={yp:.3g} not below {hi}"
    if solution.fidelity is FidelityLevel.LOW and not lo <= yp <= hi:
        return f"first-cell y+={yp:.3g} outside [{lo}, {hi}]"
    return None


def generate_pool(
    n_cases: int,
    seed: int,
    solver: Optional[SolverConfig] = None,
    workers: int = 1,
) -> SamplePool:
    """Sample cases, solve both fidelities and keep the accepted pairs.

    Args:
        n_cases: Number of cases to sample (at least 2).
        seed: Seed of the case sampler.
        solver: Solver settings.
        workers: Process count for solving; results keep case_id order.

    Returns:
        SamplePool of accepted matched pairs with its realized cost model.
    """
    if n_cases < 2:
        raise ConfigurationError(f"n_cases must be at least 2, got {n_cases}")
    solver = solver or SolverConfig()
    cases = sample_cases(n_cases, seed)

    logger.info(f"Solving {n_cases} cases at both fidelities ({workers} workers)")
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            pairs = list(executor.map(_solve_pair, cases, repeat(solver), chunksize=4))
    else:
        pairs = [_solve_pair(case, solver) for case in cases]

    kept_cases, low_kept, high_kept, dropped = [], [], [], []
    for case, (low, high) in zip(cases, pairs):
        reason = _rejection_reason(low) or _rejection_reason(high)
        if reason:
            logger.warning(f"Dropping case {case.case_id}: {reason}")
            dropped.append(case.case_id)
            continue
        kept_cases.append(case)
        low_kept.append(low)
        high_kept.append(high)

    if len(kept_cases) < 2:
        raise PoolGenerationError(
            f"only {len(kept_cases)} of {n_cases} cases converged at both fidelities"
        )

    pool = SamplePool(
        cases=kept_cases,
        low_solutions=low_kept,
        high_solutions=high_kept,
        cost_model=build_cost_model(low_kept, high_kept),
        seed=seed,
        dropped=dropped,
    )
    logger.info(
        f"Pool ready: {len(pool)} pairs, {len(dropped)} dropped, "
        f"cost ratio {pool.cost_model.ratio:.2f}"
    )
    return pool


def field_path(case_id: int, fidelity: FidelityLevel) -> str:
    """Manifest-relative path of a field file."""
    return f"fields/case_{case_id:05d}_{fidelity.value}.csv"


def _write_field(solution: FieldSolution, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    y = solution.mesh.node_y
    table = np.column_stack([y, solution.u, np.full(y.size, solution.tau_w)])
    np.savetxt(path, table, fmt="%.17g", delimiter=",", header=FIELD_HEADER, comments="")


def _read_field(path: Path) -> np.ndarray:
    with open(path) as f:
        header = f.readline().strip()
    if header != FIELD_HEADER:
        raise PoolGenerationError(f"{path}: unexpected header {header!r}")
    return np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)


def _solution_entry(solution: FieldSolution) -> dict:
    return {
        "path": field_path(solution.case.case_id, solution.fidelity),
        "work_units": solution.work_units,
        "iterations": solution.iterations,
        "converged": solution.converged,
        "status": solution.status.value,
        "first_center_yplus": solution.first_center_yplus,
        "mesh_first_center_yplus": solution.mesh.first_center_yplus,
        "n_nodes": solution.mesh.n_nodes,
    }


def save_pool(pool: SamplePool, directory: Path, meta: Optional[dict] = None) -> Path:
    """Write field files and the manifest; returns the manifest path."""
    directory.mkdir(parents=True, exist_ok=True)
    entries = []
    for cid in pool.case_ids:
        case = pool.case(cid)
        entry = {"case_id": cid, "re_delta": case.re_delta, "beta_p": case.beta_p}
        for level in FidelityLevel:
            solution = pool.solution(cid, level)
            _write_field(solution, directory / field_path(cid, level))
            entry[level.value] = _solution_entry(solution)
        entries.append(entry)

    manifest = {
        "version": MANIFEST_VERSION,
        "seed": pool.seed,
        "n_pairs": len(pool),
        "dropped": sorted(pool.dropped),
        "cost_model": pool.cost_model.model_dump(),
        "field_columns": FIELD_HEADER.split(","),
        "cases": entries,
        "meta": meta or {},
    }
    path = directory / MANIFEST_NAME
    save_json(manifest, path)
    logger.info(f"Saved pool manifest: {path}")
    return path


def read_manifest(directory: Path) -> Optional[dict]:
    return load_json(directory / MANIFEST_NAME)


def load_pool(directory: Path) -> SamplePool:
    """Load a pool written by save_pool."""
    manifest = read_manifest(directory)
    if manifest is None:
        raise PoolGenerationError(f"no pool manifest in {directory}")
    if manifest.get("version") != MANIFEST_VERSION:
        raise PoolGenerationError(f"unsupported manifest version {manifest.get('version')}")

    cases, low, high = [], [], []
    for entry in manifest["cases"]:
        case = FlowCase(
            case_id=entry["case_id"], re_delta=entry["re_delta"], beta_p=entry["beta_p"]
        )
        cases.append(case)
        for level, bucket in ((FidelityLevel.LOW, low), (FidelityLevel.HIGH, high)):
            info = entry[level.value]
            table = _read_field(directory / info["path"])
            mesh = Mesh(
                node_y=table[:, 0].copy(),
                first_center_yplus=float(info["mesh_first_center_yplus"]),
            )
            bucket.append(FieldSolution(
                case=case,
                fidelity=level,
                mesh=mesh,
                u=table[:, 1].copy(),
                tau_w=float(table[0, 2]),
                work_units=int(info["work_units"]),
                converged=bool(info["converged"]),
                iterations=int(info["iterations"]),
                status=SolutionStatus(info["status"]),
                first_center_yplus=float(info["first_center_yplus"]),
            ))

    return SamplePool(
        cases=cases,
        low_solutions=low,
        high_solutions=high,
        cost_model=CostModel(**manifest["cost_model"]),
        seed=manifest.get("seed"),
        dropped=list(manifest.get("dropped", [])),
    )


def split_pool(pool: SamplePool, test_size: int, seed: int) -> tuple[SamplePool, SamplePool]:
    """Hold out test_size cases by seeded permutation; returns (composition, test)."""
    if not 0 < test_size < len(pool):
        raise ConfigurationError(
            f"test_size={test_size} must leave at least one of {len(pool)} pairs for composition"
        )
    ids = np.array(pool.case_ids)
    order = np.random.default_rng(seed).permutation(ids.size)
    test_ids = sorted(int(i) for i in ids[order[:test_size]])
    comp_ids = sorted(int(i) for i in ids[order[test_size:]])
    return pool.subset(comp_ids), pool.subset(test_ids)


def describe_fidelities(
    pool: SamplePool, directory: Optional[Path] = None
) -> list[FidelitySummary]:
    """Per-fidelity mesh, y+ and cost characteristics of a pool."""
    rows = []
    for level in (FidelityLevel.HIGH, FidelityLevel.LOW):
        sols = [pool.solution(cid, level) for cid in pool.case_ids]
        yplus = [s.first_center_yplus for s in sols]
        size = 0
        if directory is not None:
            for s in sols:
                path = directory / field_path(s.case.case_id, level)
                if path.exists():
                    size += path.stat().st_size
        rows.append(FidelitySummary(
            fidelity=level.value,
            sublayer="resolving" if level is FidelityLevel.HIGH else "modeling",
            avg_nodes=math.fsum(s.mesh.n_nodes for s in sols) / len(sols),
            avg_first_cell_height=math.fsum(float(s.mesh.node_y[0]) for s in sols) / len(sols),
            yplus_min=min(yplus),
            yplus_max=max(yplus),
            avg_work_units=math.fsum(s.work_units for s in sols) / len(sols),
            total_bytes=size,
        ))
    return rows


def save_fidelity_summary(rows: list[FidelitySummary], path: Path) -> None:
    """Write the fidelity summary table as CSV."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fields = list(FidelitySummary.__dataclass_fields__)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(fields)
        for row in rows:
            writer.writerow([repr(v) if isinstance(v, float) else v for v in
                             (getattr(row, name) for name in fields)])
