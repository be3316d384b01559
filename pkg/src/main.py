"""Study orchestrator: pool generation, sweep cells, ledger and results."""

import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from . import __version__
from .composer import Selection, compose_dataset, save_selection
from .config import NetworkConfig, SweepConfig, TrainConfig, config_fingerprint
from .database import (
    LEDGER_NAME,
    dispose_engines,
    get_database_url,
    get_db_session,
    init_db,
)
from .errors import ConfigurationError, ContractError
from .evaluation import GAP_REGIONS, evaluate_model, fidelity_gap_report, save_gap_report
from .models import CompositionMode, DatasetBudgetSpec, FidelityLevel, RunRecord, cell_key
from .solver.pool import (
    SamplePool,
    describe_fidelities,
    generate_pool,
    load_pool,
    read_manifest,
    save_fidelity_summary,
    save_pool,
    split_pool,
)
from .storage import Repository, write_results
from .surrogate import TrainedModel, save_model, train
from .utils import format_budget, format_duration, get_logger, save_json

logger = get_logger(__name__)

BASELINE_MODE = "baseline"
RESULTS_NAME = "results.csv"
SUMMARY_NAME = "fidelity_summary.csv"
POOL_DIR = "pool"


@dataclass(frozen=True)
class CellSpec:
    """One (budget, composition, seed) training run."""
    budget_db: float
    composition_dc: float
    seed: int
    mode: str

    @property
    def key(self) -> str:
        return cell_key(self.budget_db, self.composition_dc, self.seed, self.mode)

    @property
    def is_baseline(self) -> bool:
        return self.mode == BASELINE_MODE


@dataclass
class Study:
    """A pool split into its composition and test parts."""
    pool: SamplePool
    composition: SamplePool
    test: SamplePool


@dataclass
class SweepOutcome:
    results_path: Path
    records: list[RunRecord]
    n_run: int = 0
    n_skipped: int = 0
    failed: list[str] = field(default_factory=list)

    @property
    def n_failed(self) -> int:
        return len(self.failed)


# Pool
def prepare_pool(config: SweepConfig, out_dir: Path, workers: int = 1) -> SamplePool:
    """Load the cached pool when its fingerprint matches, else generate and save it."""
    pool_dir = Path(out_dir) / POOL_DIR
    fingerprint = config_fingerprint(config, "pool", "solver")
    manifest = read_manifest(pool_dir)
    if manifest and manifest.get("meta", {}).get("fingerprint") == fingerprint:
        logger.info(f"Reusing pool in {pool_dir}")
        return load_pool(pool_dir)

    pool = generate_pool(config.pool.size, config.pool.seed, config.solver, workers=workers)
    save_pool(pool, pool_dir, meta={"fingerprint": fingerprint, "version": __version__})
    save_fidelity_summary(describe_fidelities(pool, pool_dir), Path(out_dir) / SUMMARY_NAME)
    return pool


def prepare_study(config: SweepConfig, out_dir: Path, workers: int = 1) -> Study:
    pool = prepare_pool(config, out_dir, workers)
    composition, test = split_pool(pool, config.grid.test_size, config.pool.split_seed)
    logger.info(f"Split pool: {len(composition)} composition pairs, {len(test)} test pairs")
    return Study(pool=pool, composition=composition, test=test)


def write_gap_report(config: SweepConfig, study: Study, out_dir: Path) -> Path:
    """Fidelity-gap table over the whole pool or the test split.

    Both measurement regions are written, the configured one first.
    """
    scope = config.metrics.gap_scope
    case_ids = study.test.case_ids if scope == "test" else None
    primary = config.metrics.gap_region
    regions = [primary] + [r for r in GAP_REGIONS if r != primary]
    reports = []
    for region in regions:
        report = fidelity_gap_report(study.pool, region=region, case_ids=case_ids, scope=scope)
        logger.info(
            f"Fidelity gap ({report.region}, {scope}): "
            f"u={report.u:.4f} tau_w={report.tau_w:.4f}"
        )
        reports.append(report)
    return save_gap_report(reports, Path(out_dir) / "gap_report.csv")


def generate(config: SweepConfig, out_dir: Path, workers: int = 1) -> Study:
    """Build (or reuse) the pool and write its summary tables."""
    study = prepare_study(config, out_dir, workers)
    summary_path = Path(out_dir) / SUMMARY_NAME
    if not summary_path.exists():
        rows = describe_fidelities(study.pool, Path(out_dir) / POOL_DIR)
        save_fidelity_summary(rows, summary_path)
    write_gap_report(config, study, out_dir)
    return study


# Planning
def resolve_budgets(config: SweepConfig, composition_pool: SamplePool) -> list[float]:
    """Configured budgets, or fractions of the composition pool's full high-fidelity cost."""
    if config.grid.budgets:
        return [float(b) for b in config.grid.budgets]
    full = composition_pool.total_cost(FidelityLevel.HIGH)
    return [float(f * full) for f in config.grid.budget_fractions]


def plan_cells(config: SweepConfig, budgets: list[float], full_high_cost: float) -> list[CellSpec]:
    """Every grid cell in sorted order, then the single full high-fidelity baseline."""
    mode = config.grid.mode.value
    cells = [
        CellSpec(float(b), float(dc), int(s), mode)
        for b in budgets
        for dc in config.grid.compositions
        for s in config.grid.seeds
    ]
    cells.append(CellSpec(float(full_high_cost), 1.0, int(config.grid.seeds[0]), BASELINE_MODE))
    return cells


# Cells
def select_for_cell(cell: CellSpec, pool: SamplePool) -> Selection:
    if cell.is_baseline:
        ids = tuple(pool.case_ids)
        return Selection(
            low_ids=(),
            high_ids=ids,
            total_cost=float(pool.total_cost(FidelityLevel.HIGH)),
            achieved_dc=1.0,
        )
    spec = DatasetBudgetSpec(
        budget_db=cell.budget_db,
        composition_dc=cell.composition_dc,
        mode=CompositionMode(cell.mode),
    )
    return compose_dataset(pool, spec, seed=cell.seed)


def check_isolation(selection: Selection, test_pool: SamplePool) -> None:
    leaked = selection.case_ids() & set(test_pool.case_ids)
    if leaked:
        raise ContractError(f"test cases leaked into training selection: {sorted(leaked)[:5]}")


def _cell_configs(
    cell: CellSpec, net_cfg: NetworkConfig, train_cfg: TrainConfig
) -> tuple[NetworkConfig, TrainConfig]:
    return (
        net_cfg.model_copy(update={"seed": net_cfg.seed + cell.seed}),
        train_cfg.model_copy(update={"seed": train_cfg.seed + cell.seed}),
    )


def train_cell(
    cell: CellSpec,
    composition: SamplePool,
    test: SamplePool,
    net_cfg: NetworkConfig,
    train_cfg: TrainConfig,
) -> tuple[Selection, TrainedModel, RunRecord]:
    """Compose, train and evaluate one cell."""
    selection = select_for_cell(cell, composition)
    check_isolation(selection, test)
    net, trainer = _cell_configs(cell, net_cfg, train_cfg)
    model = train(selection, composition, net, trainer)
    report = evaluate_model(model, test)
    record = RunRecord(
        budget_db=cell.budget_db,
        composition_dc=cell.composition_dc,
        mode=cell.mode,
        seed=cell.seed,
        n_low=selection.n_low,
        n_high=selection.n_high,
        total_cost=selection.total_cost,
        mse_u=report.mse_u,
        mse_tau=report.mse_tau,
        epochs_run=model.epochs_run,
    )
    return selection, model, record


def run_cell(
    cell: CellSpec,
    composition: SamplePool,
    test: SamplePool,
    net_cfg: NetworkConfig,
    train_cfg: TrainConfig,
) -> RunRecord:
    """Run one cell; any failure becomes a failed row instead of an exception."""
    try:
        _, _, record = train_cell(cell, composition, test, net_cfg, train_cfg)
        return record
    except Exception as e:
        message = " ".join(f"{type(e).__name__}: {e}".split())
        logger.warning(f"Cell {cell.key} failed: {message}")
        return RunRecord(
            budget_db=cell.budget_db,
            composition_dc=cell.composition_dc,
            mode=cell.mode,
            seed=cell.seed,
            status=f"failed: {message}",
        )


# Worker processes receive the pools once instead of with every task
_worker_state: Optional[tuple] = None


def _init_worker(composition, test, net_cfg, train_cfg) -> None:
    global _worker_state
    _worker_state = (composition, test, net_cfg, train_cfg)


def _run_in_worker(cell: CellSpec) -> RunRecord:
    return run_cell(cell, *_worker_state)


def run_sweep(
    config: SweepConfig,
    out_dir: Path,
    workers: int = 1,
) -> SweepOutcome:
    """Run every pending cell and write the sorted results file.

    Cells already finished under the same configuration fingerprint are taken
    from the ledger, so rerunning a complete sweep rewrites identical results.
    """
    out_dir = Path(out_dir)
    started = time.monotonic()
    db_url = init_db(out_dir)
    study = prepare_study(config, out_dir, workers)

    budgets = resolve_budgets(config, study.composition)
    full_high = study.composition.total_cost(FidelityLevel.HIGH)
    cells = plan_cells(config, budgets, full_high)
    fingerprint = config_fingerprint(config)
    logger.info(
        f"Sweep over budgets {[format_budget(b) for b in budgets]}: {len(cells)} cells"
    )

    with get_db_session(db_url) as session:
        repo = Repository(session)
        done = repo.get_completed_cells(fingerprint)
        pending_keys = set(repo.filter_pending_cells(fingerprint, [c.key for c in cells]))
        pending = [c for c in cells if c.key in pending_keys]
        run = repo.create_run(fingerprint, cells_total=len(cells))

        fresh: dict[str, RunRecord] = {}
        try:
            if workers > 1 and len(pending) > 1:
                with ProcessPoolExecutor(
                    max_workers=min(workers, len(pending)),
                    initializer=_init_worker,
                    initargs=(study.composition, study.test, config.network, config.train),
                ) as executor:
                    futures = {executor.submit(_run_in_worker, c): c for c in pending}
                    for future in as_completed(futures):
                        record = future.result()
                        fresh[futures[future].key] = record
                        repo.record_cell(run.id, fingerprint, record)
                        logger.info(f"Finished {futures[future].key}: {record.status}")
            else:
                for cell in pending:
                    record = run_cell(
                        cell, study.composition, study.test, config.network, config.train
                    )
                    fresh[cell.key] = record
                    repo.record_cell(run.id, fingerprint, record)
                    logger.info(f"Finished {cell.key}: {record.status}")
        except BaseException:
            repo.complete_run(
                run.id,
                completed=len(fresh),
                skipped=len(cells) - len(pending),
                failed=sum(1 for r in fresh.values() if not r.ok),
                status="interrupted",
            )
            raise

        records = [fresh[c.key] if c.key in fresh else done[c.key] for c in cells]
        failed = [r.cell_key for r in records if not r.ok]
        repo.complete_run(
            run.id,
            completed=len(fresh),
            skipped=len(cells) - len(pending),
            failed=len(failed),
            status="completed" if not failed else "completed_with_failures",
        )
    dispose_engines()

    results_path = write_results(records, out_dir / RESULTS_NAME)
    logger.info(
        f"Sweep done in {format_duration(time.monotonic() - started)}: "
        f"{len(fresh)} run, {len(cells) - len(pending)} resumed, {len(failed)} failed"
    )
    return SweepOutcome(
        results_path=results_path,
        records=records,
        n_run=len(fresh),
        n_skipped=len(cells) - len(pending),
        failed=failed,
    )


# Ledger
def ledger_status(out_dir: Path, limit: int = 5) -> str:
    """Readable summary of the sweep ledger: cell counts and recent runs."""
    out_dir = Path(out_dir)
    if not (out_dir / LEDGER_NAME).exists():
        raise ConfigurationError(f"No sweep ledger in {out_dir}")

    with get_db_session(get_database_url(out_dir)) as session:
        repo = Repository(session)
        stats = repo.get_stats()
        runs = repo.get_runs(limit=limit)
        lines = [
            f"Ledger: {out_dir / LEDGER_NAME}",
            f"Runs: {stats['total_runs']}",
            f"Cells: {stats['total_cells']} "
            f"({stats['ok_cells']} ok, {stats['failed_cells']} failed)",
        ]
        for run in runs:
            lines.append(
                f"  run {run.id} [{run.status}] config {run.config_hash}: "
                f"{run.completed} run, {run.skipped} resumed, {run.failed} failed, "
                f"{format_duration(run.runtime_seconds)}"
            )
    dispose_engines()
    return "\n".join(lines) + "\n"


# Single-cell commands
def compose_one(
    config: SweepConfig,
    out_dir: Path,
    spec: DatasetBudgetSpec,
    seed: int,
    workers: int = 1,
) -> tuple[Selection, Path]:
    """Compose one training set from the composition split and save it as JSON."""
    study = prepare_study(config, out_dir, workers)
    selection = compose_dataset(study.composition, spec, seed=seed)
    check_isolation(selection, study.test)
    path = Path(out_dir) / "selections" / _artifact_name(spec, seed, "json")
    save_selection(selection, study.composition, spec, seed, path)
    logger.info(
        f"Selected {selection.n_low} low + {selection.n_high} high "
        f"(cost {selection.total_cost:g} of {spec.budget_db:g}): {path}"
    )
    return selection, path


def train_one(
    config: SweepConfig,
    out_dir: Path,
    spec: DatasetBudgetSpec,
    seed: int,
    workers: int = 1,
) -> tuple[RunRecord, Path]:
    """Compose, train and evaluate one cell; saves the model and its metrics."""
    study = prepare_study(config, out_dir, workers)
    cell = CellSpec(spec.budget_db, spec.composition_dc, seed, spec.mode.value)
    _, model, record = train_cell(
        cell, study.composition, study.test, config.network, config.train
    )

    models_dir = Path(out_dir) / "models"
    model_path = save_model(model, models_dir / _artifact_name(spec, seed, "mfsm"))
    save_json(
        {
            **record.model_dump(mode="json"),
            "best_val_loss": model.best_val_loss,
            "best_epoch": model.best_epoch,
            "final_train_loss": model.final_train_loss,
            "flags": model.flags,
            "model": model_path.name,
        },
        models_dir / _artifact_name(spec, seed, "json"),
    )
    return record, model_path


def _artifact_name(spec: DatasetBudgetSpec, seed: int, suffix: str) -> str:
    return f"db{spec.budget_db:g}_dc{spec.composition_dc:g}_{spec.mode.value}_s{seed}.{suffix}"
