"""Sweep ledger: runs and finished cells."""

from datetime import datetime, timezone
from typing import Iterable

from sqlalchemy import desc, func
from sqlalchemy.orm import Session

from ..models import CellORM, RunRecord, SweepRunORM
from ..utils import get_logger

logger = get_logger(__name__)


def _now() -> datetime:
    return datetime.now(timezone.utc).replace(tzinfo=None)


class Repository:
    """Repository for ledger operations."""

    def __init__(self, session: Session):
        self.session = session

    # Run operations
    def create_run(self, config_hash: str, cells_total: int = 0) -> SweepRunORM:
        """Create a new sweep run."""
        db_run = SweepRunORM(config_hash=config_hash, started_at=_now(), cells_total=cells_total)
        self.session.add(db_run)
        self.session.commit()
        self.session.refresh(db_run)
        logger.info(f"Started sweep run {db_run.id} ({cells_total} cells, config {config_hash})")
        return db_run

    def complete_run(
        self,
        run_id: int,
        completed: int = 0,
        skipped: int = 0,
        failed: int = 0,
        status: str = "completed",
    ) -> None:
        """Complete a sweep run."""
        run = self.session.query(SweepRunORM).filter(SweepRunORM.id == run_id).first()
        if run:
            run.finished_at = _now()
            run.completed = completed
            run.skipped = skipped
            run.failed = failed
            run.status = status
            run.runtime_seconds = (run.finished_at - run.started_at).total_seconds()
            self.session.commit()
            logger.info(
                f"Completed run {run_id}: {completed} run, {skipped} resumed, {failed} failed"
            )

    def get_runs(self, limit: int = 10) -> list[SweepRunORM]:
        """Get recent sweep runs."""
        return (
            self.session.query(SweepRunORM)
            .order_by(desc(SweepRunORM.started_at), desc(SweepRunORM.id))
            .limit(limit)
            .all()
        )

    # Cell operations
    def record_cell(self, run_id: int, config_hash: str, record: RunRecord) -> CellORM:
        """Store a finished cell, replacing an earlier entry for the same key."""
        key = record.cell_key
        existing = (
            self.session.query(CellORM)
            .filter(CellORM.config_hash == config_hash, CellORM.cell_key == key)
            .first()
        )
        payload = record.model_dump_json()
        if existing:
            existing.run_id = run_id
            existing.status = record.status
            existing.record_json = payload
            existing.finished_at = _now()
            db_cell = existing
        else:
            db_cell = CellORM(
                run_id=run_id,
                config_hash=config_hash,
                cell_key=key,
                status=record.status,
                record_json=payload,
                finished_at=_now(),
            )
            self.session.add(db_cell)
        self.session.commit()
        logger.debug(f"Recorded cell {key}: {record.status}")
        return db_cell

    def get_completed_cells(self, config_hash: str) -> dict[str, RunRecord]:
        """Successfully finished cells for a configuration, by cell key."""
        rows = (
            self.session.query(CellORM)
            .filter(CellORM.config_hash == config_hash, CellORM.status == "ok")
            .all()
        )
        return {row.cell_key: RunRecord.model_validate_json(row.record_json) for row in rows}

    def filter_pending_cells(self, config_hash: str, keys: Iterable[str]) -> list[str]:
        """Keys without a successful ledger entry; failed cells are retried."""
        done = set(self.get_completed_cells(config_hash))
        keys = list(keys)
        pending = [key for key in keys if key not in done]
        if len(pending) < len(keys):
            logger.debug(f"{len(keys) - len(pending)} cells already in the ledger")
        return pending

    # Statistics
    def get_stats(self) -> dict:
        """Get ledger statistics."""
        total_runs = self.session.query(func.count(SweepRunORM.id)).scalar() or 0
        total_cells = self.session.query(func.count(CellORM.id)).scalar() or 0
        ok_cells = (
            self.session.query(func.count(CellORM.id))
            .filter(CellORM.status == "ok")
            .scalar()
            or 0
        )
        return {
            "total_runs": total_runs,
            "total_cells": total_cells,
            "ok_cells": ok_cells,
            "failed_cells": total_cells - ok_cells,
        }
