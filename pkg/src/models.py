"""Pydantic domain records and SQLAlchemy ORM models."""

import math
from datetime import datetime, timezone
from enum import Enum

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from sqlalchemy import Column, DateTime, Float, ForeignKey, Integer, String, Text, UniqueConstraint
from sqlalchemy.orm import DeclarativeBase, relationship

RE_DELTA_RANGE = (1e4, 1e6)
BETA_P_RANGE = (-0.2, 0.5)


def _utcnow() -> datetime:
    return datetime.now(timezone.utc)


class FidelityLevel(str, Enum):
    """The two simulation fidelities."""
    LOW = "low"
    HIGH = "high"


class CompositionMode(str, Enum):
    """How a composition fraction is interpreted."""
    BUDGET_SHARE = "budget_share"
    COUNT_SHARE = "count_share"


class Activation(str, Enum):
    """Hidden-layer nonlinearity."""
    GELU = "gelu"
    RELU = "relu"


# SQLAlchemy Base
class Base(DeclarativeBase):
    """SQLAlchemy declarative base."""
    pass


# SQLAlchemy ORM Models
class SweepRunORM(Base):
    """One sweep invocation."""
    __tablename__ = "sweep_runs"

    id = Column(Integer, primary_key=True, autoincrement=True)
    config_hash = Column(String, nullable=False, index=True)
    started_at = Column(DateTime, nullable=False)
    finished_at = Column(DateTime, nullable=True)
    cells_total = Column(Integer, default=0)
    completed = Column(Integer, default=0)
    skipped = Column(Integer, default=0)
    failed = Column(Integer, default=0)
    runtime_seconds = Column(Float, nullable=True)
    status = Column(String, default="running")

    cells = relationship("CellORM", back_populates="run")


class CellORM(Base):
    """A finished sweep cell, kept so interrupted sweeps can resume."""
    __tablename__ = "cells"
    __table_args__ = (UniqueConstraint("config_hash", "cell_key"),)

    id = Column(Integer, primary_key=True, autoincrement=True)
    run_id = Column(Integer, ForeignKey("sweep_runs.id"), nullable=False)
    config_hash = Column(String, nullable=False, index=True)
    cell_key = Column(String, nullable=False)
    status = Column(String, nullable=False)
    record_json = Column(Text, nullable=False)
    finished_at = Column(DateTime, default=_utcnow)

    run = relationship("SweepRunORM", back_populates="cells")


# Pydantic domain records
class FlowCase(BaseModel):
    """Physical parameters of one boundary-layer slice."""
    model_config = ConfigDict(frozen=True)

    case_id: int = Field(ge=0)
    re_delta: float
    beta_p: float

    @field_validator("re_delta")
    @classmethod
    def _check_re(cls, value: float) -> float:
        lo, hi = RE_DELTA_RANGE
        if not math.isfinite(value) or not lo <= value <= hi:
            raise ValueError(f"re_delta={value} outside turbulent range [{lo:g}, {hi:g}]")
        return value

    @field_validator("beta_p")
    @classmethod
    def _check_beta(cls, value: float) -> float:
        lo, hi = BETA_P_RANGE
        if not math.isfinite(value) or not lo <= value <= hi:
            raise ValueError(f"beta_p={value} outside [{lo}, {hi}]")
        return value


class CostModel(BaseModel):
    """Average work units per sample and fidelity."""
    model_config = ConfigDict(frozen=True)

    avg_cost_low: float
    avg_cost_high: float

    @model_validator(mode="after")
    def _check_order(self) -> "CostModel":
        if not self.avg_cost_high > self.avg_cost_low > 0:
            raise ValueError(
                f"expected avg_cost_high > avg_cost_low > 0, got "
                f"{self.avg_cost_high} and {self.avg_cost_low}"
            )
        return self

    @property
    def ratio(self) -> float:
        return self.avg_cost_high / self.avg_cost_low


class DatasetBudgetSpec(BaseModel):
    """A (budget, composition) request."""
    model_config = ConfigDict(frozen=True)

    budget_db: float = Field(gt=0, allow_inf_nan=False)
    composition_dc: float = Field(ge=0, le=1)
    mode: CompositionMode = CompositionMode.BUDGET_SHARE


class RunRecord(BaseModel):
    """One trained-and-evaluated sweep cell."""
    budget_db: float
    composition_dc: float
    mode: str
    seed: int
    n_low: int = 0
    n_high: int = 0
    total_cost: float = 0.0
    mse_u: float = math.nan
    mse_tau: float = math.nan
    epochs_run: int = 0
    status: str = "ok"

    @model_validator(mode="after")
    def _check_ok_row(self) -> "RunRecord":
        if self.status != "ok":
            return self
        for name in ("mse_u", "mse_tau"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise ValueError(f"{name}={value} must be finite and non-negative")
        if self.total_cost > self.budget_db:
            raise ValueError(f"total_cost {self.total_cost} exceeds budget {self.budget_db}")
        return self

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    @property
    def is_baseline(self) -> bool:
        return self.mode == "baseline"

    @property
    def cell_key(self) -> str:
        return cell_key(self.budget_db, self.composition_dc, self.seed, self.mode)


def cell_key(budget_db: float, composition_dc: float, seed: int, mode: str) -> str:
    """Canonical string key of a sweep cell."""
    return f"{float(budget_db)!r}|{float(composition_dc)!r}|{int(seed)}|{mode}"
