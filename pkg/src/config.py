"""Configuration loading for the scaling study."""

import hashlib
import json
import os
from pathlib import Path
from typing import Literal, Optional

import yaml
from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from .errors import ConfigurationError
from .models import Activation, CompositionMode


class PoolConfig(BaseModel):
    """Size and seeding of the matched-pair pool."""
    size: int = Field(611, ge=2)
    seed: int = 0
    split_seed: int = 0


class SolverConfig(BaseModel):
    """Boundary-layer slice solver settings."""
    kappa: float = Field(0.41, gt=0)
    log_law_b: float = 5.0
    van_driest_a_plus: float = Field(26.0, gt=0)
    outer_mixing_length: float = Field(0.09, gt=0)
    flat_plate_coefficient: float = Field(0.02, gt=0)
    displacement_thickness: float = Field(0.2, gt=0)
    high_n_nodes: int = 96
    low_n_nodes: int = 50
    high_target_yplus: float = Field(0.5, gt=0)
    low_target_yplus: float = Field(200.0, gt=0)
    max_stretch_ratio: float = Field(1.5, gt=1)
    velocity_relaxation: float = Field(0.6, gt=0, le=1)
    low_friction_relaxation: float = Field(0.5, gt=0, le=1)
    high_friction_relaxation: float = Field(1.0, gt=0, le=1)
    tolerance: float = Field(1e-8, gt=0)
    max_iterations: int = Field(10_000, ge=1)


class NetworkConfig(BaseModel):
    """Surrogate architecture: a field net and a scalar net."""
    field_widths: list[int] = [3, 64, 64, 64, 1]
    scalar_widths: list[int] = [2, 32, 32, 1]
    activation: Activation = Activation.GELU
    fidelity_label: bool = False
    seed: int = 0
    # Parameter precision; float64 is kept for gradient checks
    dtype: Literal["float32", "float64"] = "float32"

    @field_validator("field_widths", "scalar_widths")
    @classmethod
    def _check_widths(cls, widths: list[int]) -> list[int]:
        if len(widths) < 3:
            raise ValueError("at least one hidden layer is required")
        if any(w <= 0 for w in widths):
            raise ValueError("layer widths must be positive")
        if widths[-1] != 1:
            raise ValueError("output width must be 1")
        return widths

    @model_validator(mode="after")
    def _check_inputs(self) -> "NetworkConfig":
        extra = 1 if self.fidelity_label else 0
        if self.field_widths[0] != 3 + extra:
            raise ValueError(f"field net takes {3 + extra} inputs, got {self.field_widths[0]}")
        if self.scalar_widths[0] != 2 + extra:
            raise ValueError(f"scalar net takes {2 + extra} inputs, got {self.scalar_widths[0]}")
        return self


class TrainConfig(BaseModel):
    """Optimizer and schedule settings."""
    epochs: int = Field(500, ge=0)
    early_stop_patience: int = Field(250, ge=1)
    warmup_epochs: int = Field(10, ge=0)
    peak_lr: float = Field(5e-4, gt=0)
    weight_decay: float = Field(1e-4, ge=0)
    beta1: float = Field(0.9, gt=0, lt=1)
    beta2: float = Field(0.999, gt=0, lt=1)
    eps: float = Field(1e-8, gt=0)
    grad_clip_norm: float = Field(1.0, gt=0)
    batch_size: int = Field(256, ge=1)
    val_fraction: float = Field(0.1, ge=0, lt=1)
    seed: int = 0

    @model_validator(mode="after")
    def _check_warmup(self) -> "TrainConfig":
        if self.epochs > 0 and self.warmup_epochs >= self.epochs:
            raise ValueError("warmup_epochs must be smaller than epochs")
        return self


class GridConfig(BaseModel):
    """Budget x composition x seed grid."""
    budgets: Optional[list[float]] = None
    budget_fractions: list[float] = [0.1, 0.3, 0.6]
    compositions: list[float] = [0.0, 0.25, 0.5, 0.75, 1.0]
    seeds: list[int] = [0, 1, 2, 3]
    mode: CompositionMode = CompositionMode.BUDGET_SHARE
    test_size: int = Field(120, ge=1)

    @field_validator("budgets", "budget_fractions")
    @classmethod
    def _check_ascending(cls, values: Optional[list[float]]) -> Optional[list[float]]:
        if values is None:
            return values
        if not values:
            raise ValueError("at least one budget is required")
        if any(v <= 0 for v in values):
            raise ValueError("budgets must be positive")
        if any(b <= a for a, b in zip(values, values[1:])):
            raise ValueError("budgets must be strictly ascending")
        return values

    @field_validator("compositions")
    @classmethod
    def _check_compositions(cls, values: list[float]) -> list[float]:
        if not values:
            raise ValueError("at least one composition is required")
        if any(v < 0 or v > 1 for v in values):
            raise ValueError("compositions must lie in [0, 1]")
        if any(b <= a for a, b in zip(values, values[1:])):
            raise ValueError("compositions must be sorted without repeats")
        return values

    @field_validator("seeds")
    @classmethod
    def _check_seeds(cls, values: list[int]) -> list[int]:
        if not values or len(set(values)) != len(values):
            raise ValueError("seeds must be a non-empty list without repeats")
        return values


class MetricsConfig(BaseModel):
    """Fidelity-gap reporting options."""
    gap_region: Literal["overlap", "full"] = "overlap"
    gap_scope: Literal["pool", "test"] = "pool"


class OutputConfig(BaseModel):
    """Output location and parallelism."""
    out_dir: str = "data/study"
    workers: Optional[int] = Field(None, ge=1)


class SweepConfig(BaseModel):
    """Full study configuration."""
    pool: PoolConfig = PoolConfig()
    grid: GridConfig = GridConfig()
    solver: SolverConfig = SolverConfig()
    network: NetworkConfig = NetworkConfig()
    train: TrainConfig = TrainConfig()
    metrics: MetricsConfig = MetricsConfig()
    output: OutputConfig = OutputConfig()

    @model_validator(mode="after")
    def _check_split(self) -> "SweepConfig":
        if self.grid.test_size >= self.pool.size:
            raise ValueError(
                f"test_size {self.grid.test_size} leaves no composition pool "
                f"out of {self.pool.size} cases"
            )
        return self


class AppSettings(BaseSettings):
    """Application settings from environment."""
    model_config = SettingsConfigDict(env_prefix="MULTIFID_")

    config_path: str = "config/study.yaml"
    log_level: str = "INFO"
    out_dir: Optional[str] = None
    workers: Optional[int] = None


def get_project_root() -> Path:
    """Get the project root directory."""
    return Path(__file__).parent.parent


def get_settings() -> AppSettings:
    """Get application settings."""
    return AppSettings()


def load_config(config_path: Optional[str] = None) -> SweepConfig:
    """Load configuration from a YAML file.

    An explicitly named file must exist; the default file falls back to built-in
    defaults when absent.
    """
    explicit = config_path is not None
    if config_path is None:
        config_path = get_settings().config_path

    full_path = Path(config_path)
    if not full_path.is_absolute() and not full_path.exists():
        full_path = get_project_root() / config_path

    if not full_path.exists():
        if explicit:
            raise ConfigurationError(f"config file not found: {config_path}")
        return SweepConfig()

    try:
        with open(full_path) as f:
            data = yaml.safe_load(f) or {}
    except yaml.YAMLError as e:
        raise ConfigurationError(f"invalid YAML in {full_path}: {e}") from e

    if not isinstance(data, dict):
        raise ConfigurationError(f"{full_path} must contain a mapping")

    try:
        return SweepConfig(**data)
    except ValidationError as e:
        raise ConfigurationError(f"invalid configuration in {full_path}: {e}") from e


def resolve_output(
    config: SweepConfig,
    out_dir: Optional[str] = None,
    workers: Optional[int] = None,
    settings: Optional[AppSettings] = None,
) -> tuple[Path, int]:
    """Resolve output directory and worker count: flag, then environment, then file."""
    settings = settings or get_settings()

    out = out_dir or settings.out_dir or config.output.out_dir
    out_path = Path(out)
    if not out_path.is_absolute():
        out_path = Path.cwd() / out_path

    n_workers = workers or settings.workers or config.output.workers or os.cpu_count() or 1
    if n_workers < 1:
        raise ConfigurationError(f"worker count must be positive, got {n_workers}")

    return out_path, n_workers


def config_fingerprint(config: SweepConfig, *sections: str) -> str:
    """Stable hash of the named configuration sections."""
    names = sections or ("pool", "grid", "solver", "network", "train")
    payload = {name: getattr(config, name).model_dump(mode="json") for name in names}
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]
