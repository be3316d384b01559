"""Pytest configuration and fixtures."""

import os
import tempfile
from pathlib import Path

import numpy as np
import pytest
from sqlalchemy import create_engine
from sqlalchemy.orm import sessionmaker

from src.config import NetworkConfig, SweepConfig, TrainConfig, get_project_root, load_config
from src.models import Base, FidelityLevel, FlowCase
from src.solver.mesh import Mesh
from src.solver.pool import SamplePool, build_cost_model, generate_pool
from src.solver.solve import FieldSolution


@pytest.fixture
def temp_db():
    """Create a temporary SQLite database for testing."""
    with tempfile.NamedTemporaryFile(suffix=".db", delete=False) as f:
        db_path = f.name

    engine = create_engine(f"sqlite:///{db_path}")
    Base.metadata.create_all(engine)

    SessionLocal = sessionmaker(bind=engine)
    session = SessionLocal()

    yield session

    session.close()
    engine.dispose()
    Path(db_path).unlink(missing_ok=True)


def _default_u(y: np.ndarray, case: FlowCase, level: FidelityLevel) -> np.ndarray:
    return y ** (1.0 / 7.0)


def _default_tau(case: FlowCase, level: FidelityLevel) -> float:
    return 0.004 * (1.0 - case.beta_p)


def make_pool(
    low_costs: list[int],
    high_costs: list[int],
    u_fn=_default_u,
    tau_fn=_default_tau,
    low_nodes: int = 10,
    high_nodes: int = 16,
) -> SamplePool:
    """Hand-built pool of synthetic solutions with the given work units."""
    n = len(low_costs)
    cases, low, high = [], [], []
    for i in range(n):
        t = i / max(n - 1, 1)
        case = FlowCase(case_id=i, re_delta=10.0 ** (4.0 + 2.0 * t), beta_p=-0.2 + 0.7 * t)
        cases.append(case)
        for level, cost, bucket, nodes, y0, yplus in (
            (FidelityLevel.LOW, low_costs[i], low, low_nodes, 0.02, 200.0),
            (FidelityLevel.HIGH, high_costs[i], high, high_nodes, 1e-4, 0.5),
        ):
            y = np.geomspace(y0, 1.0, nodes)
            bucket.append(FieldSolution(
                case=case,
                fidelity=level,
                mesh=Mesh(node_y=y, first_center_yplus=yplus),
                u=np.asarray(u_fn(y, case, level), dtype=float),
                tau_w=float(tau_fn(case, level)),
                work_units=int(cost),
                converged=True,
                iterations=1,
            ))
    return SamplePool(
        cases=cases,
        low_solutions=low,
        high_solutions=high,
        cost_model=build_cost_model(low, high),
        seed=0,
    )


@pytest.fixture
def pool_factory():
    """Builder for hand-made pools: pool_factory(low_costs, high_costs, ...)."""
    return make_pool


@pytest.fixture
def tiny_pool():
    """Six pairs with low costs 4-6 and high costs 12-15."""
    return make_pool([4, 5, 6, 4, 5, 6], [12, 13, 14, 15, 12, 13])


@pytest.fixture(scope="session")
def solved_pool():
    """A small pool solved with the real solver (shared across the session)."""
    return generate_pool(24, seed=7)


@pytest.fixture(scope="session")
def study_pool():
    """The pool the shipped study config generates, at its size and seed."""
    config = load_config(str(get_project_root() / "config" / "study.yaml"))
    return generate_pool(
        config.pool.size, config.pool.seed, config.solver, workers=os.cpu_count() or 1
    )


@pytest.fixture
def small_network():
    return NetworkConfig(field_widths=[3, 8, 8, 1], scalar_widths=[2, 6, 1], seed=0)


@pytest.fixture
def quick_train():
    return TrainConfig(epochs=20, early_stop_patience=10, warmup_epochs=2, peak_lr=5e-3,
                       batch_size=64, seed=0)


@pytest.fixture
def tiny_study_config():
    """A sweep small enough to run end to end inside a test."""
    return SweepConfig(
        pool={"size": 16, "seed": 3, "split_seed": 1},
        grid={
            "budget_fractions": [0.3, 0.6],
            "compositions": [0.0, 1.0],
            "seeds": [0],
            "test_size": 4,
        },
        network={"field_widths": [3, 8, 8, 1], "scalar_widths": [2, 6, 1]},
        train={"epochs": 8, "early_stop_patience": 4, "warmup_epochs": 2, "peak_lr": 5e-3,
               "batch_size": 128},
        output={"workers": 1},
    )
