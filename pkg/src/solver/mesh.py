"""Geometrically stretched wall-normal meshes."""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..config import SolverConfig
from ..errors import ConfigurationError
from ..models import FidelityLevel, FlowCase
from .wall import provisional_friction_velocity

MIN_NODES = 8
HIGH_YPLUS_LIMIT = 1.0
LOW_YPLUS_RANGE = (30.0, 300.0)


@dataclass(frozen=True, eq=False)
class Mesh:
    """Cell-centre coordinates across the slice, wall excluded."""
    node_y: np.ndarray
    first_center_yplus: float

    @property
    def n_nodes(self) -> int:
        return int(self.node_y.size)

    @property
    def growth_ratio(self) -> float:
        return float(self.node_y[1] / self.node_y[0])


def yplus_bounds(fidelity: FidelityLevel) -> tuple[float, float]:
    """Allowed first-cell-centre y+ interval for a fidelity (open at 0 for high)."""
    if fidelity is FidelityLevel.HIGH:
        return 0.0, HIGH_YPLUS_LIMIT
    return LOW_YPLUS_RANGE


def default_nodes(fidelity: FidelityLevel, solver: SolverConfig) -> int:
    return solver.high_n_nodes if fidelity is FidelityLevel.HIGH else solver.low_n_nodes


def target_yplus(fidelity: FidelityLevel, solver: SolverConfig) -> float:
    return solver.high_target_yplus if fidelity is FidelityLevel.HIGH else solver.low_target_yplus


def build_mesh(
    case: FlowCase,
    fidelity: FidelityLevel,
    n_nodes: Optional[int] = None,
    solver: Optional[SolverConfig] = None,
) -> Mesh:
    """Build the mesh whose first cell centre sits in the fidelity's y+ regime.

    The first cell height comes from the flat-plate friction estimate; the
    remaining nodes follow a constant growth ratio up to the slice edge at y = 1.
    """
    solver = solver or SolverConfig()
    n = default_nodes(fidelity, solver) if n_nodes is None else int(n_nodes)
    if n < MIN_NODES:
        raise ConfigurationError(f"n_nodes={n} is below the minimum of {MIN_NODES}")

    target = target_yplus(fidelity, solver)
    lo, hi = yplus_bounds(fidelity)
    if fidelity is FidelityLevel.HIGH and not target < hi:
        raise ConfigurationError(
            f"high-fidelity target y+={target} violates first_center_yplus < {hi}"
        )
    if fidelity is FidelityLevel.LOW and not lo <= target <= hi:
        raise ConfigurationError(
            f"low-fidelity target y+={target} violates first_center_yplus in [{lo}, {hi}]"
        )

    nu = 1.0 / case.re_delta
    u_tau = provisional_friction_velocity(case.re_delta, solver.flat_plate_coefficient)
    y0 = target * nu / u_tau
    if y0 >= 1.0:
        raise ConfigurationError(
            f"first cell centre y={y0:.4g} reaches the slice edge (bound y < 1) "
            f"for re_delta={case.re_delta:g}"
        )

    ratio = (1.0 / y0) ** (1.0 / (n - 1))
    if ratio > solver.max_stretch_ratio:
        raise ConfigurationError(
            f"growth ratio {ratio:.4f} exceeds max_stretch_ratio={solver.max_stretch_ratio} "
            f"with n_nodes={n} at first_center_yplus={target}"
        )

    node_y = np.geomspace(y0, 1.0, n)
    node_y[0] = y0
    node_y[-1] = 1.0
    node_y.setflags(write=False)

    return Mesh(node_y=node_y, first_center_yplus=y0 * u_tau / nu)
