"""Wall-normal momentum balance of a turbulent boundary-layer slice."""

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np
from scipy.linalg import solve_banded

from ..config import SolverConfig
from ..models import FidelityLevel, FlowCase
from ..utils import get_logger
from .mesh import Mesh, build_mesh
from .wall import flat_plate_skin_friction, law_of_the_wall, provisional_friction_velocity

logger = get_logger(__name__)


class SolutionStatus(str, Enum):
    """Outcome of a slice solve."""
    OK = "ok"
    UNCONVERGED = "unconverged"
    SEPARATED = "separated"


@dataclass(eq=False)
class FieldSolution:
    """Solver output for one (case, fidelity)."""
    case: FlowCase
    fidelity: FidelityLevel
    mesh: Mesh
    u: np.ndarray
    tau_w: float
    work_units: int
    converged: bool
    iterations: int = 0
    status: SolutionStatus = SolutionStatus.OK
    first_center_yplus: float = math.nan

    @property
    def accepted(self) -> bool:
        return self.converged and self.status is SolutionStatus.OK and self.tau_w > 0


def pressure_gradient(case: FlowCase, solver: SolverConfig) -> float:
    """Imposed dp/dx in edge units, scaled with the reference wall stress."""
    tau_ref = 0.5 * flat_plate_skin_friction(case.re_delta, solver.flat_plate_coefficient)
    return case.beta_p * tau_ref / solver.displacement_thickness


def solve_case(
    case: FlowCase,
    fidelity: FidelityLevel,
    solver: Optional[SolverConfig] = None,
    n_nodes: Optional[int] = None,
) -> FieldSolution:
    """Solve d/dy[(nu + nu_t) du/dy] = dp/dx across the slice.

    Finite volumes with faces at node midpoints and the wall face at y = 0;
    u = 0 at the wall and u = 1 at the edge node. Mixing-length eddy viscosity
    with van Driest damping everywhere. High fidelity resolves the sublayer
    and reads the wall stress from the wall-adjacent gradient; low fidelity
    imposes the wall stress from the law of the wall, which knows nothing
    about the pressure gradient.

    Each sweep solves the linearised tridiagonal system, relaxes the velocity
    and then relaxes the friction velocity toward its wall-closure estimate.
    Converged when successive wall stresses differ by less than the relative
    tolerance.
    """
    solver = solver or SolverConfig()
    mesh = build_mesh(case, fidelity, n_nodes, solver)
    high = fidelity is FidelityLevel.HIGH

    y = mesh.node_y
    n = y.size
    nu = 1.0 / case.re_delta
    dpdx = pressure_gradient(case, solver)

    faces = 0.5 * (y[:-1] + y[1:])
    spacing = np.diff(y)
    volumes = faces - np.concatenate(([0.0], faces[:-1]))

    u = y ** (1.0 / 7.0)
    u_tau = provisional_friction_velocity(case.re_delta, solver.flat_plate_coefficient)
    tau = u_tau * u_tau
    friction_relaxation = (
        solver.high_friction_relaxation if high else solver.low_friction_relaxation
    )

    status = SolutionStatus.UNCONVERGED
    banded = np.zeros((3, n - 1))
    iteration = 0

    for iteration in range(1, solver.max_iterations + 1):
        grad = np.abs(np.diff(u)) / spacing
        stress = np.abs(tau + dpdx * faces)
        face_yplus = faces * np.sqrt(stress) / nu
        mixing = np.minimum(solver.kappa * faces, solver.outer_mixing_length) * (
            1.0 - np.exp(-face_yplus / solver.van_driest_a_plus)
        )
        conductance = (nu + mixing * mixing * grad) / spacing

        wall = nu / y[0] if high else tau / u[0]
        west = np.concatenate(([wall], conductance[:-1]))
        east = conductance

        banded[0, 1:] = -east[:-1]
        banded[1] = west + east
        banded[2, :-1] = -west[1:]
        rhs = -dpdx * volumes
        rhs[-1] += east[-1] * u[-1]

        u_star = solve_banded((1, 1), banded, rhs)
        u[:-1] += solver.velocity_relaxation * (u_star - u[:-1])

        if not (u[0] > 0 and np.all(np.isfinite(u))):
            status = SolutionStatus.SEPARATED
            break

        if high:
            u_tau_target = math.sqrt(nu * u[0] / y[0])
        else:
            u_tau_target = u[0] / law_of_the_wall(
                y[0] * u_tau / nu, solver.kappa, solver.log_law_b
            )

        u_tau_next = u_tau + friction_relaxation * (u_tau_target - u_tau)
        if not u_tau_next > 0:
            status = SolutionStatus.SEPARATED
            break

        previous = tau
        u_tau = u_tau_next
        tau = u_tau * u_tau
        if abs(tau - previous) < solver.tolerance * tau:
            status = SolutionStatus.OK
            break

    converged = status is SolutionStatus.OK
    if not converged:
        logger.debug(
            f"case {case.case_id} {fidelity.value}: {status.value} after {iteration} iterations"
        )

    return FieldSolution(
        case=case,
        fidelity=fidelity,
        mesh=mesh,
        u=u,
        tau_w=2.0 * tau,
        work_units=n * iteration,
        converged=converged,
        iterations=iteration,
        status=status,
        first_center_yplus=y[0] * u_tau / nu,
    )
