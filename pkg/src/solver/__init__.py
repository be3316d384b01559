"""Low/high-fidelity boundary-layer slice solver."""

from .mesh import Mesh, build_mesh
from .pool import (
    SamplePool,
    describe_fidelities,
    generate_pool,
    load_pool,
    save_pool,
    split_pool,
)
from .solve import FieldSolution, SolutionStatus, solve_case
from .wall import law_of_the_wall

__all__ = [
    "Mesh",
    "build_mesh",
    "SamplePool",
    "describe_fidelities",
    "generate_pool",
    "load_pool",
    "save_pool",
    "split_pool",
    "FieldSolution",
    "SolutionStatus",
    "solve_case",
    "law_of_the_wall",
]
