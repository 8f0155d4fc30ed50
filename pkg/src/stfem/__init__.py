"""Space-time P1 finite elements for the heat equation, with error norms and
convergence-study tooling."""
from .assembly import DofMap, SparseSystem, assemble_mass, assemble_spatial_stiffness, assemble_system
from .coefficients import CoefficientField
from .experiments import ConvergenceTable, RunConfig, run
from .linsolve import SolverConfig, solve
from .manufactured import ManufacturedSolution, example
from .mesh import BoundaryTag, Geometry, SpaceTimeMesh, build_mesh, build_structured_2d, build_structured_3d
from .norms import DiscreteField, ErrorReport, convergence_order

__version__ = "0.1.0"
