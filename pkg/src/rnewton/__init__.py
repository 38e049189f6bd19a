"""Newton-type solvers for vector fields on Riemannian manifolds, with the
sphere, a Stiefel product, and the SPD cone built in, plus a deterministic
benchmark harness."""

__version__ = "0.1.0"

from .core import (
    FieldProblem,
    Manifold,
    Point,
    TangentBasis,
    TangentOperator,
    TangentVector,
    inner,
    merit_gradient,
    merit_value,
    norm,
    operator_to_matrix,
    solve_newton_system,
    tangent_basis,
)
from .kernels import BACKEND
from .solver import (
    Algorithm,
    IterationTrace,
    SolverConfig,
    Status,
    angle_test,
    armijo,
    newton_direction,
    run,
    safeguard_direction,
)
from .sphere import nonconservative_problem, rayleigh_problem
from .spd import spd_problem
from .stiefel import DegenerateFactor, tsvd_problem

__all__ = [
    "Algorithm",
    "BACKEND",
    "DegenerateFactor",
    "FieldProblem",
    "IterationTrace",
    "Manifold",
    "Point",
    "SolverConfig",
    "Status",
    "TangentBasis",
    "TangentOperator",
    "TangentVector",
    "__version__",
    "angle_test",
    "armijo",
    "inner",
    "merit_gradient",
    "merit_value",
    "newton_direction",
    "nonconservative_problem",
    "norm",
    "operator_to_matrix",
    "rayleigh_problem",
    "run",
    "safeguard_direction",
    "solve_newton_system",
    "spd_problem",
    "tangent_basis",
    "tsvd_problem",
]
