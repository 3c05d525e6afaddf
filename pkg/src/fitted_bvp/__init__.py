"""Fitted difference scheme for eps^2 y'' = f(x, y) on a modified Bakhvalov mesh."""

from .errors import (
    DegenerateMeshError,
    FittedBVPError,
    MeshMismatchError,
    MissingExactError,
    NonConvergenceError,
    ParameterError,
    SingularMatrixError,
)
from .mesh import (
    ClampedMeshWarning,
    Mesh,
    MeshParams,
    build_mesh,
    compute_omega,
    generating_function,
    mesh_diagnostics,
)
from .problem import (
    Problem,
    exact_solution_example1,
    get_problem,
    make_example1,
    make_example2,
    validate_problem,
)
from .scheme import (
    DiscreteOperator,
    SchemeParams,
    TridiagonalMatrix,
    fitted_coefficients,
    jacobian,
    mmatrix_check,
    residual,
    stable_csch,
    stable_delta_d,
)
from .solver import NewtonConfig, Solution, newton_solve, thomas_solve

__version__ = "0.1.0"
