"""Newton's method for F(y) = 0 with a direct tridiagonal solve per step."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import NonConvergenceError, SingularMatrixError
from .mesh import Mesh
from .problem import Problem
from .scheme import DiscreteOperator, SchemeParams, TridiagonalMatrix

logger = logging.getLogger(__name__)

PIVOT_FLOOR = 1e-30


@dataclass(frozen=True)
class NewtonConfig:
    """Stopping rule for Newton's method.

    Iteration stops once the max-norm of the step is ``<= tol`` or the
    max-norm of the residual is ``<= residual_tol``.  ``initial_guess`` is
    a vector of length N+1 or ``"flat-one"`` (interior ones, zero ends).
    """

    tol: float = 1e-12
    residual_tol: float = 1e-12
    max_iter: int = 50
    initial_guess: object = "flat-one"

    def __post_init__(self):
        if not self.tol > 0 or not self.residual_tol > 0:
            raise ValueError("tolerances must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if isinstance(self.initial_guess, str) and self.initial_guess != "flat-one":
            raise ValueError(f"unknown initial guess {self.initial_guess!r}")


@dataclass(frozen=True, eq=False)
class Solution:
    mesh: Mesh
    values: np.ndarray
    iterations: int
    final_step_norm: float
    final_residual_norm: float
    converged: bool
    step_history: tuple[float, ...] = ()

    @property
    def nodes(self) -> np.ndarray:
        return self.mesh.nodes


def thomas_solve(T: TridiagonalMatrix, rhs) -> np.ndarray:
    """Solve ``T x = rhs`` by tridiagonal Gaussian elimination without pivoting.

    Stable for diagonally dominant ``T``.

    Raises:
        SingularMatrixError: if a pivot falls below 1e-30 in magnitude.
    """
    rhs = np.asarray(rhs, dtype=float)
    n = T.n
    if rhs.shape != (n,):
        raise ValueError(f"rhs must have shape ({n},), got {rhs.shape}")
    # plain lists are much faster than numpy scalars in this loop
    a = T.sub.tolist()
    b = T.diag.tolist()
    c = T.sup.tolist()
    d = rhs.tolist()
    cp = [0.0] * n
    dp = [0.0] * n
    piv = b[0]
    if abs(piv) < PIVOT_FLOOR:
        raise SingularMatrixError("zero pivot in row 0")
    cp[0] = c[0] / piv if n > 1 else 0.0
    dp[0] = d[0] / piv
    for i in range(1, n):
        ai = a[i - 1]
        piv = b[i] - ai * cp[i - 1]
        if abs(piv) < PIVOT_FLOOR:
            raise SingularMatrixError(f"zero pivot in row {i}")
        if i < n - 1:
            cp[i] = c[i] / piv
        dp[i] = (d[i] - ai * dp[i - 1]) / piv
    x = dp
    for i in range(n - 2, -1, -1):
        x[i] -= cp[i] * x[i + 1]
    return np.array(x)


def _initial_guess(cfg: NewtonConfig, n: int) -> np.ndarray:
    if isinstance(cfg.initial_guess, str):
        y = np.ones(n)
    else:
        y = np.array(cfg.initial_guess, dtype=float)
        if y.shape != (n,):
            raise ValueError(f"initial guess must have shape ({n},), got {y.shape}")
    y[0] = y[-1] = 0.0
    return y


def newton_solve(problem: Problem, mesh: Mesh, sp: SchemeParams,
                 cfg: NewtonConfig | None = None) -> Solution:
    """Solve the discrete problem on ``mesh`` by undamped Newton iteration.

    Each step solves ``H(y) delta = -F(y)``; the boundary entries stay 0.

    Raises:
        NonConvergenceError: if neither stopping test is met in ``max_iter`` steps.
        SingularMatrixError: if a Jacobian is numerically singular.
    """
    cfg = cfg or NewtonConfig()
    op = DiscreteOperator(problem, mesh, sp)
    y = _initial_guess(cfg, op.size)
    F = op.residual(y)
    res_norm = float(np.max(np.abs(F)))
    steps = []
    history = []
    step_norm = np.inf
    for k in range(1, cfg.max_iter + 1):
        delta = thomas_solve(op.jacobian(y), -F)
        delta[0] = delta[-1] = 0.0
        y = y + delta
        step_norm = float(np.max(np.abs(delta)))
        F = op.residual(y)
        res_norm = float(np.max(np.abs(F)))
        steps.append(step_norm)
        history.append((step_norm, res_norm))
        logger.debug("newton %d: step %.3e residual %.3e", k, step_norm, res_norm)
        if not (np.isfinite(step_norm) and np.isfinite(res_norm)):
            raise NonConvergenceError(f"Newton iterate became non-finite at step {k}", history)
        if step_norm <= cfg.tol or res_norm <= cfg.residual_tol:
            y.setflags(write=False)
            return Solution(mesh=mesh, values=y, iterations=k, final_step_norm=step_norm,
                            final_residual_norm=res_norm, converged=True,
                            step_history=tuple(steps))
    raise NonConvergenceError(
        f"Newton did not converge in {cfg.max_iter} iterations "
        f"(last step {step_norm:.3e}, residual {res_norm:.3e})",
        history,
    )
