"""Continuous boundary value problems eps^2 y'' = f(x, y), y(0) = y(1) = 0.

A :class:`Problem` bundles the reaction term ``f``, its derivative ``f_y``
and the bounds used to pick the fitting constant gamma.  ``f`` and ``f_y``
must accept numpy arrays (elementwise evaluation); ``f`` is assumed to be
at least twice continuously differentiable, which cannot be checked here.
"""

from __future__ import annotations

import math
from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np

ArrayFunc = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class Problem:
    """Semilinear singularly perturbed reaction-diffusion problem.

    Attributes:
        name: identifier (``example1``, ``example2`` for the builtins).
        f: reaction term ``f(x, y)``.
        f_y: partial derivative of ``f`` with respect to ``y``.
        m: positive lower bound of ``f_y`` on the solution box.
        solution_box: ``(y_L, y_U)``, lower/upper solution bounds.
        exact: optional closed form ``exact(x, epsilon, one_minus_x=None)``;
            ``one_minus_x`` lets callers pass ``1 - x`` computed without
            rounding, which matters near x = 1 for tiny eps.
    """

    name: str
    f: ArrayFunc
    f_y: ArrayFunc
    m: float
    solution_box: tuple[float, float]
    exact: Callable[..., np.ndarray] | None = field(default=None, compare=False)

    def __post_init__(self):
        if not self.m > 0:
            raise ValueError(f"m must be positive, got {self.m}")
        lo, hi = self.solution_box
        if lo > hi:
            raise ValueError(f"solution box is empty: y_L={lo} > y_U={hi}")


def exact_solution_example1(x, epsilon: float, one_minus_x=None):
    """Closed-form solution of eps^2 y'' = y - 1, y(0) = y(1) = 0.

    Every exponential has a non-positive argument, so the formula is safe
    for arbitrarily small ``epsilon``. Accepts scalars or arrays.
    """
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    xa = np.asarray(x, dtype=float)
    if np.any(xa < 0.0) or np.any(xa > 1.0) or np.any(np.isnan(xa)):
        raise ValueError("x must lie in [0, 1]")
    xc = 1.0 - xa if one_minus_x is None else np.asarray(one_minus_x, dtype=float)
    num = np.exp(-xa / epsilon) + np.exp(-xc / epsilon)
    val = 1.0 - num / (1.0 + math.exp(-1.0 / epsilon))
    return float(val) if val.ndim == 0 else val


def make_example1() -> Problem:
    """Linear test problem eps^2 y'' = y - 1 with known solution."""
    return Problem(
        name="example1",
        f=lambda x, y: y - 1.0,
        f_y=lambda x, y: np.ones_like(np.asarray(y, dtype=float)),
        m=1.0,
        solution_box=(0.0, 1.0),
        exact=exact_solution_example1,
    )


def make_example2() -> Problem:
    """Nonlinear test problem eps^2 y'' = (y - 1)(1 + (y - 1)^2); no closed form."""

    def f(x, y):
        u = y - 1.0
        return u * (1.0 + u * u)

    def f_y(x, y):
        u = np.asarray(y, dtype=float) - 1.0
        return 1.0 + 3.0 * u * u

    return Problem(name="example2", f=f, f_y=f_y, m=1.0, solution_box=(0.0, 1.0))


BUILTIN_PROBLEMS: dict[str, Callable[[], Problem]] = {
    "example1": make_example1,
    "example2": make_example2,
}


def get_problem(name: str) -> Problem:
    try:
        return BUILTIN_PROBLEMS[name]()
    except KeyError:
        raise ValueError(
            f"unknown problem {name!r}; choose from {sorted(BUILTIN_PROBLEMS)}"
        ) from None


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of sampling the (gamma, m) assumptions on [0,1] x [y_L, y_U].

    ``gamma_ok`` means gamma >= f_y at every sample, ``m_ok`` means
    f_y >= m at every sample.  ``worst_*`` record the sample with the
    largest violation (or the extreme sample when nothing is violated).
    ``fd_max_rel_error`` is the largest relative deviation between ``f_y``
    and a central difference of ``f``.
    """

    gamma: float
    grid: tuple[int, int]
    gamma_ok: bool
    m_ok: bool
    f_y_min: float
    f_y_max: float
    worst_gamma_sample: tuple[float, float, float]
    worst_m_sample: tuple[float, float, float]
    fd_max_rel_error: float
    n_gamma_violations: int = 0
    n_m_violations: int = 0

    @property
    def passed(self) -> bool:
        return self.gamma_ok and self.m_ok


def validate_problem(problem: Problem, gamma: float, grid: int | tuple[int, int] = 101,
                     fd_step: float = 1e-6) -> ValidationReport:
    """Check gamma >= f_y >= m on a uniform sample of the solution box.

    Args:
        problem: the problem to check.
        gamma: fitting constant to test.
        grid: points per axis, either one int or ``(n_x, n_y)``; each >= 2.
        fd_step: step of the central-difference cross-check of ``f_y``.

    Sampling is an approximation; violations between samples go unseen.
    """
    if not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    nx, ny = (grid, grid) if isinstance(grid, int) else grid
    if nx < 2 or ny < 2:
        raise ValueError("sampling grid needs at least 2 points per axis")
    lo, hi = problem.solution_box
    X, Y = np.meshgrid(np.linspace(0.0, 1.0, nx), np.linspace(lo, hi, ny), indexing="ij")
    fy = np.broadcast_to(np.asarray(problem.f_y(X, Y), dtype=float), X.shape)

    k = int(np.argmax(fy))
    worst_gamma = (float(X.flat[k]), float(Y.flat[k]), float(fy.flat[k]))
    k = int(np.argmin(fy))
    worst_m = (float(X.flat[k]), float(Y.flat[k]), float(fy.flat[k]))

    fd = (problem.f(X, Y + fd_step) - problem.f(X, Y - fd_step)) / (2.0 * fd_step)
    fd_err = float(np.max(np.abs(fd - fy) / np.maximum(1.0, np.abs(fy))))

    return ValidationReport(
        gamma=gamma,
        grid=(nx, ny),
        gamma_ok=bool(worst_gamma[2] <= gamma),
        m_ok=bool(worst_m[2] >= problem.m),
        f_y_min=worst_m[2],
        f_y_max=worst_gamma[2],
        worst_gamma_sample=worst_gamma,
        worst_m_sample=worst_m,
        fd_max_rel_error=fd_err,
        n_gamma_violations=int(np.count_nonzero(fy > gamma)),
        n_m_violations=int(np.count_nonzero(fy < problem.m)),
    )
