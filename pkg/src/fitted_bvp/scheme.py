"""Exponentially fitted three-point scheme and its Jacobian.

On each interval the scheme uses ``a_i = csch(beta*h_{i-1})``,
``d_i = coth(beta*h_{i-1})`` and ``dd_i = d_i - a_i = tanh(beta*h_{i-1}/2)``
with ``beta = sqrt(gamma)/eps``.  ``beta*h`` reaches ~1e10 for tiny eps, so
sinh/cosh are never formed directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .mesh import Mesh
from .problem import Problem


@dataclass(frozen=True)
class SchemeParams:
    """Fitting constant ``gamma``, central weight ``q`` and ``beta = sqrt(gamma)/eps``."""

    gamma: float
    q: float
    beta: float

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if not self.q > 0:
            raise ValueError(f"q must be positive, got {self.q}")
        if not self.beta > 0:
            raise ValueError(f"beta must be positive, got {self.beta}")

    @classmethod
    def for_epsilon(cls, gamma: float, q: float, epsilon: float) -> SchemeParams:
        return cls(gamma=gamma, q=q, beta=math.sqrt(gamma) / epsilon)


@dataclass(frozen=True, eq=False)
class SchemeCoefficients:
    """Arrays of length N; entry ``k`` belongs to interval ``k`` (``a_{k+1}`` in 1-based terms)."""

    a: np.ndarray
    d: np.ndarray
    delta_d: np.ndarray


@dataclass(frozen=True, eq=False)
class TridiagonalMatrix:
    """Square tridiagonal matrix of order n.

    ``sub[k]`` is entry ``(k+1, k)``, ``sup[k]`` is entry ``(k, k+1)``.
    """

    sub: np.ndarray
    diag: np.ndarray
    sup: np.ndarray

    def __post_init__(self):
        n = len(self.diag)
        if len(self.sub) != n - 1 or len(self.sup) != n - 1:
            raise ValueError(
                f"inconsistent bands: diag {n}, sub {len(self.sub)}, sup {len(self.sup)}"
            )

    @property
    def n(self) -> int:
        return len(self.diag)

    def matvec(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        y = self.diag * x
        y[1:] += self.sub * x[:-1]
        y[:-1] += self.sup * x[1:]
        return y

    def to_dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.sub, -1) + np.diag(self.sup, 1)

    def norm_inf(self) -> float:
        row = np.abs(self.diag)
        row[1:] += np.abs(self.sub)
        row[:-1] += np.abs(self.sup)
        return float(row.max())


def _check_positive(x):
    x = np.asarray(x, dtype=float)
    if np.any(~(x > 0.0)):
        raise ValueError("argument must be positive")
    return x


def stable_csch(x):
    """1/sinh(x) for x > 0 as ``2e^-x / (1 - e^-2x)``; underflows to 0, never overflows."""
    x = _check_positive(x)
    out = 2.0 * np.exp(-x) / -np.expm1(-2.0 * x)
    return float(out) if out.ndim == 0 else out


def stable_delta_d(x):
    """coth(x) - csch(x) evaluated as tanh(x/2), free of cancellation."""
    x = _check_positive(x)
    out = np.tanh(0.5 * x)
    return float(out) if out.ndim == 0 else out


def fitted_coefficients(mesh: Mesh, sp: SchemeParams) -> SchemeCoefficients:
    expected = math.sqrt(sp.gamma) / mesh.epsilon
    if not math.isclose(sp.beta, expected, rel_tol=1e-12):
        raise ValueError(f"beta={sp.beta} does not match sqrt(gamma)/eps={expected}")
    bh = sp.beta * mesh.h
    a = stable_csch(bh)
    dd = stable_delta_d(bh)
    return SchemeCoefficients(a=a, d=a + dd, delta_d=dd)


class DiscreteOperator:
    """Nonlinear map F: R^{N+1} -> R^{N+1} of the fitted scheme on one mesh.

    Coefficients are computed once; :meth:`residual` and :meth:`jacobian`
    are then cheap vectorised evaluations.
    """

    def __init__(self, problem: Problem, mesh: Mesh, sp: SchemeParams,
                 coeffs: SchemeCoefficients | None = None):
        self.problem = problem
        self.mesh = mesh
        self.sp = sp
        self.coeffs = coeffs if coeffs is not None else fitted_coefficients(mesh, sp)
        c = self.coeffs
        q = sp.q
        aL, aR = c.a[:-1], c.a[1:]
        dL, dR = c.d[:-1], c.d[1:]
        ddL, ddR = c.delta_d[:-1], c.delta_d[1:]
        self._dsum = ddL + ddR
        self._scale = sp.gamma / self._dsum
        self._wL = (q + 1.0) * aL + dL + ddR
        self._wR = (q + 1.0) * aR + dR + ddL
        # -q(a_i + a_{i+1}) - 2(d_i + d_{i+1})
        self._diag0 = -q * (aL + aR) - 2.0 * (dL + dR)
        self._offL = (q + 2.0) * aL
        self._offR = (q + 2.0) * aR

    @property
    def size(self) -> int:
        return self.mesh.N + 1

    def _check(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        if y.shape != (self.size,):
            raise ValueError(f"state must have shape ({self.size},), got {y.shape}")
        return y

    def residual(self, y) -> np.ndarray:
        y = self._check(y)
        x = self.mesh.nodes
        fv = np.asarray(self.problem.f(x, y), dtype=float)
        q, g = self.sp.q, self.sp.gamma
        favg = (fv[:-2] + q * fv[1:-1] + fv[2:]) / g
        bracket = (self._wL * (y[:-2] - y[1:-1]) - self._wR * (y[1:-1] - y[2:])
                   - favg * self._dsum)
        F = np.empty_like(y)
        F[0] = y[0]
        F[-1] = y[-1]
        F[1:-1] = self._scale * bracket
        return F

    def jacobian(self, y) -> TridiagonalMatrix:
        y = self._check(y)
        x = self.mesh.nodes
        fy = np.broadcast_to(np.asarray(self.problem.f_y(x, y), dtype=float), y.shape)
        q, g = self.sp.q, self.sp.gamma
        s, S = self._scale, self._dsum
        n = self.size
        diag = np.ones(n)
        sub = np.zeros(n - 1)
        sup = np.zeros(n - 1)
        diag[1:-1] = s * (self._diag0 - (q / g) * fy[1:-1] * S)
        sub[:-1] = s * (S * (1.0 - fy[:-2] / g) + self._offL)
        sup[1:] = s * (S * (1.0 - fy[2:] / g) + self._offR)
        return TridiagonalMatrix(sub=sub, diag=diag, sup=sup)


def residual(problem: Problem, mesh: Mesh, sp: SchemeParams, y) -> np.ndarray:
    """Evaluate the discrete operator F at ``y`` (length N+1).

    Rows 0 and N return ``y_0`` and ``y_N``; interior rows are the fitted
    three-point equations scaled by ``gamma / (dd_i + dd_{i+1})``.
    """
    return DiscreteOperator(problem, mesh, sp).residual(y)


def jacobian(problem: Problem, mesh: Mesh, sp: SchemeParams, y) -> TridiagonalMatrix:
    """Tridiagonal Frechet derivative of :func:`residual` at ``y``."""
    return DiscreteOperator(problem, mesh, sp).jacobian(y)


@dataclass(frozen=True, eq=False)
class DominanceReport:
    """Row-wise sign pattern and diagonal-dominance margins of a Jacobian.

    Only interior rows 1..N-1 are assessed.  ``margins[k]`` belongs to row
    ``k+1`` and equals ``|h_ii| - |h_i,i-1| - |h_i,i+1|``.
    """

    margins: np.ndarray
    sign_ok: np.ndarray
    min_margin: float
    required_margin: float
    tolerance: float

    @property
    def sign_violations(self) -> list[int]:
        return [int(k) + 1 for k in np.flatnonzero(~self.sign_ok)]

    @property
    def dominant(self) -> bool:
        return self.min_margin >= self.required_margin - self.tolerance

    @property
    def is_m_matrix(self) -> bool:
        """Sign pattern holds everywhere and dominance margin is met."""
        return bool(np.all(self.sign_ok)) and self.dominant


def mmatrix_check(H: TridiagonalMatrix, sp: SchemeParams, m: float,
                  tolerance: float = 1e-8) -> DominanceReport:
    """Check diag < 0 <= off-diagonals and margin >= (q+2)*m on interior rows.

    The row-dominance margin uses both off-diagonals of the same row.
    """
    d = H.diag[1:-1]
    lo = H.sub[:-1]
    hi = H.sup[1:]
    margins = np.abs(d) - np.abs(lo) - np.abs(hi)
    sign_ok = (d < 0.0) & (lo >= 0.0) & (hi >= 0.0)
    return DominanceReport(
        margins=margins,
        sign_ok=sign_ok,
        min_margin=float(margins.min()) if margins.size else math.inf,
        required_margin=(sp.q + 2.0) * m,
        tolerance=tolerance,
    )
