"""Modified Bakhvalov mesh on [0, 1] with layers at both endpoints.

The generating function is ``kappa(t) = a*eps*t / (p - t)`` on ``[0, alpha]``,
a cubic ``pi`` on ``[alpha, 1/2]`` that matches kappa up to second
derivatives at ``alpha`` and hits ``pi(1/2) = 1/2``, and the reflection
``1 - phi(1 - t)`` on ``[1/2, 1]``.  Here ``alpha = p - eps**(1/3)``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateMeshError, ParameterError


class ClampedMeshWarning(UserWarning):
    """p <= eps**(1/3): the transition point was clamped to alpha = 0."""


@dataclass(frozen=True)
class MeshParams:
    epsilon: float
    p: float
    a: float
    N: int

    def __post_init__(self):
        if not 0.0 < self.epsilon < 1.0:
            raise ParameterError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if not 0.0 < self.p < 0.5:
            raise ParameterError(f"p must lie in (0, 1/2), got {self.p}")
        if not self.a > 0.0:
            raise ParameterError(f"a must be positive, got {self.a}")
        if int(self.N) != self.N or self.N < 4 or self.N % 2:
            raise ParameterError(f"N must be an even integer >= 4, got {self.N}")

    @property
    def eps_cbrt(self) -> float:
        return float(np.cbrt(self.epsilon))


@dataclass(frozen=True, eq=False)
class Mesh:
    """Nodes ``x_0 <= ... <= x_N`` and the generating-function constants.

    For tiny eps the right-layer nodes ``1 - kappa`` cannot all be told
    apart in double precision, so the steps and the distances ``1 - x_i``
    are stored separately, both computed from the left half without
    cancellation.  Use :attr:`h` and :attr:`complement`, not differences
    of :attr:`nodes`.
    """

    params: MeshParams
    alpha: float
    omega: float
    nodes: np.ndarray
    clamped: bool
    steps: np.ndarray
    complement: np.ndarray
    uniform: bool = False

    @property
    def N(self) -> int:
        return self.params.N

    @property
    def epsilon(self) -> float:
        return self.params.epsilon

    @property
    def h(self) -> np.ndarray:
        """Steps ``h_i = x_{i+1} - x_i``, i = 0..N-1."""
        return self.steps


def transition_point(params: MeshParams) -> tuple[float, bool]:
    """Return ``(alpha, clamped)``; alpha is clamped to 0 when p <= eps**(1/3)."""
    alpha = params.p - params.eps_cbrt
    if alpha <= 0.0:
        return 0.0, True
    return alpha, False


def kappa_derivatives(params: MeshParams, t: float) -> tuple[float, float, float]:
    """kappa, kappa' and kappa'' at ``t < p``, evaluated analytically."""
    ae, p = params.a * params.epsilon, params.p
    d = p - t
    return ae * t / d, ae * p / (d * d), 2.0 * ae * p / (d * d * d)


def compute_omega(params: MeshParams, alpha: float) -> float:
    """Cubic coefficient fixed by ``pi(1/2) = 1/2``.

    For ``alpha = p - eps**(1/3)`` this is
    ``(1/2-alpha)**-3 * (1/2 - a*(p*s**2 + p*s*eps**(1/3) + alpha*eps**(2/3)))``
    with ``s = 1/2 - alpha``; the form used here also covers the clamped
    ``alpha = 0`` case.

    Raises:
        ParameterError: if ``alpha >= 1/2`` or the resulting omega is negative.
    """
    if not alpha < 0.5:
        raise ParameterError(f"alpha must be below 1/2, got {alpha}")
    k0, k1, k2 = kappa_derivatives(params, alpha)
    s = 0.5 - alpha
    omega = (0.5 - (k0 + s * (k1 + s * 0.5 * k2))) / (s * s * s)
    if omega < 0.0:
        raise ParameterError(
            f"omega = {omega:.6g} < 0 for a={params.a}, p={params.p}, "
            f"eps={params.epsilon:.6g}; decrease a"
        )
    return omega


def generating_function(t, params: MeshParams, alpha: float, omega: float):
    """Evaluate the mesh generating function phi at ``t`` in [0, 1].

    Accepts a scalar or an array; returns the same shape.
    """
    ta = np.asarray(t, dtype=float)
    if np.any(ta < 0.0) or np.any(ta > 1.0):
        raise ValueError("t must lie in [0, 1]")
    right = ta > 0.5
    tl = np.where(right, 1.0 - ta, ta)
    out = _left_half(tl, params, alpha, omega)
    out = np.where(right, 1.0 - out, out)
    return float(out) if out.ndim == 0 else out


def _left_half(t: np.ndarray, params: MeshParams, alpha: float, omega: float) -> np.ndarray:
    ae, p = params.a * params.epsilon, params.p
    k0, k1, k2 = kappa_derivatives(params, alpha)
    in_layer = t <= alpha
    # guard the unused branch against p - t = 0
    kap = ae * t / np.where(in_layer, p - t, 1.0)
    s = t - alpha
    cub = ((omega * s + 0.5 * k2) * s + k1) * s + k0
    return np.where(in_layer, kap, cub)


def build_mesh(params: MeshParams) -> Mesh:
    """Build nodes ``x_i = phi(i/N)``.

    The left half is evaluated, node N/2 is set to exactly 1/2 and the
    right half is mirrored, so ``x_i + x_{N-i} == 1`` holds bitwise.

    When ``p <= eps**(1/3)`` the transition point is clamped to 0 (with a
    :class:`ClampedMeshWarning`); if omega is then negative the mesh falls
    back to uniform nodes and ``uniform`` is set.

    Raises:
        ParameterError: from :func:`compute_omega` on unclamped parameters.
        DegenerateMeshError: if some step is not positive.
    """
    alpha, clamped = transition_point(params)
    if clamped:
        warnings.warn(
            f"p={params.p} <= eps**(1/3)={params.eps_cbrt:.6g}: transition point "
            "clamped to alpha=0, layer-mesh hypothesis violated",
            ClampedMeshWarning,
            stacklevel=2,
        )
    N = params.N
    half = N // 2
    t = np.arange(half + 1) / N
    uniform = False
    try:
        omega = compute_omega(params, alpha)
    except ParameterError:
        if not clamped:
            raise
        # clamped and the cubic cannot reach 1/2 monotonically: eps is not
        # small, so the layers are resolved by a uniform mesh
        warnings.warn(
            f"omega < 0 with alpha clamped (eps={params.epsilon:.6g}, p={params.p}, "
            f"a={params.a}): using a uniform mesh",
            ClampedMeshWarning,
            stacklevel=2,
        )
        omega, uniform = 0.0, True
    left = t.copy() if uniform else _left_half(t, params, alpha, omega)
    left[0], left[half] = 0.0, 0.5
    nodes = np.concatenate([left, 1.0 - left[half - 1:: -1]])
    complement = np.empty(N + 1)
    complement[: half + 1] = 1.0 - left
    complement[half:] = left[::-1]
    hl = np.diff(left)
    h = np.concatenate([hl, hl[::-1]])
    if not np.all(h > 0.0):
        bad = int(np.argmin(h))
        raise DegenerateMeshError(f"non-positive step h_{bad} = {h[bad]:.3g}")
    for arr in (nodes, complement, h):
        arr.setflags(write=False)
    return Mesh(params=params, alpha=alpha, omega=omega, nodes=nodes, clamped=clamped,
                steps=h, complement=complement, uniform=uniform)


@dataclass(frozen=True)
class MeshReport:
    N: int
    max_scaled_step: float
    max_scaled_step_jump: float
    monotone: bool
    symmetry_defect: float


def mesh_diagnostics(mesh: Mesh) -> MeshReport:
    """Empirical step bounds: max N*h_i and max N^2*|h_i - h_{i-1}|."""
    N = mesh.N
    h = mesh.h
    x = mesh.nodes
    return MeshReport(
        N=N,
        max_scaled_step=float(N * h.max()),
        max_scaled_step_jump=float(N * N * np.abs(np.diff(h)).max()),
        monotone=bool(np.all(h > 0.0) and np.all(np.diff(x) >= 0.0)),
        symmetry_defect=float(np.max(np.abs(x + x[::-1] - 1.0))),
    )
