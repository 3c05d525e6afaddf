import math

import mpmath as mp

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fitted_bvp import (
    MeshParams,
    SchemeParams,
    exact_solution_example1,
    fitted_coefficients,
    jacobian,
    make_example2,
    mmatrix_check,
    residual,
    stable_csch,
    stable_delta_d,
)
from fitted_bvp.mesh import Mesh
from fitted_bvp.scheme import DiscreteOperator, TridiagonalMatrix

from conftest import quiet_mesh


def ulps(a, b):
    return abs(a - b) / np.spacing(max(abs(a), abs(b)))


def test_stable_csch_values():
    # sinh(ln 3) = 4/3
    assert ulps(stable_csch(math.log(3.0)), 0.75) <= 2
    assert stable_csch(1e4) == 0.0
    x = 1e-8
    assert stable_csch(x) == pytest.approx(1.0 / x - x / 6.0, rel=1e-6)
    assert np.all(np.isfinite(stable_csch(np.array([1e-300, 1e-8, 1.0, 1e16]))))


def test_stable_delta_d_values():
    assert ulps(stable_delta_d(math.log(3.0)), 0.5) <= 2
    assert stable_delta_d(1e4) == 1.0
    assert stable_delta_d(1e-8) == pytest.approx(5e-9, rel=1e-12)


@pytest.mark.parametrize("fn", [stable_csch, stable_delta_d])
@pytest.mark.parametrize("x", [0.0, -1.0, float("nan")])
def test_hyperbolic_domain(fn, x):
    with pytest.raises(ValueError):
        fn(x)


@given(st.floats(1e-12, 700.0))
def test_hyperbolic_identities(x):
    mp.mp.dps = 40
    X = mp.mpf(x)
    assert stable_csch(x) == pytest.approx(float(1 / mp.sinh(X)), rel=1e-14)
    assert stable_delta_d(x) == pytest.approx(float(mp.coth(X) - mp.csch(X)), rel=1e-14)
    assert stable_csch(x) <= stable_csch(x) + stable_delta_d(x)


def uniform_mesh(N, eps):
    x = np.linspace(0.0, 1.0, N + 1)
    h = np.full(N, 1.0 / N)
    return Mesh(params=MeshParams(eps, 0.4, 1.0, N), alpha=0.0, omega=0.0, nodes=x,
                clamped=False, steps=h, complement=x[::-1].copy(), uniform=True)


def test_coefficients_closed_values():
    eps = 0.25 / math.log(3.0)
    mesh = uniform_mesh(4, eps)
    c = fitted_coefficients(mesh, SchemeParams.for_epsilon(1.0, 4.0, eps))
    assert np.allclose(c.a, 0.75, rtol=1e-14)
    assert np.allclose(c.d, 1.25, rtol=1e-14)
    assert np.allclose(c.delta_d, 0.5, rtol=1e-14)


def test_coefficients_beta_mismatch():
    mesh = quiet_mesh(2.0 ** -10, 64)
    with pytest.raises(ValueError):
        fitted_coefficients(mesh, SchemeParams(1.0, 4.0, 1.0))


@pytest.mark.parametrize("k", [3, 10, 20, 45])
def test_coefficient_identities(k):
    eps = 2.0 ** -k
    mesh = quiet_mesh(eps, 256)
    sp = SchemeParams.for_epsilon(1.0, 4.0, eps)
    c = fitted_coefficients(mesh, sp)
    for arr in (c.a, c.d, c.delta_d):
        assert np.all(np.isfinite(arr))
    assert np.all(c.a <= c.d)
    assert np.all((c.delta_d > 0) & (c.delta_d <= 1))
    assert np.all(np.abs((c.d - c.a) - c.delta_d) <= 2 * np.spacing(c.d))
    assert np.allclose(c.delta_d, np.tanh(sp.beta * mesh.h / 2), rtol=4e-16, atol=0)


def test_tiny_epsilon_saturates():
    eps = 2.0 ** -45
    mesh = quiet_mesh(eps, 64)
    c = fitted_coefficients(mesh, SchemeParams.for_epsilon(1.0, 4.0, eps))
    mid = slice(27, 37)  # intervals outside the layers
    assert np.all(c.delta_d[mid] == 1.0)
    assert np.all(c.a[mid] == 0.0)


def test_residual_flat_state(ex1):
    eps = 2.0 ** -10
    mesh = quiet_mesh(eps, 64)
    y = np.zeros(65)
    F = residual(ex1, mesh, SchemeParams.for_epsilon(1.0, 4.0, eps), y)
    assert F[0] == 0.0 and F[-1] == 0.0
    assert np.allclose(F[1:-1], 6.0, rtol=1e-12)


def test_residual_boundary_rows(ex2):
    eps = 2.0 ** -10
    mesh = quiet_mesh(eps, 32, p=0.3)
    y = np.random.default_rng(0).uniform(-1, 2, 33)
    F = residual(ex2, mesh, SchemeParams.for_epsilon(4.0, 4.0, eps), y)
    assert F[0] == y[0] and F[-1] == y[-1]


def test_residual_dimension_mismatch(ex1):
    mesh = quiet_mesh(0.01, 16)
    with pytest.raises(ValueError):
        residual(ex1, mesh, SchemeParams.for_epsilon(1.0, 4.0, 0.01), np.zeros(16))


@pytest.mark.parametrize("k", [10, 20, 45])
def test_exact_solution_solves_example1_scheme(ex1, k):
    # with gamma = 1, f - gamma*y is constant and the fitted scheme is exact
    eps = 2.0 ** -k
    mesh = quiet_mesh(eps, 256)
    y = exact_solution_example1(mesh.nodes, eps, one_minus_x=mesh.complement)
    F = residual(ex1, mesh, SchemeParams.for_epsilon(1.0, 4.0, eps), y)
    assert np.max(np.abs(F)) < 1e-10


def test_truncation_error_second_order(ex1):
    # gamma = 2 makes f - gamma*y non-constant, exposing the O(N^-2) consistency error
    eps = 2.0 ** -20
    norms = []
    for N in (128, 256, 512, 1024):
        mesh = quiet_mesh(eps, N)
        y = exact_solution_example1(mesh.nodes, eps, one_minus_x=mesh.complement)
        norms.append(np.max(np.abs(residual(ex1, mesh, SchemeParams.for_epsilon(2.0, 4.0, eps), y))))
    ratios = np.array(norms[:-1]) / np.array(norms[1:])
    assert np.all((ratios > 3.5) & (ratios < 4.5))


def fd_jacobian(op, y):
    """Central differences with a 3-colouring of the tridiagonal pattern."""
    n = len(y)
    dense = np.zeros((n, n))
    steps = 1e-6 * np.maximum(1.0, np.abs(y))
    for colour in range(3):
        cols = np.arange(colour, n, 3)
        e = np.zeros(n)
        e[cols] = steps[cols]
        dF = (op.residual(y + e) - op.residual(y - e))
        for j in cols:
            rows = [r for r in (j - 1, j, j + 1) if 0 <= r < n]
            dense[rows, j] = dF[rows] / (2 * steps[j])
    return dense


def assert_jacobian_matches_fd(problem, eps, gamma, p, seed, N=128):
    mesh = quiet_mesh(eps, N, p=p)
    op = DiscreteOperator(problem, mesh, SchemeParams.for_epsilon(gamma, 4.0, eps))
    y = np.random.default_rng(seed).uniform(0.0, 1.0, N + 1)
    y[0] = y[-1] = 0.0
    H = op.jacobian(y).to_dense()
    fd = fd_jacobian(op, y)
    scale = np.max(np.abs(H), axis=1, keepdims=True)
    err = np.max(np.abs(H - fd) / scale)
    assert err <= 1e-5, err


@pytest.mark.parametrize("k", [10, 20])
@pytest.mark.parametrize("seed", [0, 1, 2])
def test_jacobian_matches_finite_differences(ex1, ex2, k, seed):
    assert_jacobian_matches_fd(ex1, 2.0 ** -k, 1.0, 0.4, seed)
    assert_jacobian_matches_fd(ex2, 2.0 ** -k, 4.0, 0.3, seed)


def test_jacobian_boundary_rows(ex2):
    eps = 2.0 ** -10
    mesh = quiet_mesh(eps, 16, p=0.3)
    H = jacobian(ex2, mesh, SchemeParams.for_epsilon(4.0, 4.0, eps), np.full(17, 0.5))
    D = H.to_dense()
    assert list(D[0, :2]) == [1.0, 0.0] and list(D[-1, -2:]) == [0.0, 1.0]


def test_tridiagonal_matrix_helpers():
    T = TridiagonalMatrix(sub=np.array([1.0, 2.0]), diag=np.array([4.0, 5.0, 6.0]),
                          sup=np.array([-1.0, -3.0]))
    x = np.array([1.0, 2.0, 3.0])
    assert np.allclose(T.matvec(x), T.to_dense() @ x)
    assert T.norm_inf() == np.abs(T.to_dense()).sum(axis=1).max()
    with pytest.raises(ValueError):
        TridiagonalMatrix(sub=np.zeros(1), diag=np.zeros(3), sup=np.zeros(2))


@pytest.mark.parametrize("k", [5, 10, 30])
def test_dominance_example1(ex1, k):
    eps = 2.0 ** -k
    mesh = quiet_mesh(eps, 128)
    sp = SchemeParams.for_epsilon(1.0, 4.0, eps)
    y = np.random.default_rng(k).uniform(-5, 5, 129)
    rep = mmatrix_check(jacobian(ex1, mesh, sp, y), sp, ex1.m)
    assert np.allclose(rep.margins, 6.0, rtol=1e-10)
    assert rep.is_m_matrix and not rep.sign_violations


@pytest.mark.parametrize("k", [10, 30])
def test_dominance_example2(ex2, k):
    eps = 2.0 ** -k
    mesh = quiet_mesh(eps, 128, p=0.3)
    sp = SchemeParams.for_epsilon(4.0, 4.0, eps)
    y = np.random.default_rng(k).uniform(0, 1, 129)
    rep = mmatrix_check(jacobian(ex2, mesh, sp, y), sp, ex2.m)
    assert rep.min_margin >= 6.0 - 1e-8
    assert rep.is_m_matrix


def test_dominance_small_gamma_flags_sign(ex2):
    eps = 2.0 ** -10
    mesh = quiet_mesh(eps, 64, p=0.3)
    sp = SchemeParams.for_epsilon(0.5, 4.0, eps)
    y = np.zeros(65)  # f_y = 4 > gamma everywhere
    rep = mmatrix_check(jacobian(ex2, mesh, sp, y), sp, ex2.m)
    assert rep.sign_violations
    assert not rep.is_m_matrix


@pytest.mark.parametrize("name", ["example1", "example2"])
def test_stability_inequality(name, ex1, ex2):
    problem, gamma, p = (ex1, 1.0, 0.4) if name == "example1" else (ex2, 4.0, 0.3)
    rng = np.random.default_rng(7)
    for k in (5, 10, 30):
        eps = 2.0 ** -k
        mesh = quiet_mesh(eps, 64, p=p)
        op = DiscreteOperator(problem, mesh, SchemeParams.for_epsilon(gamma, 4.0, eps))
        lo, hi = problem.solution_box
        for _ in range(100):
            w, v = rng.uniform(lo, hi, (2, 65))
            w[[0, -1]] = v[[0, -1]] = 0.0
            lhs = np.max(np.abs(w - v))
            rhs = np.max(np.abs(op.residual(w) - op.residual(v))) / problem.m
            assert lhs <= rhs * (1 + 1e-12)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), k=st.integers(2, 45))
def test_stability_inequality_property(seed, k):
    ex2 = make_example2()
    eps = 2.0 ** -k
    mesh = quiet_mesh(eps, 32, p=0.3)
    op = DiscreteOperator(ex2, mesh, SchemeParams.for_epsilon(4.0, 4.0, eps))
    w, v = np.random.default_rng(seed).uniform(0, 1, (2, 33))
    w[[0, -1]] = v[[0, -1]] = 0.0
    assert np.max(np.abs(w - v)) <= np.max(np.abs(op.residual(w) - op.residual(v))) * (1 + 1e-12)
