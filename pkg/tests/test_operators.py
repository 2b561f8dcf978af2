import numpy as np
import pytest
import sympy as sp

from lpsfem.assembly import adjoint_advection_apply
from lpsfem.operators import (adjoint_advection, adjoint_constant, advection,
                              coercivity_eigenvalues, symmetric_part)

X = sp.symbols("x y z")


def _random_poly_vec(rng, deg=2):
    mons = [X[0] ** a * X[1] ** b * X[2] ** c for a in range(deg + 1) for b in range(deg + 1)
            for c in range(deg + 1) if a + b + c <= deg]
    return sp.Matrix([sum(sp.Rational(int(rng.integers(-5, 6)), 4) * m for m in mons)
                      for _ in range(3)])


def _curl(F):
    x, y, z = X
    return sp.Matrix([sp.diff(F[2], y) - sp.diff(F[1], z), sp.diff(F[0], z) - sp.diff(F[2], x),
                      sp.diff(F[1], x) - sp.diff(F[0], y)])


def _grad(f):
    return sp.Matrix([sp.diff(f, v) for v in X])


def _div(F):
    return sum(sp.diff(F[i], X[i]) for i in range(3))


def _symbolic(kind, beta, u):
    """Vector-calculus definitions, independent of the matrix formulas."""
    if kind == "curl":
        L = _grad(beta.dot(u)) - beta.cross(_curl(u))
        Ls = -beta * _div(u) + _curl(beta.cross(u))
    else:
        L = beta * _div(u) + _curl(u.cross(beta))
        Ls = -_grad(beta.dot(u)) - _curl(u).cross(beta)
    return L, Ls


def _numeric(expr_vec, pts):
    f = sp.lambdify(X, list(expr_vec), "numpy")
    return np.stack([np.broadcast_to(c, pts.shape[:1]) for c in f(*pts.T)], axis=-1)


def _jac(expr_vec, pts):
    J = sp.Matrix(expr_vec).jacobian(sp.Matrix(X))
    f = sp.lambdify(X, J, "numpy")
    return np.stack([np.array(f(*p), dtype=float) for p in pts])


@pytest.mark.parametrize("kind", ["curl", "div"])
@pytest.mark.parametrize("seed", [0, 1, 2])
def test_matrix_formulas_match_vector_calculus(kind, seed):
    rng = np.random.default_rng(seed)
    beta, u = _random_poly_vec(rng), _random_poly_vec(rng)
    L, Ls = _symbolic(kind, beta, u)
    pts = rng.uniform(-1, 1, (6, 3))
    b, db = _numeric(beta, pts), _jac(beta, pts)
    uu, du = _numeric(u, pts), _jac(u, pts)
    assert np.allclose(advection(kind, uu, du, b, db), _numeric(L, pts), atol=1e-11)
    assert np.allclose(adjoint_advection(kind, uu, du, b, db), _numeric(Ls, pts), atol=1e-11)


@pytest.mark.parametrize("kind", ["curl", "div"])
def test_two_dimensional_formulas_are_the_planar_restriction(kind):
    rng = np.random.default_rng(5)
    b2, db2 = rng.standard_normal((4, 2)), rng.standard_normal((4, 2, 2))
    u2, du2 = rng.standard_normal((4, 2)), rng.standard_normal((4, 2, 2))
    pad = lambda v: np.concatenate([v, np.zeros((4, 1))], axis=1)
    padJ = lambda J: np.pad(J, ((0, 0), (0, 1), (0, 1)))
    for op in (advection, adjoint_advection):
        full = op(kind, pad(u2), padJ(du2), pad(b2), padJ(db2))
        assert np.allclose(full[:, :2], op(kind, u2, du2, b2, db2))
        assert np.allclose(full[:, 2], 0.0)


def test_symbolic_example_constant_beta():
    # beta = (1,0,0), v = (x,0,0): curl-kind adjoint is -beta div v + curl(beta x v) = (-1, 0, 0)
    beta = sp.Matrix([1, 0, 0])
    v = sp.Matrix([X[0], 0, 0])
    _, Ls = _symbolic("curl", beta, v)
    assert list(Ls) == [-1, 0, 0]
    dv = np.zeros((1, 3, 3))
    dv[0, 0, 0] = 1.0
    got = adjoint_advection_apply("curl", np.array([1.0, 0, 0]), np.array([[0.3, 0, 0]]), dv)
    assert np.allclose(got, [[-1.0, 0.0, 0.0]])


def test_constant_field_constant_velocity_gives_zero():
    dv = np.zeros((3, 3))
    assert np.allclose(adjoint_constant(dv, np.array([1.0, 2.0, 3.0])), 0.0)


@pytest.mark.parametrize("kind", ["curl", "div"])
def test_identity_with_finite_difference_jacobians(kind):
    rng = np.random.default_rng(7)
    A, c = rng.standard_normal((3, 3)), rng.standard_normal(3)
    Q = rng.standard_normal((3, 3, 3))

    def u(x):
        return x @ A.T + np.einsum("ijk,...j,...k->...i", Q, x, x) + c

    def beta(x):
        return np.stack([np.sin(x[..., 0]) + x[..., 1], x[..., 2] ** 2, np.exp(x[..., 1])], -1)

    def fd(f, x, h=1e-6):
        cols = []
        for d in range(3):
            e = np.zeros(3)
            e[d] = h
            cols.append((f(x + e) - f(x - e)) / (2 * h))
        return np.stack(cols, axis=-1)

    x = rng.uniform(-1, 1, (10, 3))
    du, db = fd(u, x), fd(beta, x)
    lhs = advection(kind, u(x), du, beta(x), db) + adjoint_advection(kind, u(x), du, beta(x), db)
    rhs = np.einsum("...ij,...j->...i", symmetric_part(kind, db), u(x))
    assert np.allclose(lhs, rhs, atol=1e-11)


def test_coercivity_eigenvalue_examples():
    skew = np.array([[0.0, 1.0], [-1.0, 0.0]])
    assert np.allclose(coercivity_eigenvalues("curl", 1.0, skew), 1.0)
    assert np.allclose(coercivity_eigenvalues("div", 1.0, skew), 1.0)
    assert np.allclose(coercivity_eigenvalues("curl", 3.5, np.zeros((3, 3))), 3.5)
