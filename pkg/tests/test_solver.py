import numpy as np
import pytest
import scipy.sparse as sp

from lpsfem.assembly import LpsConfig, SparseSystem, assemble
from lpsfem.errors import FactorizationFailure, InvalidArgumentError
from lpsfem.mesh import build_structured_mesh
from lpsfem.problems import rotating_smooth
from lpsfem.solver import nested_dissection, solve
from lpsfem.spaces import FiniteElementSpace


def _system(A, b):
    A = sp.csr_matrix(A)
    return SparseSystem(A, np.asarray(b, float), A.shape[0])


def test_identity():
    b = np.array([1.0, -2.0, 3.0])
    assert np.allclose(solve(_system(np.eye(3), b)).solution, b)


def test_diagonal():
    rep = solve(_system(np.diag([2.0, 4.0]), [2.0, 4.0]))
    assert np.allclose(rep.solution, [1.0, 1.0])
    assert rep.relative_residual <= 1e-10


@pytest.fixture(scope="module")
def lps_matrix():
    mesh = build_structured_mesh(2, 6)
    space = FiniteElementSpace(mesh, "curl", 2)
    return assemble(rotating_smooth("curl"), mesh, space, LpsConfig(r=2)).matrix


@pytest.mark.parametrize("method", ["auto", "direct"])
def test_manufactured_recovery(lps_matrix, method):
    x_star = np.random.default_rng(1).standard_normal(lps_matrix.shape[0])
    rep = solve(_system(lps_matrix, lps_matrix @ x_star), method=method)
    assert np.abs(rep.solution - x_star).max() < 1e-9 * max(1, np.abs(x_star).max())
    assert rep.relative_residual <= 1e-10


def test_iterative_meets_residual_contract(lps_matrix):
    x_star = np.random.default_rng(1).standard_normal(lps_matrix.shape[0])
    b = lps_matrix @ x_star
    rep = solve(_system(lps_matrix, b), method="iterative")
    assert rep.relative_residual <= 1e-10
    # forward error is bounded by cond(A) times the residual
    cond = np.linalg.cond(lps_matrix.toarray())
    rel = np.linalg.norm(rep.solution - x_star) / np.linalg.norm(x_star)
    assert rel <= 2 * cond * rep.relative_residual


def test_zero_rhs_is_trivial(lps_matrix):
    rep = solve(_system(lps_matrix, np.zeros(lps_matrix.shape[0])))
    assert rep.method == "trivial" and not np.any(rep.solution)


def test_singular_matrix_raises():
    A = np.array([[1.0, 1.0], [1.0, 1.0]])
    with pytest.raises(FactorizationFailure):
        solve(_system(A, [1.0, 2.0]), method="direct")


def test_bad_arguments():
    with pytest.raises(InvalidArgumentError):
        solve(SparseSystem(sp.csr_matrix(np.ones((2, 3))), np.ones(2), 2))
    with pytest.raises(InvalidArgumentError):
        solve(_system(np.eye(2), np.ones(3)))
    with pytest.raises(InvalidArgumentError):
        solve(_system(np.eye(2), np.ones(2)), method="cg")


def test_ordering_is_a_permutation(lps_matrix):
    perm = nested_dissection(lps_matrix)
    assert np.array_equal(np.sort(perm), np.arange(lps_matrix.shape[0]))


def test_solution_is_deterministic(lps_matrix):
    b = np.arange(lps_matrix.shape[0], dtype=float)
    a1 = solve(_system(lps_matrix, b)).solution
    a2 = solve(_system(lps_matrix, b)).solution
    assert np.array_equal(a1, a2)
