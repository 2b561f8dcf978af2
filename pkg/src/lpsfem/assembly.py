"""Assembly of the stabilized linear system.

The matrix row index is the test function, the column index the trial function:
``A[i, j] = a(phi_j, phi_i) + S1(phi_j, phi_i) + S2(phi_j, phi_i)``.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from . import kernels
from .errors import ConfigurationError, DegenerateCellError, InvalidArgumentError
from .mesh import classify_boundary, facet_flux
from .operators import adjoint_advection, adjoint_constant
from .polynomials import eval_monomials, monomial_exponents
from .quadrature import REFERENCE_MEASURE, required_degree, simplex_rule

DEFAULT_CHUNK = 1024
# compress the COO buffer into CSR once it holds this many entries
_FLUSH_ENTRIES = 8_000_000


@dataclass(frozen=True)
class LpsConfig:
    r: int = 1
    enriched: bool = True
    enable_s1: bool = True
    enable_s2: bool = True
    cf_strategy: str = "pointwise"
    solver_tol: float = 1e-10
    quadrature_bump: int = 2
    chunk_size: int = DEFAULT_CHUNK

    def __post_init__(self):
        if int(self.r) != self.r or self.r < 1:
            raise InvalidArgumentError("r must be a positive integer")
        if not 0.0 < self.solver_tol <= 1e-6:
            raise InvalidArgumentError("solver_tol must lie in (0, 1e-6]")
        if self.cf_strategy not in ("facet", "pointwise"):
            raise ConfigurationError(f"unknown c_f strategy {self.cf_strategy!r}")
        if self.quadrature_bump < 0 or self.chunk_size < 1:
            raise InvalidArgumentError("quadrature_bump >= 0 and chunk_size >= 1 required")


@dataclass(frozen=True, eq=False)
class SparseSystem:
    matrix: sp.csr_matrix
    rhs: np.ndarray
    dof_count: int
    dim: int = 3  # spatial dimension; selects the direct-solver size limit


# -- quadrature choices -------------------------------------------------------------

def cell_degree(problem, config):
    bump = 0 if problem.polynomial_coefficients else config.quadrature_bump
    return required_degree(config.r, "advection") + bump


def facet_degree(problem, config):
    bump = 0 if problem.polynomial_coefficients else config.quadrature_bump
    return required_degree(config.r, "facet") + bump


def facet_weights(mesh, facets, rule):
    """Physical facet quadrature weights ``(nf, nq)``."""
    scale = mesh.facet_measures[facets] / REFERENCE_MEASURE[mesh.dim - 1]
    return scale[:, None] * rule.weights[None, :]


# -- building blocks ----------------------------------------------------------------

def beta_bar(problem, mesh, cells=None, degree=6):
    """Cell averages of the velocity, ``(nc, dim)``."""
    cells = np.arange(mesh.n_cells) if cells is None else np.atleast_1d(cells)
    rule = simplex_rule(mesh.dim, degree)
    x = mesh.to_physical(cells, rule.cartesian)
    b = problem.beta(x)
    return np.einsum("q,cqd->cd", rule.weights, b) / rule.weights.sum()


def cf_values(mesh, beta, facets, degree=4):
    """``sgn(int_f beta . n_f)`` per facet, +1 on characteristic facets."""
    flux, eps = facet_flux(mesh, beta, np.atleast_1d(facets), degree)
    return np.where(flux < -eps, -1.0, 1.0)


def cf_value(mesh, facet, beta, degree=4):
    return float(cf_values(mesh, beta, [facet], degree)[0])


def adjoint_advection_apply(form_kind, beta_const, value, jacobian):
    """Adjoint advection of a field with a constant velocity.

    For a constant velocity the formula is the same for both kinds; ``value``
    is accepted so callers can pass a full sample.
    """
    if form_kind not in ("curl", "div"):
        raise ConfigurationError(f"unknown form kind {form_kind!r}")
    del value
    return adjoint_constant(np.asarray(jacobian), np.asarray(beta_const))


@lru_cache(maxsize=None)
def _projection_matrix_cached(order, dim, degree):
    rule = simplex_rule(dim, degree)
    psi = eval_monomials(monomial_exponents(dim, order), rule.cartesian)[0]  # (nq, m)
    W = rule.weights
    G = psi.T @ (W[:, None] * psi)
    if np.linalg.cond(G) > 1e12:
        raise DegenerateCellError("singular projection Gram matrix")
    P = psi @ np.linalg.solve(G, psi.T * W[None, :])
    P.flags.writeable = False
    return P


def projection_matrix(r, dim, rule):
    """Discrete L2 projector onto scalar ``P_{r-1}`` acting on samples at ``rule`` points.

    An affine map scales all weights by the same factor, so the reference
    projector equals the physical one on every cell.
    """
    return _projection_matrix_cached(r - 1, dim, rule.exactness_degree)


def fluctuation_apply(P, samples, axis=1):
    """``kappa = id - pi`` on samples whose quadrature axis is ``axis``."""
    samples = np.asarray(samples)
    moved = np.moveaxis(samples, axis, 0)
    proj = np.tensordot(P, moved, axes=(1, 0))
    return samples - np.moveaxis(proj, 0, axis)


# -- assembly -----------------------------------------------------------------------

class _Accumulator:
    """COO buffer that periodically folds into a CSR sum (fixed order, deterministic)."""

    def __init__(self, n):
        self.n = n
        self.parts = []
        self.count = 0
        self.total = sp.csr_matrix((n, n))

    def add(self, rows, cols, block):
        nb_r, nb_c = rows.shape[1], cols.shape[1]
        r = np.repeat(rows, nb_c, axis=1).ravel()
        c = np.tile(cols, (1, nb_r)).ravel()
        self.parts.append((r, c, block.ravel()))
        self.count += r.size
        if self.count > _FLUSH_ENTRIES:
            self.flush()

    def flush(self):
        if not self.parts:
            return
        r = np.concatenate([p[0] for p in self.parts])
        c = np.concatenate([p[1] for p in self.parts])
        v = np.concatenate([p[2] for p in self.parts])
        self.parts, self.count = [], 0
        self.total = self.total + sp.csr_matrix((v, (r, c)), shape=(self.n, self.n))

    def result(self):
        self.flush()
        A = self.total.tocsr()
        A.sum_duplicates()
        A.sort_indices()
        return A


def _chunks(n, size):
    for start in range(0, n, size):
        yield np.arange(start, min(n, start + size))


def cell_contributions(problem, space, cells, rule, config, P=None):
    """Local volume matrices ``(nc, nb, nb)`` and loads ``(nc, nb)``."""
    m = space.mesh
    kind = problem.form_kind
    xq = m.to_physical(cells, rule.cartesian)
    V, J = space.tabulate(cells, rule.cartesian)
    beta = problem.beta(xq)
    w = rule.weights[None, :] * m.det[cells][:, None]
    Ls = adjoint_advection(kind, V, J, beta[:, :, None, :],
                           problem.beta_jacobian(xq)[:, :, None, :, :])
    test = Ls + problem.gamma_values(xq)[:, :, None, None] * V
    K = kernels.weighted_gram(w, test, V)
    if config.enable_s2:
        if P is None:
            P = projection_matrix(config.r, m.dim, rule)
        bb = np.einsum("cq,cqd->cd", w, beta) / w.sum(axis=1)[:, None]
        kl = fluctuation_apply(P, adjoint_constant(J, bb[:, None, None, :]))
        K += m.h[cells][:, None, None] * kernels.weighted_gram(w, kl, kl)
    F = kernels.weighted_load(w, V, problem.source_values(xq))
    return K, F


def _facet_values(space, cells, locals_, ref_vals):
    return space.push_forward(cells, ref_vals[locals_])


def assemble(problem, mesh, space, config):
    """Assemble the matrix and right-hand side of the stabilized scheme."""
    if space.mesh is not mesh:
        raise ConfigurationError("space was built on a different mesh")
    if problem.dim != mesh.dim:
        raise ConfigurationError("problem and mesh dimensions differ")
    if space.kind != problem.form_kind:
        raise ConfigurationError(f"{problem.form_kind} problem needs a {problem.form_kind} space")
    if space.r != config.r or space.enriched != config.enriched:
        raise ConfigurationError("space order/enrichment disagree with the configuration")

    n = space.ndofs
    dofs = space.dofmap.cell_dofs
    acc = _Accumulator(n)
    rhs = np.zeros(n)

    crule = simplex_rule(mesh.dim, cell_degree(problem, config))
    P = projection_matrix(config.r, mesh.dim, crule) if config.enable_s2 else None
    for cells in _chunks(mesh.n_cells, config.chunk_size):
        K, F = cell_contributions(problem, space, cells, crule, config, P)
        acc.add(dofs[cells], dofs[cells], K)
        np.add.at(rhs, dofs[cells], F)

    frule = simplex_rule(mesh.dim - 1, facet_degree(problem, config))
    ref_vals = space.facet_tabulation(frule)[0]  # (dim+1, nq, nb, dim)
    fdeg = frule.exactness_degree

    for facets in _chunks(len(mesh.interior_facets), config.chunk_size):
        fi = mesh.interior_facets[facets]
        cp, cm = mesh.facet_cells[fi, 0], mesh.facet_cells[fi, 1]
        Vp = _facet_values(space, cp, mesh.facet_local[fi, 0], ref_vals)
        Vm = _facet_values(space, cm, mesh.facet_local[fi, 1], ref_vals)
        x = mesh.facet_points(fi, frule)
        bn = np.einsum("fqd,fd->fq", problem.beta(x), mesh.facet_normals[fi])
        wb = facet_weights(mesh, fi, frule) * bn
        if not config.enable_s1:
            cf = np.zeros((len(fi), 1))
        elif config.cf_strategy == "pointwise":
            cf = np.where(bn < 0.0, -1.0, 1.0)
        else:
            cf = cf_values(mesh, problem.beta, fi, fdeg)[:, None]
        sides = ((cp, Vp, 1.0), (cm, Vm, -1.0))
        for c_test, v_test, s_test in sides:
            for c_trial, v_trial, s_trial in sides:
                coef = s_test * (0.5 + cf * s_trial)
                block = kernels.weighted_gram(wb * coef, v_test, v_trial)
                acc.add(dofs[c_test], dofs[c_trial], block)

    bc = classify_boundary(mesh, problem.beta, fdeg)
    for fset, outflow in ((bc.outflow_facets, True), (bc.inflow_facets, False)):
        for facets in _chunks(len(fset), config.chunk_size):
            fb = fset[facets]
            c = mesh.facet_cells[fb, 0]
            V = _facet_values(space, c, mesh.facet_local[fb, 0], ref_vals)
            x = mesh.facet_points(fb, frule)
            bn = np.einsum("fqd,fd->fq", problem.beta(x), mesh.facet_normals[fb])
            wb = facet_weights(mesh, fb, frule) * bn
            if outflow:
                acc.add(dofs[c], dofs[c], kernels.weighted_gram(wb, V, V))
            else:
                g = problem.inflow_values(x)
                np.add.at(rhs, dofs[c], -kernels.weighted_load(wb, V, g))

    A = acc.result()
    empty = np.flatnonzero(np.diff(A.indptr) == 0)
    if len(empty):
        raise ConfigurationError(f"{len(empty)} structurally empty matrix rows")
    return SparseSystem(A, rhs, n, mesh.dim)
