"""Numerical checks of the structural properties behind the stabilized scheme.

Everything here is a diagnostic: local inf-sup constants between bubbles and
the projection space, the bubble-corrected interpolant, the coercivity
condition on the data, and a handful of algebraic identities.
"""

import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg

from .assembly import LpsConfig, assemble
from .errors import (IllConditionedBasisError, InvalidArgumentError, UnsupportedElementError,
                     WellposednessWarning)
from .elements import KINDS, SUPPORTED_ORDERS, bubble_basis, bubble_directions, projection_basis
from .mesh import SimplicialMesh, build_structured_mesh
from .operators import adjoint_advection, advection, coercivity_eigenvalues, symmetric_part
from .polynomials import eval_monomials, monomial_exponents
from .quadrature import MAX_DEGREE, REFERENCE_MEASURE, simplex_rule
from .spaces import FiniteElementSpace

GRAM_CONDITION_LIMIT = 1e12


# -- local inf-sup ------------------------------------------------------------------

@dataclass(frozen=True)
class InfSupResult:
    kind: str
    r: int
    dim: int
    constant: float
    gram_condition: float


def _check_element(kind, r, dim):
    if kind not in KINDS:
        raise UnsupportedElementError(f"unknown kind {kind!r}")
    if r not in SUPPORTED_ORDERS or dim not in (2, 3):
        raise UnsupportedElementError(f"unsupported order/dimension r={r}, dim={dim}")


def _projection_values(r, dim, points):
    D = projection_basis(r, dim)
    return np.einsum("jdm,...m->...jd", D.coefficients, D.evaluate_scalar(points))


def reference_blocks(kind, r, dim):
    """Bubble Gram ``M_B``, projection Gram ``M_D`` and coupling ``C[i, j] = (b_i, q_j)``."""
    _check_element(kind, r, dim)
    Bb = bubble_basis(kind, r, dim)
    rule = simplex_rule(dim, min(2 * Bb.degree, MAX_DEGREE))
    vb = Bb.evaluate(rule.cartesian)[0]  # (nq, nb, dim)
    q = _projection_values(r, dim, rule.cartesian)
    w = rule.weights
    MB = np.einsum("q,qid,qjd->ij", w, vb, vb)
    MD = np.einsum("q,qid,qjd->ij", w, q, q)
    C = np.einsum("q,qid,qjd->ij", w, vb, q)
    return MB, MD, C


def _infsup_from_blocks(MB, MD, C):
    cond = max(np.linalg.cond(MB), np.linalg.cond(MD))
    if not np.isfinite(cond) or cond > GRAM_CONDITION_LIMIT:
        raise IllConditionedBasisError(f"Gram condition number {cond:.3e} too large")
    X = C.T @ np.linalg.solve(MB, C)
    lam = scipy.linalg.eigh(0.5 * (X + X.T), MD, eigvals_only=True)
    return math.sqrt(max(float(lam[0]), 0.0)), float(cond)


def estimate_infsup(kind, r, dim=2):
    """Discrete inf-sup constant between bubbles and ``[P_{r-1}]^dim`` on the reference simplex."""
    constant, cond = _infsup_from_blocks(*reference_blocks(kind, r, dim))
    return InfSupResult(kind, r, dim, constant, cond)


def _dual_piola(kind, B, signed_det):
    """Map for the projection space that pairs with the bubbles' Piola map."""
    if kind == "curl":
        return B / signed_det[:, None, None]
    return np.transpose(np.linalg.inv(B), (0, 2, 1))


def _bubble_piola(kind, B, signed_det):
    if kind == "curl":
        return np.transpose(np.linalg.inv(B), (0, 2, 1))
    return B / signed_det[:, None, None]


def physical_pairing(kind, r, vertices):
    """Coupling matrix ``(b_i, q_j)_K`` on a physical simplex with Piola-mapped functions.

    ``vertices`` is ``(dim + 1, dim)``; the cell must be positively oriented.
    """
    vertices = np.asarray(vertices, dtype=float)
    dim = vertices.shape[1]
    _check_element(kind, r, dim)
    B = (vertices[1:] - vertices[0]).T[None]
    det = np.linalg.det(B)
    if det[0] <= 0:
        raise InvalidArgumentError("cell must be positively oriented")
    Bb = bubble_basis(kind, r, dim)
    rule = simplex_rule(dim, min(2 * Bb.degree, MAX_DEGREE))
    vb = np.einsum("ij,qbj->qbi", _bubble_piola(kind, B, det)[0], Bb.evaluate(rule.cartesian)[0])
    q = np.einsum("ij,qbj->qbi", _dual_piola(kind, B, det)[0],
                  _projection_values(r, dim, rule.cartesian))
    return np.einsum("q,qid,qjd->ij", rule.weights * det[0], vb, q)


def proof_test_coefficients(kind, r, dim, q_coefficients):
    """Bubble coefficients of ``sum_i (d_i . q) b_i`` for ``q`` given as ``(dim, n_monomials)``.

    ``d_i`` are the bubble directions (face normals for curl, edge tangents
    for div); the field pairs positively with ``q``.
    """
    dirs, _ = bubble_directions(kind, dim)
    q = np.asarray(q_coefficients, dtype=float)
    return (dirs @ q).ravel()


def proof_pairing_constant(kind, r, dim):
    """Largest ``c`` with ``(v(q), q) >= c ||q||^2`` for the directional test field ``v(q)``."""
    MB, MD, C = reference_blocks(kind, r, dim)
    nm = MD.shape[0] // dim
    T = np.zeros_like(MD)
    for j in range(MD.shape[0]):
        e = np.zeros(MD.shape[0])
        e[j] = 1.0
        T[:, j] = C.T @ proof_test_coefficients(kind, r, dim, e.reshape(dim, nm))
    lam = scipy.linalg.eigh(0.5 * (T + T.T), MD, eigvals_only=True)
    return float(lam[0])


# -- modified interpolant -----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ModifiedInterpolant:
    """``j_h v = i_h v + m_h(v)`` on a batch of cells.

    ``orthogonality_residual`` is ``max |(v - j_h v, q)_K| / (||v||_K ||q||_K)``
    over cells and projection basis functions ``q``.
    """

    cells: np.ndarray
    interpolant_coefficients: np.ndarray
    bubble_coefficients: np.ndarray
    orthogonality_residual: float
    correction_norms: np.ndarray
    interpolation_error_norms: np.ndarray
    infsup_constants: np.ndarray
    l2_errors: np.ndarray
    h1_errors: Optional[np.ndarray] = None

    def stability_ratio(self):
        """``max ||m_h v|| c_K / ||v - i_h v||``; at most 1 by the local inf-sup bound."""
        den = self.interpolation_error_norms / self.infsup_constants
        ok = den > 0
        if not np.any(ok):
            return 0.0
        return float((self.correction_norms[ok] / den[ok]).max())


def build_modified_interpolant(v, cells, space, jacobian=None, rcond=1e-12):
    """Bubble-corrected interpolant of the field ``v`` on ``cells`` of ``space``.

    The correction is the minimum L2-norm bubble field ``m`` with
    ``(m, q)_K = (v - i_h v, q)_K`` for all ``q`` in ``[P_{r-1}]^dim``, found by a
    pseudo-inverse with relative singular value cutoff ``rcond``.
    """
    m = space.mesh
    cells = np.atleast_1d(np.asarray(cells, dtype=np.int64))
    kind, r, dim = space.kind, space.r, space.dim
    Bb = bubble_basis(kind, r, dim)
    nw = space.element.n_conforming
    rule = simplex_rule(dim, min(MAX_DEGREE, 2 * max(space.element.degree, Bb.degree) + 2))
    xh = rule.cartesian
    x = m.to_physical(cells, xh)
    vv = np.asarray(v(x), dtype=float)
    loc = space.local_interpolant(v, cells)
    Vw, Jw = space.tabulate(cells, xh, derivatives=True)
    ih = np.einsum("cb,cqbi->cqi", loc, Vw[:, :, :nw])
    vbh, jbh = Bb.evaluate(xh)
    Vb, Jb = space.push_forward(cells, vbh, jbh)
    Q = np.einsum("cij,qbj->cqbi", _dual_piola(kind, m.B[cells], m.signed_det[cells]),
                  _projection_values(r, dim, xh))
    w = rule.weights[None, :] * m.det[cells][:, None]
    MB = np.einsum("cq,cqid,cqjd->cij", w, Vb, Vb)
    MD = np.einsum("cq,cqid,cqjd->cij", w, Q, Q)
    C = np.einsum("cq,cqid,cqjd->cij", w, Vb, Q)
    rhs = np.einsum("cq,cqjd,cqd->cj", w, Q, vv - ih)

    LB = np.linalg.cholesky(MB)
    LD = np.linalg.cholesky(MD)
    K = np.linalg.solve(LB, C)  # coefficients y = LB^T a are L2-orthonormal
    S = np.linalg.solve(LD, np.transpose(K, (0, 2, 1)))  # normalized coupling
    sv = np.linalg.svd(S, compute_uv=False)
    if np.any(sv[:, -1] <= rcond * sv[:, 0]):
        raise IllConditionedBasisError("bubble coupling does not span the projection space")
    y = np.einsum("cij,cj->ci", np.linalg.pinv(np.transpose(K, (0, 2, 1)), rcond=rcond), rhs)
    a = np.linalg.solve(np.transpose(LB, (0, 2, 1)), y[..., None])[..., 0]

    err = vv - ih - np.einsum("cb,cqbi->cqi", a, Vb)
    resid = np.abs(np.einsum("cq,cqjd,cqd->cj", w, Q, err))
    vnorm = np.sqrt(np.einsum("cq,cqd,cqd->c", w, vv, vv))
    qnorm = np.sqrt(np.einsum("cjj->cj", MD))
    scale = np.where(vnorm > 0, vnorm, 1.0)[:, None] * qnorm
    h1 = None
    if jacobian is not None:
        derr = (np.asarray(jacobian(x), dtype=float) - np.einsum("cb,cqbik->cqik", loc, Jw[:, :, :nw])
                - np.einsum("cb,cqbik->cqik", a, Jb))
        h1 = np.sqrt(np.einsum("cq,cqik,cqik->c", w, derr, derr))
    return ModifiedInterpolant(
        cells, loc, a, float((resid / scale).max()),
        np.sqrt(np.einsum("ci,ci->c", y, y)),
        np.sqrt(np.einsum("cq,cqd,cqd->c", w, vv - ih, vv - ih)),
        sv[:, -1], np.sqrt(np.einsum("cq,cqd,cqd->c", w, err, err)), h1)


def modified_interpolation_errors(v, jacobian, space, chunk=512):
    """Global ``(||v - j_h v||_0, |v - j_h v|_1)`` over all cells of ``space``."""
    l2 = h1 = 0.0
    n = space.mesh.n_cells
    for start in range(0, n, chunk):
        res = build_modified_interpolant(v, np.arange(start, min(n, start + chunk)), space,
                                         jacobian)
        l2 += float(np.sum(res.l2_errors ** 2))
        h1 += float(np.sum(res.h1_errors ** 2))
    return math.sqrt(l2), math.sqrt(h1)


def random_simplex_mesh(dim, n_cells, rng, min_quality=0.2):
    """Disjoint random simplices of moderate shape quality (inradius / circumradius scale)."""
    cells = []
    while len(cells) < n_cells:
        v = rng.uniform(-1.0, 1.0, size=(dim + 1, dim)) * rng.uniform(0.05, 2.0)
        B = v[1:] - v[0]
        vol = abs(np.linalg.det(B))
        edge = max(np.linalg.norm(v[i] - v[j]) for i in range(dim + 1) for j in range(i))
        if vol / edge ** dim > min_quality / math.factorial(dim):
            cells.append(v + rng.uniform(-5, 5, size=dim))
    verts = np.concatenate(cells)
    conn = np.arange(len(verts)).reshape(n_cells, dim + 1)
    return SimplicialMesh(verts, conn)


# -- coefficient conditions ---------------------------------------------------------

def check_wellposedness(problem, mesh, quad_degree=6):
    """Minimum over quadrature points of the smallest eigenvalue of
    ``gamma I + (L + L*)/2``; warns when it is not positive."""
    rule = simplex_rule(mesh.dim, quad_degree)
    x = mesh.to_physical(np.arange(mesh.n_cells), rule.cartesian)
    lam = coercivity_eigenvalues(problem.form_kind, problem.gamma_values(x),
                                 problem.beta_jacobian(x))
    rho = float(lam.min())
    if rho <= 0.0:
        warnings.warn(f"{problem.name}: coercivity eigenvalue {rho:.3e} is not positive; "
                      "stability and error bounds are not guaranteed",
                      WellposednessWarning, stacklevel=2)
    return rho


# -- identities ---------------------------------------------------------------------

def random_polynomial_field(dim, degree, rng):
    """A random vector polynomial ``(f, Df)`` pair, vectorized over points."""
    exps = monomial_exponents(dim, degree)
    coef = rng.standard_normal((dim, len(exps)))

    def f(x):
        return np.einsum("dm,...m->...d", coef, eval_monomials(exps, x)[0])

    def df(x):
        return np.einsum("dm,...mk->...dk", coef, eval_monomials(exps, x)[1])

    return f, df


def _simplex_facets(vertices):
    """``(facet vertices, outward unit normal, measure)`` of each facet of a simplex."""
    dim = vertices.shape[1]
    out = []
    for l in range(dim + 1):
        fv = np.delete(vertices, l, axis=0)
        T = (fv[1:] - fv[0]).T
        if dim == 2:
            n = np.array([T[1, 0], -T[0, 0]])
        else:
            n = np.cross(T[:, 0], T[:, 1])
        meas = np.linalg.norm(n) / math.factorial(dim - 1)
        n = n / np.linalg.norm(n)
        if np.dot(n, vertices[l] - fv[0]) > 0:
            n = -n
        out.append((fv, n, meas))
    return out


def integration_by_parts_defect(kind, vertices, beta, dbeta, u, du, v, dv, degree=12):
    """Relative defect of ``(L u, v)_K - (u, L* v)_K = int_dK (beta.n) u.v``."""
    vertices = np.asarray(vertices, dtype=float)
    dim = vertices.shape[1]
    rule = simplex_rule(dim, degree)
    B = (vertices[1:] - vertices[0]).T
    x = rule.cartesian @ B.T + vertices[0]
    w = rule.weights * abs(np.linalg.det(B))
    b, db = beta(x), dbeta(x)
    vol = (np.einsum("q,qd,qd->", w, advection(kind, u(x), du(x), b, db), v(x))
           - np.einsum("q,qd,qd->", w, u(x), adjoint_advection(kind, v(x), dv(x), b, db)))
    frule = simplex_rule(dim - 1, degree)
    bnd = 0.0
    for fv, n, meas in _simplex_facets(vertices):
        xf = frule.points @ fv
        wf = frule.weights * meas / REFERENCE_MEASURE[dim - 1]
        bnd += float(np.einsum("q,q,qd,qd->", wf, beta(xf) @ n, u(xf), v(xf)))
    scale = max(abs(vol), abs(bnd), np.einsum("q,qd,qd->", w, u(x), u(x)), 1e-300)
    return abs(vol - bnd) / scale


def operator_identity_defect(kind, points, beta, dbeta, u, du):
    """Pointwise relative defect of ``L u + L* u = +-(D beta + D beta^T - div beta I) u``."""
    b, db, uu, duu = beta(points), dbeta(points), u(points), du(points)
    lhs = advection(kind, uu, duu, b, db) + adjoint_advection(kind, uu, duu, b, db)
    rhs = np.einsum("...ij,...j->...i", symmetric_part(kind, db), uu)
    scale = max(np.abs(lhs).max(), np.abs(rhs).max(), 1e-300)
    return float(np.abs(lhs - rhs).max() / scale)


# -- discrete coercivity ------------------------------------------------------------

@dataclass(frozen=True)
class CoercivityResult:
    rho0: float
    constant: float
    min_ratio: float
    max_identity_defect: float
    samples: int

    @property
    def margin(self):
        """``min (a+S)(u,u)/||u||_h^2 - constant``; nonnegative when the bound holds."""
        return self.min_ratio - self.constant


def coercivity_check(problem, n=4, config=None, samples=200, seed=0):
    """Compare ``(a + S)(u, u)`` with ``||u||_h^2`` for random discrete ``u``.

    Besides the lower bound ``min(rho0 / 2, 1) ||u||_h^2`` the exact energy
    balance ``(a+S)(u,u) = int u.M u + ||u||_h^2 - ||u||_0^2`` is measured,
    where ``M = gamma I + (L + L*)/2``; it holds when ``c_f = sgn(beta.n)``
    pointwise and the quadrature is exact.
    """
    from .analysis import error_breakdown

    config = config or LpsConfig()
    if config.enable_s1 and config.cf_strategy != "pointwise":
        raise InvalidArgumentError("the energy balance needs pointwise c_f")
    mesh = build_structured_mesh(problem.dim, n)
    space = FiniteElementSpace(mesh, problem.form_kind, config.r, config.enriched)
    A = assemble(problem, mesh, space, config).matrix
    rule = simplex_rule(mesh.dim, min(MAX_DEGREE, 2 * space.element.degree + 2))
    cells = np.arange(mesh.n_cells)
    x = mesh.to_physical(cells, rule.cartesian)
    M = (problem.gamma_values(x)[..., None, None] * np.eye(mesh.dim)
         + 0.5 * symmetric_part(problem.form_kind, problem.beta_jacobian(x)))
    rho0 = check_wellposedness(problem, mesh, rule.exactness_degree)
    constant = min(0.5 * rho0, 1.0)
    w = rule.weights[None, :] * mesh.det[:, None]
    V = space.tabulate(cells, rule.cartesian, derivatives=False)
    rng = np.random.default_rng(seed)
    ratios, defects = [], []
    for _ in range(samples):
        u = rng.standard_normal(space.ndofs)
        form = float(u @ (A @ u))
        br = error_breakdown(u, problem, mesh, space, config, exact=False)
        norm2 = (br.energy if config.enable_s2 else br.s1_norm) ** 2
        if not config.enable_s1:
            norm2 -= br.jump ** 2
        uq = np.einsum("cb,cqbi->cqi", space.local_coefficients(u), V)
        balance = float(np.einsum("cq,cqi,cqij,cqj->", w, uq, M, uq)) + norm2 - br.l2 ** 2
        ratios.append(form / norm2)
        defects.append(abs(form - balance) / norm2)
    return CoercivityResult(rho0, constant, float(min(ratios)), float(max(defects)), samples)


# -- the check table ----------------------------------------------------------------

@dataclass(frozen=True)
class CheckResult:
    name: str
    value: float
    threshold: float
    passed: bool
    relation: str


def _check(name, value, threshold, relation):
    ok = value > threshold if relation == ">" else value < threshold
    return CheckResult(name, float(value), float(threshold), bool(ok), relation)


def _smooth_field(x):
    s = np.sin(x[..., 0]) * np.cos(x[..., 1])
    e = np.exp(x[..., 0]) * x[..., 1] ** 2
    comps = [s, e] + ([np.cos(x[..., 2]) * x[..., 0]] if x.shape[-1] == 3 else [])
    return np.stack(comps, axis=-1)


def run_structural_checks(seed=0, cells=100, vectors=200):
    """Evaluate every structural check and return :class:`CheckResult` rows."""
    from .problems import rotating_smooth, smooth_3d

    rng = np.random.default_rng(seed)
    rows = []
    for dim in (2, 3):
        for kind in KINDS:
            for r in SUPPORTED_ORDERS:
                res = estimate_infsup(kind, r, dim)
                rows.append(_check(f"inf-sup {kind} r={r} {dim}D", res.constant, 1e-3, ">"))

    defect = 0.0
    for dim in (2, 3):
        for kind in KINDS:
            ref = reference_blocks(kind, 2, dim)[2]
            for _ in range(10):
                v = rng.standard_normal((dim + 1, dim))
                if np.linalg.det((v[1:] - v[0]).T) < 0:
                    v[[1, 2]] = v[[2, 1]]
                C = physical_pairing(kind, 2, v)
                defect = max(defect, np.abs(C - ref).max() / np.abs(ref).max())
    rows.append(_check("Piola pairing invariance", defect, 1e-12, "<"))

    worst = np.inf
    for dim in (2, 3):
        for kind in KINDS:
            for r in SUPPORTED_ORDERS:
                MB, MD, C = reference_blocks(kind, r, dim)
                c = proof_pairing_constant(kind, r, dim)
                nm = MD.shape[0] // dim
                for _ in range(100):
                    q = rng.standard_normal(MD.shape[0])
                    a = proof_test_coefficients(kind, r, dim, q.reshape(dim, nm))
                    worst = min(worst, (a @ C @ q) / (c * (q @ MD @ q)))
    rows.append(_check("directional test field pairing / (C |q|^2)", worst, 1.0 - 1e-10, ">"))

    ortho, stab = 0.0, 0.0
    for dim, orders in ((2, SUPPORTED_ORDERS), (3, (1, 2))):
        mesh = random_simplex_mesh(dim, cells, rng)
        for kind in KINDS:
            for r in orders:
                space = FiniteElementSpace(mesh, kind, r)
                res = build_modified_interpolant(_smooth_field, np.arange(mesh.n_cells), space)
                ortho = max(ortho, res.orthogonality_residual)
                stab = max(stab, res.stability_ratio())
    rows.append(_check(f"modified interpolant orthogonality ({cells} random cells)",
                       ortho, 1e-11, "<"))
    rows.append(_check("modified interpolant stability ||m|| c / ||v - i v||",
                       stab, 1.0 + 1e-9, "<"))

    for kind in KINDS:
        res = coercivity_check(rotating_smooth(kind), 4, samples=vectors, seed=seed)
        rows.append(_check(f"coercivity margin {kind} ({vectors} vectors)", res.margin,
                           -1e-10, ">"))
        rows.append(_check(f"energy balance defect {kind}", res.max_identity_defect,
                           1e-10, "<"))

    ibp = ident = 0.0
    for dim in (2, 3):
        for kind in KINDS:
            for _ in range(5):
                beta, dbeta = random_polynomial_field(dim, 2, rng)
                u, du = random_polynomial_field(dim, 3, rng)
                v, dv = random_polynomial_field(dim, 2, rng)
                verts = rng.standard_normal((dim + 1, dim))
                ibp = max(ibp, integration_by_parts_defect(kind, verts, beta, dbeta, u, du,
                                                           v, dv))
                pts = rng.uniform(-1, 1, size=(50, dim))
                ident = max(ident, operator_identity_defect(kind, pts, beta, dbeta, u, du))
    rows.append(_check("integration by parts defect", ibp, 1e-10, "<"))
    rows.append(_check("L + L* identity defect", ident, 1e-10, "<"))

    mesh3 = build_structured_mesh(3, 4)
    rows.append(_check("well-posedness 3D smooth data (gamma=8)",
                       check_wellposedness(smooth_3d("curl"), mesh3), 0.0, ">"))
    return rows


def format_check_table(rows):
    width = max(len(r.name) for r in rows)
    lines = [f"{'check'.ljust(width)}  {'value':>12}  {'required':>14}  result"]
    for r in rows:
        lines.append(f"{r.name.ljust(width)}  {r.value:12.4e}  {r.relation + ' ' + format(r.threshold, '.3e'):>14}"
                     f"  {'PASS' if r.passed else 'FAIL'}")
    return "\n".join(lines)
