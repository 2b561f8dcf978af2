"""Reference elements: second-kind Nedelec, BDM, H(d) bubbles and projection spaces.

The conforming part is a dual basis of ``[P_r]^dim`` with respect to moment
functionals attached to the local entities (local vertices are sorted, so the
reference orientation of an entity is its global orientation):

* edges: moments of ``u . t`` (curl) against Legendre polynomials of degree <= r,
* 2D div edges: moments of ``u . R^T t`` (the BDM normal moment),
* 3D div faces: moments of ``u . (t1 x t2)`` against monomials of degree <= r,
* 3D curl faces: moments of the covariant trace ``(u . t1, u . t2)`` against the
  traces that the edge moments do not see,
* interior: moments against the subspace annihilated by all boundary moments.

In 2D the curl element is the rotation ``R`` of the BDM element.
"""

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from math import comb

import numpy as np
import scipy.linalg

from .errors import IllConditionedBasisError, InvalidArgumentError, UnsupportedElementError
from .polynomials import (Poly, eval_monomials, evaluate_vector_polys, monomial_exponents,
                          n_monomials, vector_poly)
from .quadrature import simplex_rule

ROTATION = np.array([[0.0, 1.0], [-1.0, 0.0]])
KINDS = ("curl", "div")
SUPPORTED_ORDERS = (1, 2, 3)


def reference_vertices(dim):
    return np.vstack([np.zeros(dim), np.eye(dim)])


def local_edges(dim):
    """Local edges in the order used by :attr:`SimplicialMesh.cell_edges`."""
    if dim == 2:
        return [tuple(v for v in range(3) if v != l) for l in range(3)]
    return list(combinations(range(4), 2))


def local_faces():
    """Local faces of a tetrahedron, indexed by the opposite vertex."""
    return [tuple(v for v in range(4) if v != l) for l in range(4)]


@dataclass(frozen=True, eq=False)
class Functional:
    """``l(u) = sum_p weights[p] . u(points[p])`` on the reference cell."""

    points: np.ndarray
    weights: np.ndarray

    def apply(self, coefs, degree):
        """Apply to vector polynomials ``(nb, dim, n)``; returns ``(nb,)``."""
        vals, _ = eval_monomials(monomial_exponents(self.points.shape[1], degree), self.points)
        v = np.einsum("bcm,pm->bpc", coefs, vals)
        return np.einsum("bpc,pc->b", v, self.weights)


@dataclass(frozen=True, eq=False)
class ReferenceBasis:
    """Vector polynomial basis on the unit simplex.

    ``trace_signature[i]`` names the entity whose moment the i-th function
    carries: ``("edge", e, k)``, ``("face", f, k)``, ``("cell", 0, k)``.
    """

    kind: str
    order: int
    dim: int
    degree: int
    coefficients: np.ndarray  # (nb, dim, n_monomials(dim, degree))
    trace_signature: tuple
    functionals: tuple = ()

    def __len__(self):
        return self.coefficients.shape[0]

    def evaluate(self, points):
        vals, grads = eval_monomials(monomial_exponents(self.dim, self.degree), points)
        return evaluate_vector_polys(self.coefficients, vals, grads)


@dataclass(frozen=True, eq=False)
class BubbleBasis:
    kind: str
    order: int
    dim: int
    degree: int
    coefficients: np.ndarray
    directions: np.ndarray  # (n_directions, dim), unit

    def __len__(self):
        return self.coefficients.shape[0]

    def evaluate(self, points):
        vals, grads = eval_monomials(monomial_exponents(self.dim, self.degree), points)
        return evaluate_vector_polys(self.coefficients, vals, grads)


@dataclass(frozen=True, eq=False)
class ProjectionBasis:
    """Vector monomial basis of ``[P_{order}]^dim``."""

    order: int
    dim: int

    @property
    def scalar_size(self):
        return n_monomials(self.dim, self.order)

    def __len__(self):
        return self.dim * self.scalar_size

    @property
    def coefficients(self):
        nm = self.scalar_size
        c = np.zeros((len(self), self.dim, nm))
        for d in range(self.dim):
            for m in range(nm):
                c[d * nm + m, d, m] = 1.0
        return c

    def evaluate_scalar(self, points):
        return eval_monomials(monomial_exponents(self.dim, self.order), points)[0]


def _check(kind, r, dim):
    if kind not in KINDS or r not in SUPPORTED_ORDERS or dim not in (2, 3):
        raise UnsupportedElementError(f"unsupported element ({kind}, r={r}, dim={dim})")


def _prebasis(dim, degree):
    nm = n_monomials(dim, degree)
    c = np.zeros((dim * nm, dim, nm))
    for d in range(dim):
        c[d * nm:(d + 1) * nm, d, :] = np.eye(nm)
    return c


def _edge_functionals(r, dim, direction):
    """``direction(t) -> vector`` maps the edge vector to the moment direction."""
    rule = simplex_rule(1, 2 * r + 2)
    s = rule.points[:, 1]
    verts = reference_vertices(dim)
    out, sig = [], []
    for e, (a, b) in enumerate(local_edges(dim)):
        t = verts[b] - verts[a]
        pts = verts[a] + s[:, None] * t
        tau = direction(t)
        for k in range(r + 1):
            leg = np.polynomial.legendre.Legendre.basis(k)(2.0 * s - 1.0)
            out.append(Functional(pts, (rule.weights * leg)[:, None] * tau))
            sig.append(("edge", e, k))
    return out, sig


@lru_cache(maxsize=None)
def _face_trace_complement(r):
    """Covariant-trace test fields on the reference triangle orthogonal to edge moments.

    Returns coefficients ``(m, 2, n)`` over monomials of degree r in (xi, eta).
    """
    if r < 2:
        return np.zeros((0, 2, n_monomials(2, r)))
    pre = _prebasis(2, r)
    rule = simplex_rule(1, 2 * r + 2)
    s = rule.points[:, 1]
    # (start point, edge vector in (xi, eta), trace direction in (u.t1, u.t2))
    edges = [((0.0, 0.0), (1.0, 0.0), (1.0, 0.0)),
             ((0.0, 0.0), (0.0, 1.0), (0.0, 1.0)),
             ((1.0, 0.0), (-1.0, 1.0), (-1.0, 1.0))]
    rows = []
    for start, vec, tau in edges:
        pts = np.asarray(start) + s[:, None] * np.asarray(vec)
        for k in range(r + 1):
            leg = np.polynomial.legendre.Legendre.basis(k)(2.0 * s - 1.0)
            f = Functional(pts, (rule.weights * leg)[:, None] * np.asarray(tau))
            rows.append(f.apply(pre, r))
    return _null_space_polys(np.array(rows), pre)


def _orthonormalize(vals, weights):
    """L2-orthonormalize test functions ``vals`` of shape (nq, m[, dim]) under a rule."""
    flat = vals.reshape(len(vals), vals.shape[1], -1)
    G = np.einsum("q,qmd,qnd->mn", weights, flat, flat)
    L = np.linalg.cholesky(G)
    return np.einsum("qn...,mn->qm...", vals, np.linalg.inv(L))


def _null_space_polys(rows, pre):
    _, sv, vt = np.linalg.svd(rows)
    rank = int(np.sum(sv > 1e-10 * sv[0]))
    null = vt[rank:]
    return np.einsum("jk,kcm->jcm", null, pre)


def _interior_functionals(r, dim, boundary):
    pre = _prebasis(dim, r)
    rows = np.array([f.apply(pre, r) for f in boundary]) if boundary else np.zeros((0, len(pre)))
    if len(rows) == len(pre):
        return [], []
    w = _null_space_polys(rows, pre) if len(rows) else pre
    rule = simplex_rule(dim, 2 * r)
    pts = rule.cartesian
    vals, grads = eval_monomials(monomial_exponents(dim, r), pts)
    wv, _ = evaluate_vector_polys(w, vals, grads)  # (nq, m, dim)
    wv = _orthonormalize(wv, rule.weights)
    out = [Functional(pts, rule.weights[:, None] * wv[:, j, :]) for j in range(len(w))]
    return out, [("cell", 0, j) for j in range(len(w))]


def _boundary_functionals(kind, r, dim):
    if dim == 2:
        # BDM normal moments; the curl element is obtained by rotation
        return _edge_functionals(r, 2, lambda t: ROTATION.T @ t)
    if kind == "curl":
        funcs, sig = _edge_functionals(r, 3, lambda t: t)
        comp = _face_trace_complement(r)
        if len(comp):
            rule = simplex_rule(2, 2 * r + 2)
            xi = rule.cartesian
            vals, grads = eval_monomials(monomial_exponents(2, r), xi)
            cv, _ = evaluate_vector_polys(comp, vals, grads)  # (nq, m, 2)
            cv = _orthonormalize(cv, rule.weights)
            verts = reference_vertices(3)
            for f, (a, b, c) in enumerate(local_faces()):
                t1, t2 = verts[b] - verts[a], verts[c] - verts[a]
                pts = verts[a] + xi[:, :1] * t1 + xi[:, 1:] * t2
                for j in range(len(comp)):
                    w = cv[:, j, :1] * t1 + cv[:, j, 1:] * t2
                    funcs.append(Functional(pts, rule.weights[:, None] * w))
                    sig.append(("face", f, j))
        return funcs, sig
    rule = simplex_rule(2, 2 * r + 2)
    xi = rule.cartesian
    mono = _orthonormalize(eval_monomials(monomial_exponents(2, r), xi)[0], rule.weights)
    verts = reference_vertices(3)
    funcs, sig = [], []
    for f, (a, b, c) in enumerate(local_faces()):
        t1, t2 = verts[b] - verts[a], verts[c] - verts[a]
        nu = np.cross(t1, t2)
        pts = verts[a] + xi[:, :1] * t1 + xi[:, 1:] * t2
        for k in range(mono.shape[1]):
            funcs.append(Functional(pts, (rule.weights * mono[:, k])[:, None] * nu))
            sig.append(("face", f, k))
    return funcs, sig


@lru_cache(maxsize=None)
def reference_basis(kind, r, dim):
    """Dual basis of ``[P_r]^dim`` for the conforming element of the given kind."""
    _check(kind, r, dim)
    if dim == 2 and kind == "curl":
        bdm = reference_basis("div", r, 2)
        coefs = np.einsum("ij,bjm->bim", ROTATION, bdm.coefficients)
        funcs = tuple(Functional(f.points, f.weights @ ROTATION.T) for f in bdm.functionals)
        return ReferenceBasis("curl", r, 2, r, _frozen(coefs), bdm.trace_signature, funcs)
    bfun, bsig = _boundary_functionals(kind, r, dim)
    ifun, isig = _interior_functionals(r, dim, bfun)
    funcs = bfun + ifun
    pre = _prebasis(dim, r)
    if len(funcs) != len(pre):
        raise UnsupportedElementError(
            f"moment count {len(funcs)} does not match dim [P_{r}]^{dim} = {len(pre)}")
    D = np.array([f.apply(pre, r) for f in funcs])  # D[i, j] = l_i(p_j)
    cond = np.linalg.cond(D)
    if cond > 1e8:
        raise IllConditionedBasisError(f"dual-basis matrix condition {cond:.3e}")
    coefs = np.einsum("ij,jcm->icm", np.linalg.inv(D).T, pre)
    return ReferenceBasis(kind, r, dim, r, _frozen(coefs), tuple(bsig + isig), tuple(funcs))


def bubble_directions(kind, dim):
    """Unit bubble directions on the reference simplex and their lambda factors."""
    if kind == "curl":
        # outward unit normals of the faces opposite vertices 1..dim
        dirs = -np.eye(dim)
        lams = [tuple(v for v in range(dim + 1) if v != i) for i in range(1, dim + 1)]
    else:
        # unit tangents of the edges (0, i)
        dirs = np.eye(dim)
        lams = [(0, i) for i in range(1, dim + 1)]
    return dirs, lams


@lru_cache(maxsize=None)
def bubble_basis(kind, r, dim):
    """Reference bubbles ``q * b_i`` with q over monomials of degree ``r - 1``."""
    if kind not in KINDS or dim not in (2, 3):
        raise UnsupportedElementError(f"no bubbles for ({kind}, dim={dim})")
    if r < 1:
        raise InvalidArgumentError("bubble order must be >= 1")
    dirs, lams = bubble_directions(kind, dim)
    deg = r - 1 + len(lams[0])
    exps_q = monomial_exponents(dim, r - 1)
    coefs = []
    for d, lam in zip(dirs, lams):
        prod = Poly.constant(1.0, dim)
        for i in lam:
            prod = prod * Poly.barycentric(i, dim)
        for e in exps_q:
            q = Poly({tuple(int(x) for x in e): 1.0}, dim)
            coefs.append(vector_poly(prod * q, d, deg))
    return BubbleBasis(kind, r, dim, deg, _frozen(np.array(coefs)), _frozen(dirs))


def projection_basis(r, dim):
    return ProjectionBasis(r - 1, dim)


@dataclass(frozen=True, eq=False)
class LocalElement:
    """Conforming dual basis plus the retained (linearly independent) bubbles."""

    kind: str
    order: int
    dim: int
    enriched: bool
    degree: int
    coefficients: np.ndarray  # (nb, dim, n)
    n_conforming: int
    retained_bubbles: tuple
    conforming: ReferenceBasis
    bubbles: BubbleBasis

    def __len__(self):
        return self.coefficients.shape[0]

    @property
    def n_bubbles(self):
        return len(self.retained_bubbles)

    def evaluate(self, points):
        vals, grads = eval_monomials(monomial_exponents(self.dim, self.degree), points)
        return evaluate_vector_polys(self.coefficients, vals, grads)


def _pad(coefs, dim, deg_from, deg_to):
    src = monomial_exponents(dim, deg_from)
    dst = {tuple(int(x) for x in e): i for i, e in enumerate(monomial_exponents(dim, deg_to))}
    out = np.zeros(coefs.shape[:-1] + (len(dst),))
    for i, e in enumerate(src):
        out[..., dst[tuple(int(x) for x in e)]] = coefs[..., i]
    return out


@lru_cache(maxsize=None)
def local_element(kind, r, dim, enriched=True, pivot_tol=1e-10):
    """Local basis of ``V_h|K = W_h|K + B_h|K`` with redundant bubbles removed.

    Bubble columns are selected by column-pivoted QR of the bubbles' components
    orthogonal to ``W_h|K``; retained columns have relative pivot above ``pivot_tol``.
    """
    W = reference_basis(kind, r, dim)
    Bb = bubble_basis(kind, r, dim)
    deg = max(W.degree, Bb.degree) if enriched else W.degree
    cw = _pad(W.coefficients, dim, W.degree, deg)
    if not enriched:
        return LocalElement(kind, r, dim, False, deg, _frozen(cw), len(W), (), W, Bb)
    cb = _pad(Bb.coefficients, dim, Bb.degree, deg)
    rule = simplex_rule(dim, min(2 * deg, 14))
    vals, grads = eval_monomials(monomial_exponents(dim, deg), rule.cartesian)
    sw = np.sqrt(rule.weights)[:, None, None]
    qb = (evaluate_vector_polys(cb, vals, grads)[0] * sw).transpose(0, 2, 1).reshape(-1, len(Bb))
    qw = (evaluate_vector_polys(cw, vals, grads)[0] * sw).transpose(0, 2, 1).reshape(-1, len(W))
    resid = qb - qw @ np.linalg.lstsq(qw, qb, rcond=None)[0]
    _, R, piv = scipy.linalg.qr(resid, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    scale = np.linalg.norm(qb, axis=0).max()
    keep = tuple(sorted(int(p) for p, d in zip(piv, diag) if d > pivot_tol * scale))
    coefs = np.concatenate([cw, cb[list(keep)]], axis=0)
    return LocalElement(kind, r, dim, True, deg, _frozen(coefs), len(W), keep, W, Bb)


def _frozen(a):
    a = np.ascontiguousarray(a, dtype=float)
    a.flags.writeable = False
    return a


def dim_vector_poly(dim, r):
    return dim * comb(r + dim, dim)
