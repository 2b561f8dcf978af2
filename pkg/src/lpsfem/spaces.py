"""Global H(curl)/H(div) spaces: DOF maps, Piola maps and tabulation on cells."""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import kernels
from .elements import local_element
from .errors import ConfigurationError, DegenerateCellError


def piola_contravariant(cell_map, ref_value):
    """``|det B|^-1 B v``: preserves normal traces (div-type fields)."""
    _require_regular(cell_map)
    return np.asarray(ref_value) @ cell_map.matrix.T / cell_map.det


def piola_covariant(cell_map, ref_value):
    """``B^-T v``: preserves tangential traces (curl-type fields)."""
    _require_regular(cell_map)
    return np.asarray(ref_value) @ cell_map.inverse_transpose.T


def _require_regular(cell_map):
    if not np.isfinite(cell_map.det) or cell_map.det <= 0.0:
        raise DegenerateCellError("Piola transform of a singular cell map")


@dataclass(frozen=True, eq=False)
class DofMap:
    """Cell-to-global DOF table.

    ``signs[c, i]`` multiplies the |det|-Piola image of reference function i on
    cell c; it is the cell orientation for div-type spaces and +1 otherwise.
    Bubble DOFs are numbered from ``enrichment_offset`` on.
    """

    cell_dofs: np.ndarray  # (nc, nb)
    signs: np.ndarray  # (nc, nb)
    total_dofs: int
    enrichment_offset: int


def build_dofmap(mesh, kind, r, enriched=True):
    element = local_element(kind, r, mesh.dim, enriched)
    sig = element.conforming.trace_signature
    per = {}
    for etype, _, k in sig:
        per[etype] = max(per.get(etype, 0), k + 1)
    n_edges = len(mesh.edges)
    n_faces = mesh.n_facets if mesh.dim == 3 else 0
    nc = mesh.n_cells
    offsets = {}
    count = 0
    for etype, nent in (("edge", n_edges), ("face", n_faces), ("cell", nc)):
        offsets[etype] = count
        count += per.get(etype, 0) * nent
    enrichment_offset = count
    nb = len(element)
    cell_dofs = np.empty((nc, nb), dtype=np.int64)
    entity_table = {"edge": mesh.cell_edges, "face": mesh.cell_facets,
                    "cell": np.arange(nc)[:, None]}
    for i, (etype, local, k) in enumerate(sig):
        ids = entity_table[etype][:, local]
        cell_dofs[:, i] = offsets[etype] + per[etype] * ids + k
    nbub = element.n_bubbles
    if nbub:
        cell_dofs[:, element.n_conforming:] = (
            enrichment_offset + nbub * np.arange(nc)[:, None] + np.arange(nbub))
    total = enrichment_offset + nbub * nc
    if kind == "div":
        signs = np.repeat(mesh.orientation[:, None], nb, axis=1)
    else:
        signs = np.ones((nc, nb), dtype=np.int64)
    for a in (cell_dofs, signs):
        a.flags.writeable = False
    return DofMap(cell_dofs, signs, total, enrichment_offset)


class FiniteElementSpace:
    """``V_h = W_h + B_h`` (or ``W_h`` alone) on a simplicial mesh."""

    def __init__(self, mesh, kind, r, enriched=True):
        if kind not in ("curl", "div"):
            raise ConfigurationError(f"unknown space kind {kind!r}")
        self.mesh = mesh
        self.kind = kind
        self.r = r
        self.enriched = enriched
        self.element = local_element(kind, r, mesh.dim, enriched)
        self.dofmap = build_dofmap(mesh, kind, r, enriched)

    @property
    def dim(self):
        return self.mesh.dim

    @property
    def ndofs(self):
        return self.dofmap.total_dofs

    @property
    def n_local(self):
        return len(self.element)

    def __repr__(self):
        return (f"FiniteElementSpace({self.kind}, r={self.r}, enriched={self.enriched}, "
                f"ndofs={self.ndofs})")

    # -- tabulation ---------------------------------------------------------------

    def tabulate_reference(self, xhat):
        """Reference values ``(..., nb, dim)`` and Jacobians ``(..., nb, dim, dim)``."""
        return self.element.evaluate(xhat)

    def push_forward(self, cells, vhat, jhat=None):
        """Map reference tabulations to the physical cells.

        ``vhat`` is ``(nq, nb, dim)`` (shared) or ``(nc, nq, nb, dim)``.
        """
        m = self.mesh
        vs = "qbj" if vhat.ndim == 3 else "cqbj"
        if self.kind == "curl":
            A = m.BinvT[cells]
        else:
            A = m.B[cells] / m.signed_det[cells][:, None, None]
        if jhat is None:
            return np.einsum(f"cij,{vs}->cqbi", A, vhat)
        return kernels.piola(A, vhat, jhat, m.Binv[cells])

    def tabulate(self, cells, xhat, derivatives=True):
        vhat, jhat = self.tabulate_reference(xhat)
        return self.push_forward(cells, vhat, jhat if derivatives else None)

    @cached_property
    def facet_reference_points(self):
        """Per local facet, a function mapping facet barycentrics to cell reference points."""
        dim = self.dim
        verts = np.vstack([np.zeros(dim), np.eye(dim)])
        return [verts[[v for v in range(dim + 1) if v != l]] for l in range(dim + 1)]

    def facet_tabulation(self, rule):
        """Reference tabulation on each local facet: lists of ``(nq, nb, dim)`` arrays."""
        vals, jacs = [], []
        for fv in self.facet_reference_points:
            xh = rule.points @ fv
            v, j = self.tabulate_reference(xh)
            vals.append(v)
            jacs.append(j)
        return np.array(vals), np.array(jacs)

    # -- functions ------------------------------------------------------------------

    def pull_back(self, cells, values):
        """Inverse signed Piola map of physical values ``(nc, np, dim)``."""
        m = self.mesh
        if self.kind == "curl":
            A = np.transpose(m.B[cells], (0, 2, 1))
        else:
            A = m.Binv[cells] * m.signed_det[cells][:, None, None]
        return np.einsum("cij,cpj->cpi", A, values)

    @cached_property
    def _functional_stack(self):
        funcs = self.element.conforming.functionals
        pts = np.concatenate([f.points for f in funcs], axis=0)
        W = np.zeros((len(funcs), len(pts), self.dim))
        start = 0
        for i, f in enumerate(funcs):
            W[i, start:start + len(f.points)] = f.weights
            start += len(f.points)
        return pts, W

    def local_interpolant(self, v, cells=None):
        """Canonical interpolation coefficients ``(nc, n_conforming)`` of a field ``v(x)``."""
        m = self.mesh
        cells = np.arange(m.n_cells) if cells is None else np.atleast_1d(cells)
        pts, W = self._functional_stack
        x = m.to_physical(cells, pts)
        vals = np.asarray(v(x.reshape(-1, self.dim))).reshape(x.shape)
        vhat = self.pull_back(cells, vals)
        return np.einsum("ipd,cpd->ci", W, vhat)

    def interpolate(self, v):
        """Global coefficients of ``i_h v`` (bubble coefficients are zero)."""
        coef = np.zeros(self.ndofs)
        loc = self.local_interpolant(v)
        nw = self.element.n_conforming
        coef[self.dofmap.cell_dofs[:, :nw]] = loc
        return coef

    def local_coefficients(self, coef, cells=None):
        cd = self.dofmap.cell_dofs if cells is None else self.dofmap.cell_dofs[cells]
        return np.asarray(coef)[cd]

    def evaluate_function(self, coef, cells, xhat, derivatives=False):
        """Values (and Jacobians) of a discrete function at reference points of cells."""
        out = self.tabulate(cells, xhat, derivatives)
        c = self.local_coefficients(coef, cells)
        if derivatives:
            v, J = out
            return np.einsum("cb,cqbi->cqi", c, v), np.einsum("cb,cqbik->cqik", c, J)
        return np.einsum("cb,cqbi->cqi", c, out)

    def evaluate_at_points(self, coef, points):
        """Point values; points outside the mesh give NaN."""
        points = np.atleast_2d(points)
        cells = self.mesh.locate(points)
        out = np.full(points.shape, np.nan)
        ok = cells >= 0
        if np.any(ok):
            c = cells[ok]
            xh = np.einsum("cij,cj->ci", self.mesh.Binv[c], points[ok] - self.mesh.offsets[c])
            vhat, _ = self.tabulate_reference(xh)  # (np, nb, dim)
            v = self.push_forward(c, vhat[:, None])[:, 0]
            out[ok] = np.einsum("cb,cbi->ci", self.local_coefficients(coef, c), v)
        return out
