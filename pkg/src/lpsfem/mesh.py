"""Structured simplicial meshes of the unit square and cube.

Cells store their vertices in ascending global order.  Because every local
edge and face then inherits the global orientation, shared degrees of freedom
glue without per-cell permutations; only the sign of the affine map's
determinant differs from cell to cell and is recorded in :attr:`orientation`.
"""

from dataclasses import dataclass, field
from itertools import combinations, permutations
from typing import Optional

import numpy as np

from .errors import DegenerateCellError, InvalidArgumentError
from .quadrature import simplex_rule


@dataclass(frozen=True, eq=False)
class AffineCellMap:
    """``F(xhat) = matrix @ xhat + offset`` from the unit reference simplex."""

    matrix: np.ndarray
    offset: np.ndarray
    det: float = field(init=False)
    inverse_transpose: np.ndarray = field(init=False)
    orientation: int = field(init=False)

    def __post_init__(self):
        B = np.asarray(self.matrix, dtype=float)
        signed = float(np.linalg.det(B))
        scale = max(np.abs(B).max(), 1e-300) ** B.shape[0]
        if not np.isfinite(signed) or abs(signed) <= 1e-14 * scale:
            raise DegenerateCellError("affine map is singular")
        object.__setattr__(self, "matrix", B)
        object.__setattr__(self, "offset", np.asarray(self.offset, dtype=float))
        object.__setattr__(self, "det", abs(signed))
        object.__setattr__(self, "orientation", 1 if signed > 0 else -1)
        object.__setattr__(self, "inverse_transpose", np.linalg.inv(B).T)

    @property
    def dim(self):
        return self.matrix.shape[0]

    def __call__(self, xhat):
        return np.asarray(xhat) @ self.matrix.T + self.offset

    def inverse(self, x):
        return (np.asarray(x) - self.offset) @ self.inverse_transpose


@dataclass(frozen=True)
class BoundaryClassification:
    inflow_facets: np.ndarray
    outflow_facets: np.ndarray


@dataclass(frozen=True)
class FacetGeometry:
    measure: float
    normal: np.ndarray
    cells: tuple
    local_indices: tuple


def _local_subsets(dim, k):
    """Local vertex subsets of size ``k``, sorted; facets indexed by opposite vertex."""
    if k == dim:
        return [tuple(v for v in range(dim + 1) if v != l) for l in range(dim + 1)]
    return list(combinations(range(dim + 1), k))


@dataclass(eq=False)
class SimplicialMesh:
    vertices: np.ndarray  # (nv, dim)
    cells: np.ndarray  # (nc, dim + 1), ascending
    n: Optional[int] = None  # subdivisions per axis for structured meshes

    def __post_init__(self):
        self.vertices = np.ascontiguousarray(self.vertices, dtype=float)
        self.cells = np.ascontiguousarray(self.cells, dtype=np.int64)
        if np.any(np.diff(self.cells, axis=1) <= 0):
            raise InvalidArgumentError("cell vertices must be strictly ascending")
        self._build_maps()
        self._build_topology()

    @property
    def dim(self):
        return self.vertices.shape[1]

    @property
    def n_cells(self):
        return len(self.cells)

    @property
    def n_facets(self):
        return len(self.facets)

    # -- geometry -----------------------------------------------------------------

    def _build_maps(self):
        x = self.vertices[self.cells]  # (nc, dim+1, dim)
        self.offsets = x[:, 0, :].copy()
        self.B = np.transpose(x[:, 1:, :] - x[:, :1, :], (0, 2, 1)).copy()
        signed = np.linalg.det(self.B)
        h3 = np.abs(self.B).max(axis=(1, 2)) ** self.dim
        if np.any(np.abs(signed) <= 1e-14 * h3):
            raise DegenerateCellError("mesh contains degenerate cells")
        self.signed_det = signed
        self.det = np.abs(signed)
        self.orientation = np.where(signed > 0, 1, -1).astype(np.int64)
        self.Binv = np.linalg.inv(self.B)
        self.BinvT = np.transpose(self.Binv, (0, 2, 1)).copy()
        edges = np.stack([x[:, j] - x[:, i] for i, j in combinations(range(self.dim + 1), 2)],
                         axis=1)
        self.h = np.linalg.norm(edges, axis=2).max(axis=1)
        self.volumes = self.det / np.prod(np.arange(1, self.dim + 1))

    def cell_map(self, c):
        return AffineCellMap(self.B[c], self.offsets[c])

    def to_physical(self, cells, xhat):
        """Map reference points to physical ones.

        ``xhat`` is ``(nq, dim)`` shared by all ``cells`` or ``(nc, nq, dim)``.
        """
        xhat = np.asarray(xhat, dtype=float)
        sub = "qj" if xhat.ndim == 2 else "cqj"
        return (np.einsum(f"cij,{sub}->cqi", self.B[cells], xhat)
                + self.offsets[cells][:, None, :])

    def barycenters(self):
        return self.vertices[self.cells].mean(axis=1)

    # -- topology -----------------------------------------------------------------

    def _build_topology(self):
        dim = self.dim
        nc = self.n_cells
        local = _local_subsets(dim, dim)
        allf = np.concatenate([self.cells[:, list(s)] for s in local], axis=0)
        facets, inverse = np.unique(allf, axis=0, return_inverse=True)
        inverse = inverse.reshape(len(local), nc).T  # (nc, dim+1)
        self.facets = facets
        self.cell_facets = inverse

        nf = len(facets)
        facet_cells = -np.ones((nf, 2), dtype=np.int64)
        facet_local = -np.ones((nf, 2), dtype=np.int64)
        cell_ids = np.repeat(np.arange(nc), dim + 1)
        loc_ids = np.tile(np.arange(dim + 1), nc)
        flat = inverse.ravel()
        # stable order: entries of the smaller cell come first
        order = np.lexsort((cell_ids, flat))
        fsorted = flat[order]
        first = np.ones(len(order), dtype=bool)
        first[1:] = fsorted[1:] != fsorted[:-1]
        slot = np.where(first, 0, 1)
        counts = np.bincount(flat, minlength=nf)
        if counts.max() > 2:
            raise InvalidArgumentError("non-manifold mesh: facet shared by more than two cells")
        facet_cells[fsorted, slot] = cell_ids[order]
        facet_local[fsorted, slot] = loc_ids[order]
        self.facet_cells = facet_cells
        self.facet_local = facet_local
        self.interior_facets = np.flatnonzero(facet_cells[:, 1] >= 0)
        self.boundary_facets = np.flatnonzero(facet_cells[:, 1] < 0)

        # unit normal, outward from facet_cells[:, 0]
        c0 = facet_cells[:, 0]
        l0 = facet_local[:, 0]
        grad_ref = np.vstack([-np.ones(dim), np.eye(dim)])  # gradients of lambda_i
        g = np.einsum("fij,fj->fi", self.BinvT[c0], grad_ref[l0])
        self.facet_normals = -g / np.linalg.norm(g, axis=1, keepdims=True)

        xv = self.vertices[facets]
        if dim == 2:
            self.facet_measures = np.linalg.norm(xv[:, 1] - xv[:, 0], axis=1)
        else:
            self.facet_measures = 0.5 * np.linalg.norm(
                np.cross(xv[:, 1] - xv[:, 0], xv[:, 2] - xv[:, 0]), axis=1)

        if dim == 3:
            local_e = _local_subsets(3, 2)
            alle = np.concatenate([self.cells[:, list(s)] for s in local_e], axis=0)
            edges, einv = np.unique(alle, axis=0, return_inverse=True)
            self.edges = edges
            self.cell_edges = einv.reshape(len(local_e), nc).T
        else:
            self.edges = facets
            self.cell_edges = inverse

    # -- queries ------------------------------------------------------------------

    def facet_geometry(self, facet_id):
        if not 0 <= facet_id < self.n_facets:
            raise IndexError(f"facet id {facet_id} out of range")
        cells = tuple(int(c) for c in self.facet_cells[facet_id] if c >= 0)
        locs = tuple(int(l) for l in self.facet_local[facet_id][: len(cells)])
        return FacetGeometry(float(self.facet_measures[facet_id]),
                             self.facet_normals[facet_id].copy(), cells, locs)

    def facet_points(self, facets, rule):
        """Physical quadrature points ``(nf, nq, dim)`` on facets (sorted-vertex barycentrics)."""
        xv = self.vertices[self.facets[facets]]  # (nf, dim, dim)
        return np.einsum("qk,fkd->fqd", rule.points, xv)

    def locate(self, points, tol=1e-12):
        """Index of a cell containing each point (first match), -1 if outside."""
        points = np.atleast_2d(points)
        out = -np.ones(len(points), dtype=np.int64)
        chunk = max(1, 2_000_000 // max(self.n_cells, 1))
        for s in range(0, len(points), chunk):
            p = points[s:s + chunk]
            xh = np.einsum("cij,pcj->pci", self.Binv, p[:, None, :] - self.offsets[None])
            lam_min = np.minimum(xh.min(axis=2), 1.0 - xh.sum(axis=2))
            inside = lam_min >= -tol
            hit = inside.any(axis=1)
            out[s:s + chunk] = np.where(hit, inside.argmax(axis=1), -1)
        return out

    def circumradius_inradius_ratio(self):
        x = self.vertices[self.cells]
        dim = self.dim
        # circumcentre: |c - x0|^2 = |c - xi|^2  =>  2 (xi - x0) . c = |xi|^2 - |x0|^2
        A = 2.0 * (x[:, 1:] - x[:, :1])
        rhs = (x[:, 1:] ** 2).sum(axis=2) - (x[:, :1] ** 2).sum(axis=2)
        cc = np.linalg.solve(A, rhs[..., None])[..., 0]
        R = np.linalg.norm(cc - x[:, 0], axis=1)
        area = self.facet_measures[self.cell_facets].sum(axis=1)
        rho = dim * self.volumes / area
        return R / rho

    def dump(self, path):
        """Plain-text dump with VERTICES / CELLS / FACETS sections."""
        with open(path, "w") as fh:
            fh.write(f"VERTICES {len(self.vertices)}\n")
            for v in self.vertices:
                fh.write(" ".join(repr(float(c)) for c in v) + "\n")
            fh.write(f"CELLS {self.n_cells}\n")
            for c in self.cells:
                fh.write(" ".join(str(int(i)) for i in c) + "\n")
            fh.write(f"FACETS {self.n_facets}\n")
            for f, fc in zip(self.facets, self.facet_cells):
                fh.write(" ".join(str(int(i)) for i in f) + " | "
                         + " ".join(str(int(c)) for c in fc if c >= 0) + "\n")


def build_structured_mesh(dim, n):
    """Unit square in ``2 n^2`` triangles or unit cube in ``6 n^3`` Kuhn tetrahedra."""
    if dim not in (2, 3):
        raise InvalidArgumentError(f"dim must be 2 or 3, got {dim}")
    if int(n) != n or n < 1:
        raise InvalidArgumentError(f"n must be a positive integer, got {n}")
    n = int(n)
    m = n + 1
    axes = np.linspace(0.0, 1.0, m)
    if dim == 2:
        X, Y = np.meshgrid(axes, axes, indexing="xy")
        verts = np.column_stack([X.ravel(), Y.ravel()])
        j, i = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
        v00 = (i + m * j).ravel()
        v10, v01, v11 = v00 + 1, v00 + m, v00 + m + 1
        cells = np.stack([np.column_stack([v00, v10, v11]),
                          np.column_stack([v00, v01, v11])], axis=1).reshape(-1, 3)
    else:
        Z, Y, X = np.meshgrid(axes, axes, axes, indexing="ij")
        verts = np.column_stack([X.ravel(), Y.ravel(), Z.ravel()])
        k, j, i = np.meshgrid(np.arange(n), np.arange(n), np.arange(n), indexing="ij")
        base = (i + m * j + m * m * k).ravel()
        stride = np.array([1, m, m * m])
        tets = []
        for perm in permutations(range(3)):
            path = [0]
            for p in perm:
                path.append(path[-1] + stride[p])
            tets.append(np.column_stack([base + s for s in path]))
        cells = np.stack(tets, axis=1).reshape(-1, 4)
    return SimplicialMesh(verts, cells, n=n)


def classify_boundary(mesh, beta, degree=4):
    """Split boundary facets by the sign of the facet flux of ``beta``.

    A facet counts as inflow when its flux is below ``-1e-12 * |f| * max|beta|``;
    characteristic facets fall on the outflow side.
    """
    bf = mesh.boundary_facets
    if len(bf) == 0:
        empty = np.zeros(0, dtype=np.int64)
        return BoundaryClassification(empty, empty)
    flux, eps = facet_flux(mesh, beta, bf, degree)
    inflow = flux < -eps
    return BoundaryClassification(bf[inflow], bf[~inflow])


def facet_flux(mesh, beta, facets, degree=4):
    """Signed flux ``int_f beta . n_f`` and the characteristic threshold per facet."""
    rule = simplex_rule(mesh.dim - 1, degree)
    pts = mesh.facet_points(facets, rule)
    b = beta(pts.reshape(-1, mesh.dim)).reshape(pts.shape)
    bn = np.einsum("fqd,fd->fq", b, mesh.facet_normals[facets])
    scale = mesh.facet_measures[facets] / rule.weights.sum()
    flux = bn @ rule.weights * scale
    bmax = np.linalg.norm(b, axis=2).max(axis=1)
    eps = 1e-12 * mesh.facet_measures[facets] * bmax
    return flux, eps
