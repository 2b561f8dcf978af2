import numpy as np
import pytest

from lpsfem.errors import DegenerateCellError, InvalidArgumentError
from lpsfem.mesh import SimplicialMesh, build_structured_mesh, classify_boundary


@pytest.mark.parametrize("n", [1, 2, 5])
def test_counts_2d(n):
    m = build_structured_mesh(2, n)
    assert m.n_cells == 2 * n * n
    assert len(m.vertices) == (n + 1) ** 2
    assert m.n_facets == 3 * n * n + 2 * n
    assert len(m.boundary_facets) == 4 * n


@pytest.mark.parametrize("n", [1, 2, 3])
def test_counts_3d(n):
    m = build_structured_mesh(3, n)
    assert m.n_cells == 6 * n ** 3
    assert len(m.boundary_facets) == 12 * n * n
    # Euler characteristic of a ball: V - E + F - C = 1
    assert len(m.vertices) - len(m.edges) + m.n_facets - m.n_cells == 1


@pytest.mark.parametrize("dim,n", [(2, 3), (3, 2)])
def test_geometry(dim, n):
    m = build_structured_mesh(dim, n)
    assert m.volumes.sum() == pytest.approx(1.0)
    assert np.allclose(m.h, np.sqrt(dim) / n)
    assert np.allclose(np.linalg.norm(m.facet_normals, axis=1), 1.0)
    # normals point out of facet_cells[:, 0]
    fc = m.vertices[m.facets].mean(axis=1)
    cc = m.barycenters()[m.facet_cells[:, 0]]
    assert np.all(np.einsum("fd,fd->f", fc - cc, m.facet_normals) > 0)
    # interior facets: first cell has the smaller index
    fi = m.interior_facets
    assert np.all(m.facet_cells[fi, 0] < m.facet_cells[fi, 1])
    # boundary normals are axis-aligned and point outward
    bf = m.boundary_facets
    out = fc[bf] - 0.5
    assert np.all(np.einsum("fd,fd->f", out, m.facet_normals[bf]) > 0)


def test_deterministic_bit_identical():
    a, b = build_structured_mesh(3, 3), build_structured_mesh(3, 3)
    for name in ("vertices", "cells", "facets", "facet_cells", "facet_normals", "B"):
        assert np.array_equal(getattr(a, name), getattr(b, name))


def test_cells_are_ascending_and_quality_bounded():
    m = build_structured_mesh(3, 2)
    assert np.all(np.diff(m.cells, axis=1) > 0)
    assert m.circumradius_inradius_ratio().max() < 10


def test_invalid_inputs():
    with pytest.raises(InvalidArgumentError):
        build_structured_mesh(4, 2)
    with pytest.raises(InvalidArgumentError):
        build_structured_mesh(2, 0)
    with pytest.raises(InvalidArgumentError):
        SimplicialMesh(np.eye(3)[:, :2], [[2, 1, 0]])
    with pytest.raises(DegenerateCellError):
        SimplicialMesh(np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]), [[0, 1, 2]])


def test_locate_and_mapping_round_trip():
    m = build_structured_mesh(2, 4)
    rng = np.random.default_rng(1)
    pts = rng.random((50, 2))
    cells = m.locate(pts)
    assert np.all(cells >= 0)
    xh = np.einsum("cij,cj->ci", m.Binv[cells], pts - m.offsets[cells])
    assert np.all(xh >= -1e-12) and np.all(xh.sum(axis=1) <= 1 + 1e-12)
    assert m.locate([[2.0, 2.0]])[0] == -1
    cm = m.cell_map(3)
    assert np.allclose(cm.inverse(cm(np.array([[0.2, 0.3]]))), [[0.2, 0.3]])


def test_boundary_classification_constant_flow():
    m = build_structured_mesh(2, 4)
    bc = classify_boundary(m, lambda x: np.broadcast_to([1.0, 0.0], x.shape))
    # inflow is x = 0, outflow includes x = 1 and the characteristic top/bottom edges
    assert len(bc.inflow_facets) == 4
    assert len(bc.outflow_facets) == 12
    assert np.allclose(m.facet_normals[bc.inflow_facets], [-1.0, 0.0])


def test_dump(tmp_path):
    m = build_structured_mesh(2, 1)
    p = tmp_path / "mesh.txt"
    m.dump(p)
    text = p.read_text()
    assert text.startswith("VERTICES 4") and "CELLS 2" in text and "FACETS 5" in text
