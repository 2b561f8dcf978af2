"""Legacy-VTK ASCII writer for point data on uniform sampling grids."""

from pathlib import Path

import numpy as np

from .errors import InvalidArgumentError

_FMT = "%.16e"  # 17 significant digits, round-trips float64


def _cells(shape):
    """Quad (2D) or hexahedron (3D) connectivity of a lexicographic point grid."""
    if len(shape) == 2:
        nx, ny = shape
        idx = np.arange(nx * ny).reshape(ny, nx)
        a = idx[:-1, :-1].ravel()
        return np.column_stack([a, a + 1, a + 1 + nx, a + nx]), 9
    nx, ny, nz = shape
    idx = np.arange(nx * ny * nz).reshape(nz, ny, nx)
    a = idx[:-1, :-1, :-1].ravel()
    sx, sy = nx * ny, nx
    quad = np.column_stack([a, a + 1, a + 1 + sy, a + sy])
    return np.hstack([quad, quad + sx]), 12


def format_vtk(points, shape, scalars=None, vectors=None, title="lpsfem field"):
    """Serialize a structured sampling grid as a legacy ``UNSTRUCTURED_GRID``.

    ``points`` is ``(np, dim)`` ordered with x fastest; ``scalars`` and
    ``vectors`` map names to ``(np,)`` and ``(np, dim)`` arrays.
    """
    points = np.asarray(points, dtype=float)
    if points.ndim != 2 or points.shape[1] not in (2, 3) or len(shape) != points.shape[1]:
        raise InvalidArgumentError("points must be (np, 2|3) and match the grid shape")
    if int(np.prod(shape)) != len(points):
        raise InvalidArgumentError("grid shape does not match the number of points")
    p3 = np.zeros((len(points), 3))
    p3[:, :points.shape[1]] = points
    conn, ctype = _cells(tuple(shape))
    out = ["# vtk DataFile Version 3.0", title.replace("\n", " ")[:255], "ASCII",
           "DATASET UNSTRUCTURED_GRID", f"POINTS {len(p3)} double"]
    out += [" ".join(_FMT % v for v in row) for row in p3]
    nv = conn.shape[1]
    out.append(f"CELLS {len(conn)} {len(conn) * (nv + 1)}")
    out += [f"{nv} " + " ".join(map(str, row)) for row in conn]
    out.append(f"CELL_TYPES {len(conn)}")
    out += [str(ctype)] * len(conn)
    out.append(f"POINT_DATA {len(p3)}")
    for name, vals in (scalars or {}).items():
        vals = np.asarray(vals, dtype=float).reshape(-1)
        out += [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
        out += [_FMT % v for v in vals]
    for name, vals in (vectors or {}).items():
        vals = np.asarray(vals, dtype=float)
        v3 = np.zeros((len(vals), 3))
        v3[:, :vals.shape[1]] = vals
        out.append(f"VECTORS {name} double")
        out += [" ".join(_FMT % v for v in row) for row in v3]
    return "\n".join(out) + "\n"


def write_vtk(path, points, shape, scalars=None, vectors=None, title="lpsfem field"):
    path = Path(path)
    path.write_text(format_vtk(points, shape, scalars, vectors, title))
    return path
