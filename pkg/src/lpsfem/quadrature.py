"""Quadrature rules on the reference segment, triangle and tetrahedron.

Reference simplices are the unit ones: ``{x_i >= 0, sum(x) <= 1}``.  Points are
stored in barycentric coordinates (``lambda_0 = 1 - sum(x)`` first).

Triangle and tetrahedron rules are the fully symmetric Xiao-Gimbutas rules
shipped with :mod:`modepy`; segment rules are Gauss-Legendre.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import InvalidArgumentError, UnsupportedDegreeError

MAX_DEGREE = 14

REFERENCE_MEASURE = {0: 1.0, 1: 1.0, 2: 0.5, 3: 1.0 / 6.0}

# extra exactness on top of the polynomial-integrand degree
_PURPOSE_OFFSET = {"mass": 2, "advection": 2, "facet": 2, "stabilization": 1}


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    points: np.ndarray  # (nq, dim + 1) barycentric
    weights: np.ndarray  # (nq,)
    exactness_degree: int

    @property
    def dim(self):
        return self.points.shape[1] - 1

    @property
    def cartesian(self):
        """Points as Cartesian coordinates on the unit reference simplex."""
        return self.points[:, 1:]

    def __len__(self):
        return len(self.weights)


def _freeze(a):
    a = np.ascontiguousarray(a, dtype=float)
    a.flags.writeable = False
    return a


@lru_cache(maxsize=None)
def simplex_rule(dim, degree):
    """Positive-weight rule on the unit ``dim``-simplex exact to ``degree``."""
    if dim not in (0, 1, 2, 3):
        raise InvalidArgumentError(f"no simplex rules for dim={dim}")
    if degree < 0:
        raise InvalidArgumentError("degree must be non-negative")
    if degree > MAX_DEGREE:
        raise UnsupportedDegreeError(
            f"degree {degree} exceeds the largest tabulated rule ({MAX_DEGREE})")

    if dim == 0:
        return QuadratureRule(_freeze([[1.0]]), _freeze([1.0]), degree)
    if dim == 1:
        npts = degree // 2 + 1
        x, w = np.polynomial.legendre.leggauss(npts)
        s = 0.5 * (x + 1.0)
        pts = np.column_stack([1.0 - s, s])
        return QuadratureRule(_freeze(pts), _freeze(0.5 * w), degree)

    import modepy

    xg = modepy.XiaoGimbutasSimplexQuadrature(max(degree, 1), dim)
    # modepy works on the bi-unit simplex [-1, 1]
    x = 0.5 * (np.asarray(xg.nodes).T + 1.0)
    w = np.asarray(xg.weights) * 0.5 ** dim
    pts = np.column_stack([1.0 - x.sum(axis=1), x])
    # renormalise the last bits so the weight sum is the exact measure
    w = w * (REFERENCE_MEASURE[dim] / w.sum())
    return QuadratureRule(_freeze(pts), _freeze(w), degree)


def required_degree(r, purpose):
    """Quadrature degree that integrates the enriched-space bilinear forms.

    Bubbles raise the local polynomial degree to ``r + 2``.
    """
    if r < 1:
        raise InvalidArgumentError("space order must be >= 1")
    try:
        offset = _PURPOSE_OFFSET[purpose]
    except KeyError:
        raise InvalidArgumentError(f"unknown quadrature purpose {purpose!r}") from None
    return 2 * (r + offset)
