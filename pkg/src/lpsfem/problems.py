"""Advection problem data and the registry of reproducible examples."""

from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .errors import ConfigurationError, InvalidArgumentError
from .operators import advection


def _stack(*comps):
    return np.stack(np.broadcast_arrays(*comps), axis=-1)


def _jac(rows):
    return np.stack([_stack(*r) for r in rows], axis=-2)


@dataclass(frozen=True)
class AdvectionProblem:
    """``L u + gamma u = f`` in the unit square/cube with ``u = g`` on the inflow boundary.

    ``source`` and ``inflow`` default to the values manufactured from ``exact``.
    """

    form_kind: str
    dim: int
    beta: Callable
    beta_jacobian: Callable
    gamma: Callable
    exact: Optional[Callable] = None
    exact_jacobian: Optional[Callable] = None
    source: Optional[Callable] = None
    inflow: Optional[Callable] = None
    polynomial_coefficients: bool = False
    coercive: bool = True
    name: str = "custom"

    def __post_init__(self):
        if self.form_kind not in ("curl", "div"):
            raise ConfigurationError(f"unknown form kind {self.form_kind!r}")
        if self.dim not in (2, 3):
            raise InvalidArgumentError("dimension must be 2 or 3")
        if self.source is None and (self.exact is None or self.exact_jacobian is None):
            raise ConfigurationError("a source term or an exact solution with Jacobian is needed")
        if self.inflow is None and self.exact is None:
            raise ConfigurationError("an inflow datum or an exact solution is needed")

    @property
    def has_exact(self):
        return self.exact is not None and self.exact_jacobian is not None

    def with_kind(self, kind):
        return replace(self, form_kind=kind)

    def gamma_values(self, x):
        return np.broadcast_to(np.asarray(self.gamma(x), dtype=float), x.shape[:-1])

    def source_values(self, x):
        if self.source is not None:
            return np.broadcast_to(np.asarray(self.source(x), dtype=float), x.shape)
        u = self.exact(x)
        lu = advection(self.form_kind, u, self.exact_jacobian(x), self.beta(x),
                       self.beta_jacobian(x))
        return lu + self.gamma_values(x)[..., None] * u

    def inflow_values(self, x):
        g = self.inflow if self.inflow is not None else self.exact
        return np.broadcast_to(np.asarray(g(x), dtype=float), x.shape)


# -- example data -------------------------------------------------------------------

def _rotating_beta(x):
    return _stack(x[..., 1] - 0.5, 0.5 - x[..., 0])


def _rotating_dbeta(x):
    z, o = np.zeros(x.shape[:-1]), np.ones(x.shape[:-1])
    return _jac([(z, o), (-o, z)])


def _smooth2d(x):
    X, Y = x[..., 0], x[..., 1]
    return _stack(np.sin(X) * np.cos(Y), np.exp(X) * Y ** 2)


def _smooth2d_jac(x):
    X, Y = x[..., 0], x[..., 1]
    return _jac([(np.cos(X) * np.cos(Y), -np.sin(X) * np.sin(Y)),
                 (np.exp(X) * Y ** 2, 2.0 * np.exp(X) * Y)])


def _beta3d(x):
    X, Y, Z = x[..., 0], x[..., 1], x[..., 2]
    return _stack(np.exp(X ** 2), Y * np.sin(Z), X * Y * Z)


def _dbeta3d(x):
    X, Y, Z = x[..., 0], x[..., 1], x[..., 2]
    z = np.zeros_like(X)
    return _jac([(2.0 * X * np.exp(X ** 2), z, z),
                 (z, np.sin(Z), Y * np.cos(Z)),
                 (Y * Z, X * Z, X * Y)])


def _smooth3d(x):
    X, Y, Z = x[..., 0], x[..., 1], x[..., 2]
    return _stack(Y * np.exp(X * Z), -X * Y, np.sin(X * Y * Z))


def _smooth3d_jac(x):
    X, Y, Z = x[..., 0], x[..., 1], x[..., 2]
    e = np.exp(X * Z)
    c = np.cos(X * Y * Z)
    z = np.zeros_like(X)
    return _jac([(Y * Z * e, e, X * Y * e),
                 (-Y, -X, z),
                 (Y * Z * c, X * Z * c, X * Y * c)])


def _layer_parts(x):
    X, Y = x[..., 0], x[..., 1]
    p = 16.0 * X * (1 - X) * Y * (1 - Y)
    px = 16.0 * (1 - 2 * X) * Y * (1 - Y)
    py = 16.0 * X * (1 - X) * (1 - 2 * Y)
    d = 0.0625 - (X - 0.5) ** 2 - (Y - 0.5) ** 2
    with np.errstate(divide="ignore"):
        s = 0.5 + np.arctan(200.0 / d) / np.pi
    # d/dd of arctan(200/d) = -200 / (d^2 + 40000)
    k = -200.0 / (np.pi * (d ** 2 + 40000.0))
    sx = k * (-2.0 * (X - 0.5))
    sy = k * (-2.0 * (Y - 0.5))
    return p, px, py, s, sx, sy


def _layer(x):
    p, _, _, s, _, _ = _layer_parts(x)
    return _stack(p * s, p * s)


def _layer_jac(x):
    p, px, py, s, sx, sy = _layer_parts(x)
    row = (px * s + p * sx, py * s + p * sy)
    return _jac([row, row])


def _const(value):
    return lambda x: np.full(x.shape[:-1], float(value))


def _ex6_beta(x):
    return _stack(-x[..., 1] - 1.0, x[..., 0] + 1.0)


def _ex6_dbeta(x):
    z, o = np.zeros(x.shape[:-1]), np.ones(x.shape[:-1])
    return _jac([(z, -o), (o, z)])


def _ex6_inflow(x):
    v = np.where(x[..., 0] > 0.6, 0.0, 1.0)
    return _stack(v, v)


def rotating_smooth(kind="curl"):
    return AdvectionProblem(kind, 2, _rotating_beta, _rotating_dbeta, _const(1.0),
                            _smooth2d, _smooth2d_jac, name="rotating_smooth")


def smooth_3d(kind="curl"):
    return AdvectionProblem(kind, 3, _beta3d, _dbeta3d, _const(8.0),
                            _smooth3d, _smooth3d_jac, name="smooth_3d")


def circular_layer(kind="curl"):
    return AdvectionProblem(kind, 2, _rotating_beta, _rotating_dbeta, _const(1.0),
                            _layer, _layer_jac, name="circular_layer")


def interior_layer(kind="curl"):
    return AdvectionProblem(kind, 2, _ex6_beta, _ex6_dbeta, _const(0.0),
                            source=lambda x: np.zeros(x.shape), inflow=_ex6_inflow,
                            coercive=False, name="interior_layer")


def affine_problem(kind, dim, beta=None, gamma=1.0, matrix=None, offset=None):
    """Constant velocity and an affine exact solution (exactly representable for r >= 1)."""
    beta = np.ones(dim) / np.sqrt(dim) if beta is None else np.asarray(beta, dtype=float)
    A = (np.arange(1, dim * dim + 1).reshape(dim, dim) / dim ** 2 - 0.3
         if matrix is None else np.asarray(matrix, dtype=float))
    b = np.linspace(0.2, 0.7, dim) if offset is None else np.asarray(offset, dtype=float)
    return AdvectionProblem(
        kind, dim,
        lambda x: np.broadcast_to(beta, x.shape),
        lambda x: np.zeros(x.shape + (dim,)),
        _const(gamma),
        lambda x: x @ A.T + b,
        lambda x: np.broadcast_to(A, x.shape + (dim,)),
        polynomial_coefficients=True, name="affine")


# -- named fields for custom problems -----------------------------------------------

VELOCITIES = {
    "rotating": (2, _rotating_beta, _rotating_dbeta),
    "smooth3d": (3, _beta3d, _dbeta3d),
    "skew_rotation": (2, _ex6_beta, _ex6_dbeta),
}
EXACT_SOLUTIONS = {
    "smooth2d": (2, _smooth2d, _smooth2d_jac),
    "smooth3d": (3, _smooth3d, _smooth3d_jac),
    "circular_layer": (2, _layer, _layer_jac),
}
INFLOW_DATA = {"step": (2, _ex6_inflow)}


def custom_problem(kind, beta, gamma, exact=None, inflow=None):
    """Problem assembled from the named velocity/solution/inflow registries.

    Without ``exact`` the source is zero and ``inflow`` must name an entry
    of :data:`INFLOW_DATA`.
    """
    try:
        dim, b, db = VELOCITIES[beta]
    except KeyError:
        raise ConfigurationError(f"unknown velocity {beta!r}; choose from "
                                 f"{', '.join(VELOCITIES)}") from None
    kw = {}
    if exact is not None:
        if exact not in EXACT_SOLUTIONS:
            raise ConfigurationError(f"unknown exact solution {exact!r}; choose from "
                                     f"{', '.join(EXACT_SOLUTIONS)}")
        edim, u, du = EXACT_SOLUTIONS[exact]
        if edim != dim:
            raise ConfigurationError(f"{exact} is {edim}D but velocity {beta} is {dim}D")
        kw.update(exact=u, exact_jacobian=du)
    if inflow is not None:
        if inflow not in INFLOW_DATA or INFLOW_DATA[inflow][0] != dim:
            raise ConfigurationError(f"unknown or mismatched inflow datum {inflow!r}")
        kw["inflow"] = INFLOW_DATA[inflow][1]
    if exact is None:
        kw["source"] = lambda x: np.zeros(x.shape)
    gamma = float(gamma)
    return AdvectionProblem(kind, dim, b, db, _const(gamma), name=f"custom:{beta}", **kw)


# -- registry -----------------------------------------------------------------------

@dataclass(frozen=True)
class Variant:
    name: str
    enable_s1: bool = True
    enable_s2: bool = True
    enriched: bool = True


@dataclass(frozen=True)
class ExampleSpec:
    id: str
    title: str
    factory: Callable
    dim: int
    kinds: tuple
    orders: tuple
    levels: tuple
    variants: tuple = field(default=(Variant("lps"), Variant("no_stabilization", False, False)))
    layer: bool = False
    large_levels: tuple = ()

    def problem(self, kind=None):
        kind = kind or self.kinds[0]
        if kind not in self.kinds:
            raise ConfigurationError(f"{self.id} does not support kind {kind!r}")
        return self.factory(kind)

    def variant(self, name):
        for v in self.variants:
            if v.name == name:
                return v
        raise ConfigurationError(f"{self.id} has no variant {name!r}")


EXAMPLES = {
    "example1": ExampleSpec("example1", "2D smooth rotating flow", rotating_smooth, 2,
                            ("curl", "div"), (1, 2), (4, 8, 16, 32, 64)),
    "example2": ExampleSpec("example2", "3D smooth variable flow", smooth_3d, 3,
                            ("curl", "div"), (1,), (1, 2, 4, 8, 16), large_levels=(32,)),
    "example3": ExampleSpec("example3", "3D stabilization ablation", smooth_3d, 3,
                            ("curl",), (1,), (1, 2, 4, 8, 16),
                            variants=(Variant("s1+s2"), Variant("s1-only", True, False),
                                      Variant("s2-only", False, True)),
                            large_levels=(32,)),
    "example4": ExampleSpec("example4", "2D order 2 without enrichment", rotating_smooth, 2,
                            ("curl",), (2,), (4, 8, 16, 32, 64, 128),
                            variants=(Variant("s1-only", True, False, False),
                                      Variant("no_stabilization", False, False, False))),
    "example5": ExampleSpec("example5", "2D circular interior layer", circular_layer, 2,
                            ("curl",), (1,), (32,), layer=True),
    "example6": ExampleSpec("example6", "2D discontinuous inflow layer", interior_layer, 2,
                            ("curl",), (1,), (32,), layer=True),
}


def get_example(example_id):
    try:
        return EXAMPLES[example_id]
    except KeyError:
        raise ConfigurationError(f"unknown example {example_id!r}; "
                                 f"choose from {', '.join(EXAMPLES)}") from None


def list_examples():
    return list(EXAMPLES.values())
