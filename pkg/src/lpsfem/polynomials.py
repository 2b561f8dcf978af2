"""Monomial bases of vector polynomials on the reference simplex.

A scalar polynomial of total degree ``p`` in ``dim`` variables is a coefficient
vector over :func:`monomial_exponents`; a vector polynomial is an array of shape
``(dim, n_monomials)``.
"""

from functools import lru_cache
from itertools import product

import numpy as np


@lru_cache(maxsize=None)
def monomial_exponents(dim, degree):
    """Exponent table ``(n, dim)`` ordered by total degree, then lexicographically."""
    if degree < 0:
        return np.zeros((0, dim), dtype=np.int64)
    exps = [e for e in product(range(degree + 1), repeat=dim) if sum(e) <= degree]
    exps.sort(key=lambda e: (sum(e), tuple(-x for x in e)))
    out = np.array(exps, dtype=np.int64).reshape(-1, dim)
    out.flags.writeable = False
    return out


def n_monomials(dim, degree):
    return len(monomial_exponents(dim, degree))


def eval_monomials(exps, points):
    """Values ``(..., n)`` and gradients ``(..., n, dim)`` of monomials."""
    x = np.asarray(points, dtype=float)[..., None, :]  # (..., 1, dim)
    e = exps.astype(float)
    powers = x ** e
    vals = np.prod(powers, axis=-1)
    dim = exps.shape[1]
    grads = np.empty(vals.shape + (dim,))
    lower = np.where(e > 0, x ** np.maximum(e - 1.0, 0.0) * e, 0.0)
    for d in range(dim):
        others = np.delete(powers, d, axis=-1).prod(axis=-1)
        grads[..., d] = lower[..., d] * others
    return vals, grads


class Poly:
    """Sparse scalar polynomial used to build bubble functions exactly."""

    __slots__ = ("terms", "dim")

    def __init__(self, terms, dim):
        self.terms = {k: v for k, v in terms.items() if v != 0.0}
        self.dim = dim

    @classmethod
    def constant(cls, c, dim):
        return cls({(0,) * dim: float(c)}, dim)

    @classmethod
    def from_coefficients(cls, coef, dim, degree):
        exps = monomial_exponents(dim, degree)
        return cls({tuple(int(x) for x in e): float(c) for e, c in zip(exps, coef)}, dim)

    @classmethod
    def barycentric(cls, i, dim):
        """``lambda_i`` on the unit simplex (``lambda_0 = 1 - sum x``)."""
        if i == 0:
            terms = {(0,) * dim: 1.0}
            for d in range(dim):
                e = [0] * dim
                e[d] = 1
                terms[tuple(e)] = -1.0
            return cls(terms, dim)
        e = [0] * dim
        e[i - 1] = 1
        return cls({tuple(e): 1.0}, dim)

    @property
    def degree(self):
        return max((sum(k) for k in self.terms), default=0)

    def __mul__(self, other):
        if not isinstance(other, Poly):
            return Poly({k: v * other for k, v in self.terms.items()}, self.dim)
        out = {}
        for ka, va in self.terms.items():
            for kb, vb in other.terms.items():
                k = tuple(a + b for a, b in zip(ka, kb))
                out[k] = out.get(k, 0.0) + va * vb
        return Poly(out, self.dim)

    __rmul__ = __mul__

    def __add__(self, other):
        out = dict(self.terms)
        for k, v in other.terms.items():
            out[k] = out.get(k, 0.0) + v
        return Poly(out, self.dim)

    def coefficients(self, degree):
        exps = monomial_exponents(self.dim, degree)
        index = {tuple(int(x) for x in e): i for i, e in enumerate(exps)}
        coef = np.zeros(len(exps))
        for k, v in self.terms.items():
            coef[index[k]] = v
        return coef


def vector_poly(scalar, direction, degree):
    """Coefficients ``(dim, n)`` of ``scalar * direction``."""
    c = scalar.coefficients(degree)
    return np.outer(np.asarray(direction, dtype=float), c)


def evaluate_vector_polys(coefs, vals, grads):
    """Evaluate a stack of vector polynomials.

    ``coefs`` has shape ``(nb, dim, n)``; returns values ``(..., nb, dim)`` and
    Jacobians ``(..., nb, dim, dim)`` with ``J[..., a, b] = d phi_a / d x_b``.
    """
    v = np.einsum("bcm,...m->...bc", coefs, vals)
    j = np.einsum("bcm,...md->...bcd", coefs, grads)
    return v, j
