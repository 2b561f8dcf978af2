from math import comb

import numpy as np
import pytest

from lpsfem.elements import (bubble_basis, local_element, projection_basis, reference_basis,
                             reference_vertices)
from lpsfem.errors import UnsupportedElementError
from lpsfem.polynomials import eval_monomials, monomial_exponents
from lpsfem.quadrature import simplex_rule

CASES = [(k, r, d) for d in (2, 3) for k in ("curl", "div") for r in (1, 2, 3)]


@pytest.mark.parametrize("kind,r,dim", CASES)
def test_dual_basis_identity(kind, r, dim):
    W = reference_basis(kind, r, dim)
    assert len(W) == dim * comb(r + dim, dim)
    G = np.array([f.apply(W.coefficients, W.degree) for f in W.functionals])
    assert np.abs(G - np.eye(len(W))).max() < 1e-10


def _facet_samples(dim, rng, n=7):
    verts = reference_vertices(dim)
    for l in range(dim + 1):
        fv = np.delete(verts, l, axis=0)
        lam = rng.dirichlet(np.ones(dim), size=n)
        pts = lam @ fv
        if dim == 2:
            t = fv[1] - fv[0]
            normal = np.array([t[1], -t[0]])
        else:
            normal = np.cross(fv[1] - fv[0], fv[2] - fv[0])
        yield pts, normal / np.linalg.norm(normal)


@pytest.mark.parametrize("kind,r,dim", CASES)
def test_bubbles_have_vanishing_traces(kind, r, dim):
    Bb = bubble_basis(kind, r, dim)
    rng = np.random.default_rng(0)
    worst = 0.0
    for pts, n in _facet_samples(dim, rng):
        v = Bb.evaluate(pts)[0]  # (np, nb, dim)
        if kind == "div":
            worst = max(worst, np.abs(v @ n).max())
        else:
            tang = v - (v @ n)[..., None] * n
            worst = max(worst, np.abs(tang).max())
    assert worst < 1e-13


@pytest.mark.parametrize("kind,r,dim,extra", [
    ("div", 1, 2, 2), ("curl", 1, 2, 2), ("curl", 2, 2, 4), ("div", 2, 2, 4),
    ("curl", 1, 3, 3), ("div", 1, 3, 3)])
def test_enrichment_counts(kind, r, dim, extra):
    el = local_element(kind, r, dim, True)
    assert el.n_bubbles == extra
    assert len(el) == len(reference_basis(kind, r, dim)) + extra


@pytest.mark.parametrize("kind,r,dim", CASES)
def test_enriched_local_space_is_independent(kind, r, dim):
    el = local_element(kind, r, dim, True)
    rule = simplex_rule(dim, min(2 * el.degree, 14))
    v = el.evaluate(rule.cartesian)[0]
    M = np.einsum("q,qid,qjd->ij", rule.weights, v, v)
    s = np.linalg.svd(M, compute_uv=False)
    assert s[-1] / s[0] > 1e-12


def test_projection_basis_size():
    D = projection_basis(3, 2)
    assert len(D) == 2 * 6
    assert D.coefficients.shape == (12, 2, 6)


def test_unsupported():
    with pytest.raises(UnsupportedElementError):
        reference_basis("grad", 1, 2)
    with pytest.raises(UnsupportedElementError):
        reference_basis("curl", 4, 2)


def test_monomial_gradients_match_finite_differences():
    exps = monomial_exponents(3, 3)
    x = np.array([[0.3, 0.2, 0.4]])
    vals, grads = eval_monomials(exps, x)
    h = 1e-6
    for d in range(3):
        e = np.zeros(3)
        e[d] = h
        fd = (eval_monomials(exps, x + e)[0] - eval_monomials(exps, x - e)[0]) / (2 * h)
        assert np.allclose(fd, grads[..., d], atol=1e-8)
