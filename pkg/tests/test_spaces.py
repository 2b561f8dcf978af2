import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from lpsfem.errors import DegenerateCellError
from lpsfem.mesh import AffineCellMap, build_structured_mesh
from lpsfem.quadrature import REFERENCE_MEASURE, simplex_rule
from lpsfem.spaces import FiniteElementSpace, piola_contravariant, piola_covariant
from lpsfem.verification import random_polynomial_field

finite = st.floats(-2, 2, allow_nan=False, allow_infinity=False)


@given(B=arrays(float, (3, 3), elements=finite), q=arrays(float, (5, 3), elements=finite),
       v=arrays(float, (5, 3), elements=finite))
def test_piola_pairing_preserved(B, q, v):
    det = np.linalg.det(B)
    if det < 0:
        B = B[:, ::-1].copy()
        det = -det
    if det < 1e-2 or np.linalg.cond(B) > 1e4:
        return
    cm = AffineCellMap(B, np.zeros(3))
    # (G q, H v)_K = (q, v)_Khat pointwise times |det B|
    lhs = np.einsum("pd,pd->p", piola_covariant(cm, q), piola_contravariant(cm, v)) * cm.det
    rhs = np.einsum("pd,pd->p", q, v)
    assert np.allclose(lhs, rhs, rtol=1e-13, atol=1e-12)


def test_piola_identity_and_singular():
    cm = AffineCellMap(np.eye(2), np.zeros(2))
    v = np.array([[1.0, 2.0]])
    assert np.allclose(piola_covariant(cm, v), v)
    assert np.allclose(piola_contravariant(cm, v), v)
    with pytest.raises(DegenerateCellError):
        piola_covariant(AffineCellMap(np.array([[1.0, 2.0], [0.5, 1.0]]), np.zeros(2)), v)


def test_dof_counts():
    m2 = build_structured_mesh(2, 1)
    assert FiniteElementSpace(m2, "div", 1, enriched=False).ndofs == 10
    assert FiniteElementSpace(m2, "div", 1, enriched=True).ndofs == 14
    m3 = build_structured_mesh(3, 1)
    assert FiniteElementSpace(m3, "curl", 1, True).ndofs == 2 * len(m3.edges) + 6 * 3


def _trace_jump(space, coef):
    m = space.mesh
    rule = simplex_rule(m.dim - 1, 2 * space.element.degree)
    ref = space.facet_tabulation(rule)[0]
    fi = m.interior_facets
    side = []
    for s in (0, 1):
        c = m.facet_cells[fi, s]
        V = space.push_forward(c, ref[m.facet_local[fi, s]])
        side.append(np.einsum("fb,fqbd->fqd", space.local_coefficients(coef, c), V))
    jump = side[0] - side[1]
    n = m.facet_normals[fi][:, None, :]
    if space.kind == "div":
        return np.abs(np.einsum("fqd,fqd->fq", jump, n)).max(), np.abs(side[0]).max()
    tang = jump - np.einsum("fqd,fqd->fq", jump, n)[..., None] * n
    return np.abs(tang).max(), np.abs(side[0]).max()


@pytest.mark.parametrize("dim,kind,r", [(2, k, r) for k in ("curl", "div") for r in (1, 2, 3)]
                         + [(3, k, r) for k in ("curl", "div") for r in (1, 2)])
@pytest.mark.parametrize("enriched", [False, True])
def test_global_conformity(dim, kind, r, enriched):
    m = build_structured_mesh(dim, 3 if dim == 2 else 2)
    space = FiniteElementSpace(m, kind, r, enriched)
    coef = np.random.default_rng(r).standard_normal(space.ndofs)
    jump, scale = _trace_jump(space, coef)
    assert jump < 1e-11 * max(1.0, scale)


@pytest.mark.parametrize("dim,kind,r", [(2, "curl", 1), (2, "div", 2), (2, "curl", 3),
                                        (3, "curl", 2), (3, "div", 1)])
def test_interpolant_reproduces_polynomials(dim, kind, r):
    m = build_structured_mesh(dim, 2)
    space = FiniteElementSpace(m, kind, r)
    f, _ = random_polynomial_field(dim, r, np.random.default_rng(3))
    coef = space.interpolate(f)
    rng = np.random.default_rng(4)
    pts = rng.random((40, dim)) * 0.98 + 0.01
    assert np.allclose(space.evaluate_at_points(coef, pts), f(pts), atol=1e-11)


def _l2_interp_error(n, kind):
    m = build_structured_mesh(2, n)
    space = FiniteElementSpace(m, kind, 1, enriched=False)

    def v(x):
        return np.stack([np.sin(x[..., 0]) * np.cos(x[..., 1]),
                         np.exp(x[..., 0]) * x[..., 1] ** 2], axis=-1)

    coef = space.interpolate(v)
    rule = simplex_rule(2, 8)
    cells = np.arange(m.n_cells)
    e = v(m.to_physical(cells, rule.cartesian)) - space.evaluate_function(coef, cells,
                                                                         rule.cartesian)
    return np.sqrt(np.einsum("q,c,cqd,cqd->", rule.weights, m.det, e, e))


@pytest.mark.parametrize("kind", ["curl", "div"])
def test_interpolation_error_order_two(kind):
    e = [_l2_interp_error(n, kind) for n in (4, 8, 16)]
    orders = np.log2(np.array(e[:-1]) / np.array(e[1:]))
    assert np.all((orders > 1.9) & (orders < 2.1))


def test_reference_measure_consistency():
    m = build_structured_mesh(2, 1)
    assert m.det[0] * REFERENCE_MEASURE[2] == pytest.approx(0.5)
