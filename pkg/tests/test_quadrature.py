import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from lpsfem.errors import InvalidArgumentError, UnsupportedDegreeError
from lpsfem.quadrature import MAX_DEGREE, REFERENCE_MEASURE, required_degree, simplex_rule


def exact_monomial_integral(exps):
    """Dirichlet formula: int over the unit simplex of prod x_i^a_i."""
    dim = len(exps)
    return math.prod(math.factorial(a) for a in exps) / math.factorial(sum(exps) + dim)


@pytest.mark.parametrize("dim", [1, 2, 3])
@pytest.mark.parametrize("degree", range(0, MAX_DEGREE + 1))
def test_weights_positive_and_sum_to_measure(dim, degree):
    rule = simplex_rule(dim, degree)
    assert np.all(rule.weights > 0)
    assert rule.weights.sum() == pytest.approx(REFERENCE_MEASURE[dim], rel=1e-14)
    assert np.allclose(rule.points.sum(axis=1), 1.0)
    assert np.all(rule.points >= -1e-14)


@given(dim=st.integers(1, 3), data=st.data())
def test_monomials_integrated_exactly_up_to_degree(dim, data):
    degree = data.draw(st.integers(0, MAX_DEGREE))
    rule = simplex_rule(dim, degree)
    parts = data.draw(st.lists(st.integers(0, degree), min_size=dim, max_size=dim)
                      .filter(lambda e: sum(e) <= degree))
    x = rule.cartesian
    approx = float(rule.weights @ np.prod(x ** np.array(parts), axis=1))
    assert approx == pytest.approx(exact_monomial_integral(parts), rel=1e-12, abs=1e-15)


def test_triangle_point_rule():
    rule = simplex_rule(2, 1)
    assert rule.weights.sum() == pytest.approx(0.5)
    centroid = rule.weights @ rule.cartesian / rule.weights.sum()
    assert np.allclose(centroid, [1 / 3, 1 / 3])


def test_errors():
    with pytest.raises(UnsupportedDegreeError):
        simplex_rule(2, MAX_DEGREE + 1)
    with pytest.raises(InvalidArgumentError):
        simplex_rule(2, -1)
    with pytest.raises(InvalidArgumentError):
        simplex_rule(4, 2)
    with pytest.raises(InvalidArgumentError):
        required_degree(0, "mass")
    with pytest.raises(InvalidArgumentError):
        required_degree(1, "nonsense")


def test_rules_are_cached_and_read_only():
    rule = simplex_rule(3, 6)
    assert simplex_rule(3, 6) is rule
    with pytest.raises(ValueError):
        rule.weights[0] = 1.0


def test_required_degree_grows_with_order():
    assert required_degree(1, "mass") < required_degree(2, "mass") < required_degree(3, "mass")
    assert required_degree(3, "advection") <= MAX_DEGREE
