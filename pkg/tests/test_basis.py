import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from casebound.basis import (
    BasisSpec,
    CubicSplineTerm,
    Linear,
    Polynomial,
    build_basis,
)
from casebound.errors import DegenerateColumn, ValidationError
from casebound.rng import RngSpec


def test_linear_spec_is_identity_passthrough():
    x = RngSpec(1).derive("basis").random((40, 5))
    spec = BasisSpec.linear(5)
    assert spec.n_columns == 5
    assert np.array_equal(build_basis(x, spec), x)
    assert spec.intercept_safe_mask().all()


def test_quadratic_with_interactions_has_twenty_columns():
    x = RngSpec(2).derive("basis").random((30, 5))
    spec = BasisSpec.polynomial(5, 2, interactions=True)
    assert spec.n_columns == 20
    cols = build_basis(x, spec)
    assert cols.shape == (30, 20)
    # ordering: (x1, x1^2), ..., (x5, x5^2), then pairs (1,2), (1,3), ...
    assert np.array_equal(cols[:, 0], x[:, 0])
    assert np.array_equal(cols[:, 1], x[:, 0] ** 2)
    assert np.array_equal(cols[:, 10], x[:, 0] * x[:, 1])
    assert np.array_equal(cols[:, 19], x[:, 3] * x[:, 4])
    names = spec.column_names()
    assert len(names) == 20
    assert names[0] == "x1^1" and names[10] == "x1*x2" and names[19] == "x4*x5"


def test_cubic_spline_dimension_and_partition_of_unity():
    x = RngSpec(3).derive("basis").standard_normal(200)
    spec = BasisSpec(terms=(CubicSplineTerm(3),))
    assert spec.n_columns == 7
    cols = build_basis(x[:, None], spec)
    assert cols.shape == (200, 7)
    assert np.all(cols >= 0)
    np.testing.assert_allclose(cols.sum(axis=1), 1.0, atol=1e-10)
    mask = spec.intercept_safe_mask()
    assert mask.sum() == 6 and not mask[0]


@given(st.integers(min_value=1, max_value=5))
@settings(max_examples=10, deadline=None)
def test_partition_of_unity_any_knot_count(m):
    x = RngSpec(4).derive("basis", m).random(150)
    spec = BasisSpec(terms=(CubicSplineTerm(m),))
    cols = build_basis(x[:, None], spec)
    assert cols.shape[1] == m + 4
    np.testing.assert_allclose(cols.sum(axis=1), 1.0, atol=1e-10)


def test_mixed_spec_column_layout():
    x = RngSpec(5).derive("basis").random((60, 3))
    spec = BasisSpec(terms=(Linear(), CubicSplineTerm(2), Polynomial(3)))
    assert spec.n_columns == 1 + 6 + 3
    cols = build_basis(x, spec)
    assert np.array_equal(cols[:, 0], x[:, 0])
    np.testing.assert_allclose(cols[:, 1:7].sum(axis=1), 1.0, atol=1e-10)
    mask = spec.intercept_safe_mask()
    assert mask.tolist() == [True, False] + [True] * 8


def test_degenerate_column_rejected():
    x = np.column_stack([np.ones(20), np.arange(20.0)])
    with pytest.raises(DegenerateColumn):
        build_basis(x, BasisSpec.linear(2))


def test_spline_on_nearly_constant_covariate_rejected():
    x = np.repeat([1.0, 1.0, 1.0, 2.0], 10)[:, None]
    with pytest.raises(ValidationError):
        build_basis(x, BasisSpec(terms=(CubicSplineTerm(3),)))


def test_spec_validation():
    with pytest.raises(ValidationError):
        Polynomial(0)
    with pytest.raises(ValidationError):
        CubicSplineTerm(0)
    with pytest.raises(ValidationError):
        BasisSpec(terms=(Linear(),), interactions=True)
    with pytest.raises(ValidationError):
        build_basis(np.zeros((5, 2)), BasisSpec.linear(3))


def test_empty_spec_for_no_covariate_data():
    spec = BasisSpec.empty()
    assert spec.n_columns == 0
    cols = build_basis(np.empty((7, 0)), spec)
    assert cols.shape == (7, 0)
