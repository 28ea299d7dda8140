import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from biconservative import jets as J
from conftest import fd_gradient, fd_hessian

coords = st.floats(min_value=-0.9, max_value=0.9, allow_nan=False)


def sample_function(xs):
    x, y = xs
    return J.exp(0.3 * x) * J.sin(y + 0.2) + J.sqrt(2.0 + x * y) / (1.5 + J.cos(x - y)) + J.log(3.0 + x)


def sample_float(p):
    x, y = p
    return (
        math.exp(0.3 * x) * math.sin(y + 0.2)
        + math.sqrt(2.0 + x * y) / (1.5 + math.cos(x - y))
        + math.log(3.0 + x)
    )


def test_polynomial_partials_exact():
    x, y = J.variables([0.5, -2.0], 4)
    f = x**2 * y**3
    assert f.value == pytest.approx(0.25 * -8.0)
    assert f.partial([1, 0]) == pytest.approx(2 * 0.5 * -8.0)
    assert f.partial([2, 1]) == pytest.approx(2 * 3 * 4.0)
    assert f.partial([2, 2]) == pytest.approx(2 * 6 * -2.0)
    assert f.partial([0, 4]) == 0.0


def test_truncate_is_prefix():
    x, y = J.variables([0.1, 0.2], 4)
    f = J.exp(x * y)
    g = f.truncate(2)
    assert g.order == 2
    np.testing.assert_array_equal(g.c, f.c[: J.n_coeffs(2, 2)])


@settings(max_examples=30, deadline=None)
@given(coords, coords)
def test_gradient_and_hessian_match_finite_differences(a, b):
    f = sample_function(J.variables([a, b], 2))
    assert f.value == pytest.approx(sample_float([a, b]), abs=1e-13)
    np.testing.assert_allclose(f.grad().value, fd_gradient(sample_float, [a, b]), atol=1e-8)
    hess = np.array([[f.d(i).d(j).value for j in range(2)] for i in range(2)])
    np.testing.assert_allclose(hess, fd_hessian(sample_float, [a, b]), atol=2e-6)


@settings(max_examples=30, deadline=None)
@given(st.floats(min_value=0.2, max_value=3.0))
def test_exp_log_round_trip(a):
    (x,) = J.variables([a], 5)
    r = J.exp(J.log(x))
    np.testing.assert_allclose(r.c, x.c, atol=1e-12)
    s = J.sqrt(x) * J.sqrt(x)
    np.testing.assert_allclose(s.c, x.c, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(coords)
def test_trig_identity(a):
    (x,) = J.variables([a], 5)
    one = J.sin(x) ** 2 + J.cos(x) ** 2
    assert one.value == pytest.approx(1.0)
    np.testing.assert_allclose(one.c[1:], 0.0, atol=1e-13)


def test_compose_matches_series():
    (t,) = J.variables([0.3], 4)
    # compose with the Taylor coefficients of exp at 0 gives exp(t - 0.3)
    coeffs = [1.0 / math.factorial(k) for k in range(5)]
    np.testing.assert_allclose(t.compose(coeffs).c, J.exp(t - 0.3).c, atol=1e-15)


def test_power_matches_sqrt():
    (x,) = J.variables([1.7], 4)
    np.testing.assert_allclose(x.power(0.5).c, J.sqrt(x).c, atol=1e-14)


def test_matrix_inverse_and_determinant():
    x, y = J.variables([0.2, 0.4], 2)
    m = J.stack([J.vec([2.0 + x, y]), J.vec([x * y, 3.0 - y])])
    mi = J.inv(m)
    ident = J.matmul(m, mi)
    np.testing.assert_allclose(ident.value, np.eye(2), atol=1e-14)
    np.testing.assert_allclose(ident.d(0).value, 0.0, atol=1e-14)
    np.testing.assert_allclose(J.det(m).value, np.linalg.det(m.value))
