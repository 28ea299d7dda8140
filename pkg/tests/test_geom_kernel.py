import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from biconservative import charts
from biconservative import geom_kernel as gk
from biconservative import jets as J
from biconservative.errors import DegenerateMetricError
from conftest import fd_gradient


def test_metric_matches_finite_difference_jacobian(rng):
    c = charts.torus(2.0, 1.0)
    for q in c.sample(5, rng, inset=0.1):
        geo = gk.LocalGeometry(c, q, order=2)
        jac = fd_gradient(lambda p: c.func(list(p)), q)
        np.testing.assert_allclose(geo.g.value, jac.T @ jac, atol=1e-8)


@pytest.mark.parametrize("n,r", [(2, 1.0), (3, 2.0)])
def test_sphere_curvature_inward_normal(n, r, rng):
    c = charts.sphere(n, r)
    for q in c.sample(5, rng, inset=0.1):
        cd = gk.curvature_at(c, q)
        np.testing.assert_allclose(cd.lambdas, 1.0 / r, atol=1e-12)
        geo = gk.LocalGeometry(c, q, order=2)
        assert geo.h.value == pytest.approx(1.0 / r)
        np.testing.assert_allclose(geo.N.value, -c(q) / r, atol=1e-12)


def test_cylinder_principal_curvatures(rng):
    c = charts.cylinder(1, 1, 2.0)
    lam = gk.curvature_at(c, c.sample(1, rng, inset=0.1)[0]).lambdas
    np.testing.assert_allclose(sorted(lam), [0.0, 0.5], atol=1e-12)


def test_laplacian_of_height_on_unit_sphere(rng):
    # the last coordinate z restricted to S^2(1) satisfies Delta z = -2 z
    c = charts.sphere(2, 1.0)
    for q in c.sample(5, rng, inset=0.1):
        z = c(q)[-1]
        assert gk.laplace_beltrami(c, lambda xs: c.func(xs)[2], q) == pytest.approx(-2 * z, abs=1e-12)


def test_flat_bilaplacian_of_quartic():
    c = charts.plane(2)
    assert gk.bilaplacian(c, lambda xs: xs[0] ** 4, [0.3, 0.1]) == pytest.approx(24.0)


@pytest.mark.parametrize("name", sorted(charts.catalog()))
def test_beltrami_and_normal_laplacian_identities(name, rng):
    c = charts.catalog()[name]
    for q in c.sample(8, rng, inset=0.05):
        assert gk.beltrami_defect(c, q) <= 1e-8
        assert gk.normal_laplacian_defect(c, q) <= 1e-6


def test_split_agrees_with_direct_projection(rng):
    c = charts.torus(2.0, 1.0)
    for q in c.sample(3, rng, inset=0.1):
        split = gk.delta_H_split(c, q)
        _, normal = gk.delta_H_direct(c, q)
        # the normal part of Delta(hN) is Delta h - |A|^2 h
        assert normal == pytest.approx(split.normal, abs=1e-8)


@settings(max_examples=15, deadline=None)
@given(st.floats(0.3, 2.5), st.floats(-2.5, 2.5), st.floats(0.5, 2.0))
def test_mean_curvature_invariant_under_reparametrization(theta, phi, scale):
    base = charts.sphere(2, 1.3)
    # theta = scale * u, phi = v + u
    lo = 0.2 / scale
    hi = 2.9 / scale
    re = charts.reparametrize(base, lambda xs: [scale * xs[0], xs[1] + xs[0]], [[lo, hi], [-6.0, 6.0]])
    u = min(max(theta / scale, lo), hi)
    v = phi - u
    h_base = gk.LocalGeometry(base, [scale * u, v + u], order=2).h.value
    h_re = gk.LocalGeometry(re, [u, v], order=2).h.value
    assert h_re == pytest.approx(h_base, abs=1e-12)


def test_degenerate_metric_raises():
    c = charts.Chart("pinched", 2, 3, lambda xs: J.vec([xs[0] ** 3, xs[1], xs[0] * 0.0]), [[-1, 1], [-1, 1]])
    with pytest.raises(DegenerateMetricError):
        gk.LocalGeometry(c, [0.0, 0.0], order=2)


def test_residual_report_lower_bound_and_text():
    r = gk.ResidualReport.from_values("x", [0.5, 0.2, 0.9], [[0], [1], [2]], 0.1, lower_bound=True)
    assert r.verdict == "pass" and r.min_abs == 0.2 and r.worst_point == (1.0,)
    r2 = gk.ResidualReport.from_values("x", [0.5, 2e-9], [[0], [1]], 1e-8)
    assert r2.verdict == "fail" and r2.max_abs == 0.5
    text = r2.to_text()
    assert "verdict: fail" in text and "max_abs: 0.5" in text
