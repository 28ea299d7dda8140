import numpy as np
import pytest

from biconservative import charts
from biconservative.errors import DomainError


@pytest.mark.parametrize("n,r", [(2, 1.0), (3, 2.0), (4, 0.5)])
def test_sphere_points_have_radius_r(n, r, rng):
    c = charts.sphere(n, r)
    for q in c.sample(20, rng):
        assert np.linalg.norm(c(q)) == pytest.approx(r, rel=1e-14)


def test_cylinder_factor_radius(rng):
    c = charts.cylinder(1, 1, 1.5)
    for q in c.sample(10, rng):
        x = c(q)
        assert np.hypot(x[0], x[1]) == pytest.approx(1.5)


def test_check_rejects_outside_and_wrong_size():
    c = charts.sphere(2, 1.0)
    with pytest.raises(DomainError):
        c([10.0, 0.0])
    with pytest.raises(DomainError):
        c([0.5])


def test_grid_and_sample_stay_inside(rng):
    c = charts.torus(2.0, 1.0)
    g = c.grid(4)
    assert g.shape == (16, 2)
    assert all(c.contains(q) for q in g)
    assert all(c.contains(q) for q in c.sample(50, rng, inset=0.1))


def test_catalog_has_every_kernel_chart():
    names = set(charts.catalog())
    assert {"plane", "graph", "sphere2", "sphere3", "cylinder", "catenoid", "torus"} <= names
    for c in charts.catalog().values():
        assert c.dim_ambient == c.dim_domain + 1


def test_reparametrize_maps_points():
    base = charts.sphere(2, 1.0)
    re = charts.reparametrize(base, lambda xs: [xs[0] * 0.5 + 1.0, xs[1]], [[-0.5, 0.5], [-1.0, 1.0]])
    np.testing.assert_allclose(re([0.2, 0.3]), base([1.1, 0.3]))
