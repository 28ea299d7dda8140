import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from biconservative import charts
from biconservative import jets as J
from biconservative import verify as vf
from biconservative.errors import FrameAmbiguityError, NoRegularValueError
from conftest import evolved


def test_flat_christoffel_vanishes():
    om = vf.OrthoMetric.from_functions(lambda xs: [1.0, 1.0, 1.0], 3)
    assert np.all(vf.christoffel(om, [0.1, 0.2, 0.3]) == 0.0)


def test_polar_christoffel():
    om = vf.OrthoMetric.from_functions(lambda xs: [1.0, xs[0]], 2)
    G = vf.christoffel(om, [2.0, 0.3])
    assert G[1, 0, 1] == pytest.approx(0.5)
    assert G[1, 1, 0] == pytest.approx(0.5)
    assert G[0, 1, 1] == pytest.approx(-2.0)
    G[1, 0, 1] = G[1, 1, 0] = G[0, 1, 1] = 0.0
    assert np.all(G == 0.0)


@settings(max_examples=25, deadline=None)
@given(
    st.lists(st.floats(-1, 1), min_size=3, max_size=3),
    st.lists(st.floats(-0.5, 0.5), min_size=3, max_size=3),
)
def test_christoffel_matches_dense_formula(coef, p):
    a, b, c = coef

    def weights(xs):
        x, y, z = xs
        return [J.exp(a * x + 0.3 * y), 1.5 + b * J.sin(x * z), J.sqrt(2.0 + c * y * y + x)]

    om = vf.OrthoMetric.from_functions(weights, 3)
    G = vf.christoffel(om, p)
    np.testing.assert_allclose(G, vf.christoffel_dense(om, p), atol=1e-10)
    np.testing.assert_allclose(G, G.transpose(0, 2, 1), atol=0)
    i, j, k = 0, 1, 2
    assert G[i, j, k] == 0.0


def test_codazzi_constant_curvatures_exact():
    om = vf.OrthoMetric.from_functions(lambda xs: [2.0, 3.0], 2, lambdas=lambda xs: [0.5, -1.0])
    assert vf.codazzi_residual(om, [0.2, 0.1]) == 0.0


def test_codazzi_sphere_and_perturbed_control(rng):
    c = charts.sphere(2, 1.0)
    om = vf.OrthoMetric.from_chart(c)
    pts = c.sample(10, rng, inset=0.1)
    assert vf.codazzi_suite(om, pts).max_abs <= 1e-12
    bad = vf.codazzi_suite(om.perturbed(1e-3), pts)
    assert bad.verdict == "fail" and bad.max_abs > 1e-4


def test_codazzi_on_torus_chart(rng):
    c = charts.torus(2.0, 1.0)
    om = vf.OrthoMetric.from_chart(c)
    assert vf.codazzi_suite(om, c.sample(10, rng, inset=0.1)).max_abs <= 1e-10


@pytest.mark.parametrize("spec", ["sphere:n=3,r=2", "product:p=1,q=1,r1=1,r2=1", "cylinder:p=1,q=1,r=1"])
def test_codazzi_on_evolved(spec):
    ev = evolved(spec)
    (r,) = vf.run_suite("codazzi", ev)
    assert r.max_abs <= 1e-7
    (bad,) = vf.run_suite("codazzi", ev, perturb=1e-3)
    assert bad.max_abs > 1e-4


def test_non_curvature_coordinates_rejected():
    c = charts.reparametrize(charts.sphere(2, 1.0), lambda xs: [xs[0], xs[1] + xs[0]], [[0.3, 2.5], [-2.0, 2.0]])
    with pytest.raises(ValueError, match="not diagonal"):
        vf.OrthoMetric.from_chart(c).weight_jets([1.0, 0.2])


def test_fit_sphere_recovers_sphere_and_plane(rng):
    center = np.array([0.3, -1.0, 2.0, 0.5])
    basis = np.linalg.qr(rng.standard_normal((4, 3)))[0]
    dirs = rng.standard_normal((60, 3))
    dirs /= np.linalg.norm(dirs, axis=1)[:, None]
    pts = center + 1.7 * dirs @ basis.T
    fit = vf.fit_sphere(pts, 2)
    assert fit.kind == "sphere" and fit.radius == pytest.approx(1.7, rel=1e-12)
    np.testing.assert_allclose(fit.center, center, atol=1e-12)
    flat = vf.fit_sphere(rng.standard_normal((30, 2)) @ basis[:, :2].T, 2)
    assert flat.kind == "plane" and flat.rms <= 1e-14


@pytest.mark.parametrize("n,r", [(2, 1.0), (3, 2.0)])
def test_sphere_leaf_is_the_sphere(n, r):
    c = charts.sphere(n, r)
    leaf = vf.leaf_umbilic_check(c, tuple(range(n)), c.box.mean(axis=1))
    assert leaf.kind == "sphere"
    assert leaf.radius == pytest.approx(r, abs=1e-6)
    assert leaf.worst() <= 1e-10


def test_cylinder_flat_leaves_are_lines():
    c = charts.cylinder(1, 1, 1.0)
    q = c.box.mean(axis=1)
    with pytest.raises(ValueError, match="multiplicity"):
        vf.leaf_umbilic_check(c, (1,), q)
    leaf = vf.leaf_umbilic_check(c, (1,), q, min_multiplicity=1)
    assert leaf.kind == "plane" and leaf.fit_rms <= 1e-8


def test_incomplete_block_rejected():
    c = charts.cylinder(1, 1, 1.0)
    with pytest.raises(FrameAmbiguityError):
        vf.leaf_umbilic_check(c, (0, 1), c.box.mean(axis=1), min_multiplicity=1)


def test_product_leaves_are_round_spheres():
    ev = evolved("product:p=1,q=2,r1=1,r2=1")
    q = np.append(ev.seed.box.mean(axis=1), 0.4)
    leaf = vf.leaf_umbilic_check(ev.chart, (1, 2), q)
    assert leaf.kind == "sphere" and leaf.worst() <= 1e-5
    # the fitted sphere agrees with the leaf mean-curvature formula
    assert leaf.formula_vs_fit <= 1e-8


def test_level_set_suite_on_catenoidal():
    reports = vf.level_set_suite(evolved("sphere:n=3,r=1"))
    assert all(r.verdict in ("pass", "skipped") for r in reports)
    assert any("seed-curvatures" in r.name and r.verdict == "pass" for r in reports)


def test_level_set_rejects_cmc_chart():
    with pytest.raises(NoRegularValueError, match="no regular value"):
        vf.level_set_suite(charts.sphere(2, 1.0))


def test_level_outside_range():
    ev = evolved("sphere:n=2,r=1")
    with pytest.raises(Exception, match="not attained"):
        vf.level_for_value(ev, 10.0)


def test_bhh_plane_skipped_sphere_reported():
    assert vf.bhh_properness_check(charts.plane(2)).verdict == "skipped"
    r = vf.bhh_properness_check(charts.sphere(2, 1.0))
    # |A|^2 h = 2 on the unit sphere and Delta h = 0
    assert r.verdict == "pass" and r.min_abs == pytest.approx(2.0)


def test_bhh_on_evolved_exceeds_floor():
    r = vf.bhh_properness_check(evolved("sphere:n=2,r=1"))
    assert r.verdict == "pass" and r.min_abs > vf.BHH_FLOOR


def test_symmetry_and_structure_on_product():
    ev = evolved("product:p=1,q=1,r1=1,r2=1")
    assert vf.symmetry_check(ev).max_abs <= 1e-8
    for r in vf.structure_suite(ev, base_points=4):
        assert r.verdict == "pass", r.line()


def test_unknown_suite():
    with pytest.raises(ValueError, match="unknown suite"):
        vf.run_suite("nope", charts.plane(2))


def test_format_reports_and_aggregate():
    ok = vf.ResidualReport.from_values("a", [0.0], [[0.0]], 1.0)
    bad = vf.ResidualReport.from_values("b", [2.0], [[0.0]], 1.0)
    text = vf.format_reports([ok, bad])
    assert text.count("suite:") == 2
    assert vf.aggregate_verdict([ok]) and not vf.aggregate_verdict([ok, bad])
