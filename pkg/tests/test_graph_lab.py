import numpy as np
import pytest

from biconservative import geom_kernel as gk
from biconservative import graph_lab as gl
from biconservative import jets as J

FUNCTIONS = ["x1^3*x2 + 0.3*x2^2", "sin(x1)*cos(x2)", "exp(0.5*x1) - x2^2*x1"]


@pytest.mark.parametrize("u", FUNCTIONS)
def test_expansion_matches_composed_laplacians(u, rng):
    gc = gl.GraphChart(u, n=2, half=0.8)
    chart = gc.chart()
    for p in chart.sample(4, rng, inset=0.1):
        np.testing.assert_allclose(gl.position_bilaplacian_graph(gc, p), gk.position_bilaplacian(chart, p), atol=1e-6)


def test_scalar_bilaplacian_matches_kernel(rng):
    gc = gl.GraphChart("x1^2 + 0.2*x1*x2", n=2, half=0.8)
    f = lambda xs: xs[0] ** 3 * xs[1]
    for p in gc.chart().sample(3, rng, inset=0.1):
        assert gl.bilaplacian_scalar(gc, f, p) == pytest.approx(gk.bilaplacian(gc.chart(), f, p), abs=1e-9)


def test_flat_quartic():
    gc = gl.GraphChart("0*x1", n=2)
    assert gl.bilaplacian_scalar(gc, "x1^4", [0.1, 0.2]) == pytest.approx(24.0)


def test_affine_graph_has_zero_residuals():
    gc = gl.GraphChart("a*x1 + b*x2", n=2, params={"a": 1.3, "b": -0.4})
    p = [0.2, -0.3]
    assert gl.minimal_graph_residual(gc, p) == 0.0
    r = gl.biharmonic_graph_residuals(gc, p)
    assert r.max_abs <= 1e-14


def test_saddle_minimal_residual():
    gc = gl.GraphChart("x1^2 - x2^2", n=2, half=2.0)
    assert gl.minimal_graph_residual(gc, [1.0, 0.0]) == pytest.approx(-8.0)
    assert gl.minimal_graph_residual_2d(gc, [1.0, 0.0]) == pytest.approx(-8.0)
    # the divergence form has the same sign but a different normalization
    assert gl.minimal_graph_divergence(gc, [1.0, 0.0]) == pytest.approx(-8.0 / 5.0**1.5)


def test_scherk_minimal_implies_biharmonic(rng):
    gc = gl.scherk()
    for p in gc.chart().sample(10, rng, inset=0.05):
        assert abs(gl.minimal_graph_residual(gc, p)) <= 1e-12
        assert gl.biharmonic_graph_residuals(gc, p).max_abs <= 1e-5


def test_displayed_vertical_terms_are_incomplete():
    gc = gl.GraphChart(FUNCTIONS[0], n=2, half=0.8)
    p = [0.3, -0.2]
    full = gl.biharmonic_graph_residuals(gc, p).vertical
    assert abs(gl.vertical_as_displayed(gc, p) - full) > 0.1


def test_outside_domain_and_dimension_errors():
    gc = gl.GraphChart("x1", n=2, half=0.5)
    with pytest.raises(Exception):
        gc.jets([2.0, 0.0])
    with pytest.raises(ValueError):
        gl.GraphChart("x3", n=2)
