"""Structural checks on constructed hypersurfaces, each reduced to residual reports.

The suites work on an :class:`~biconservative.bch_evolve.EvolvedChart` (and,
where it makes sense, on a plain :class:`~biconservative.charts.Chart`).
Every geometric quantity comes from the jet kernel; closed-form evolution
formulas appear only on the other side of a comparison.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy.optimize import brentq, least_squares

from . import jets as J
from .bch_evolve import EvolvedChart
from .charts import Chart
from .errors import DomainError, FrameAmbiguityError, NoRegularValueError
from .geom_kernel import (
    CLUSTER_RTOL,
    LocalGeometry,
    ResidualReport,
    delta_H_split,
    eigenframe_condition,
    principal,
)
from .rk45 import integrate

TOL_STRUCTURE = 1e-8
TOL_CODAZZI = 1e-7
TOL_LEAF = 1e-5
TOL_EIGENFRAME = 1e-6
TOL_VN = 1e-9
TOL_SYMMETRY = 1e-8
BHH_FLOOR = 1e-3
MAX_LEAF_POINTS = 200
ORTHO_RTOL = 1e-9


# orthogonal metrics and Christoffel symbols ---------------------------------------------


@dataclass(frozen=True)
class OrthoMetric:
    """Diagonal metric sum v_i^2 dx_i^2 with optional principal curvature functions.

    ``weights(p, order)`` and ``lambdas(p, order)`` return lists of ``n`` jets
    (or floats) of at least the requested order at the point ``p``.
    """

    n: int
    weights: Callable
    lambdas: Optional[Callable] = None
    name: str = ""

    def weight_jets(self, p, order: int = 1) -> list:
        p = np.asarray(p, dtype=float).ravel()
        ws = [_as_jet(w, self.n, order) for w in self.weights(p, order)]
        if len(ws) != self.n:
            raise ValueError(f"expected {self.n} weights, got {len(ws)}")
        bad = [i for i, w in enumerate(ws) if not w.value > 0]
        if bad:
            raise DomainError(f"{self.name}: weight v_{bad[0] + 1} not positive at {p.tolist()}")
        return ws

    def lambda_jets(self, p, order: int = 1) -> list:
        if self.lambdas is None:
            raise ValueError(f"{self.name}: no curvature functions attached")
        p = np.asarray(p, dtype=float).ravel()
        return [_as_jet(l, self.n, order) for l in self.lambdas(p, order)]

    @classmethod
    def from_functions(cls, weights: Callable, n: int, lambdas: Optional[Callable] = None, name: str = ""):
        """Build from functions of the coordinate list (jet-aware)."""

        def w(p, order):
            return list(weights(J.variables(p, order)))

        lam = None
        if lambdas is not None:

            def lam(p, order):
                return list(lambdas(J.variables(p, order)))

        return cls(n, w, lam, name)

    @classmethod
    def from_chart(cls, chart: Chart, name: Optional[str] = None):
        """Weights sqrt(g_ii) and curvatures II_ii / g_ii from the chart jets.

        The chart coordinates must be orthogonal curvature-line coordinates.
        """
        n = chart.dim_domain

        def w(p, order):
            geo = LocalGeometry(chart, p, order + 1)
            _check_diagonal(geo.g.value, "metric", chart.name, p)
            return [J.sqrt(geo.g[i, i]) for i in range(n)]

        def lam(p, order):
            geo = LocalGeometry(chart, p, order + 2)
            _check_diagonal(geo.II.value, "second fundamental form", chart.name, p, geo.g.value)
            return [geo.II[i, i] / geo.g[i, i].truncate(order) for i in range(n)]

        return cls(n, w, lam, name or chart.name)

    @classmethod
    def from_evolved(cls, ev: EvolvedChart):
        """Weights from the chart's jet metric, curvatures from the closed-form evolution."""
        base = cls.from_chart(ev.chart)

        def lam(p, order):
            xs = J.variables(p, order)
            return ev.principal_curvatures_jet(xs[-1])

        return cls(ev.n, base.weights, lam, ev.chart.name)

    def perturbed(self, eps: float = 1e-3, index: int = -1, coord: int = 0) -> "OrthoMetric":
        """Same metric with ``eps * x_coord`` added to one curvature function."""
        if self.lambdas is None:
            raise ValueError("nothing to perturb: no curvature functions")
        base = self.lambdas

        def lam(p, order):
            out = [_as_jet(l, self.n, order) for l in base(p, order)]
            xs = J.variables(p, order)
            out[index] = out[index] + eps * xs[coord]
            return out

        return OrthoMetric(self.n, self.weights, lam, f"{self.name}+{eps:g}*x{coord + 1}")


def _as_jet(x, nvars, order):
    return x if isinstance(x, J.Jet) else J.Jet.constant(float(x), nvars, order)


def _check_diagonal(mat, what, name, p, scale=None):
    d = np.abs(np.diag(mat if scale is None else scale))
    ref = np.sqrt(np.outer(d, d))
    off = np.abs(mat - np.diag(np.diag(mat)))
    if np.any(off > ORTHO_RTOL * (ref + 1.0)):
        raise ValueError(f"{name}: {what} is not diagonal at {np.asarray(p).tolist()}; coordinates are not curvature lines")


def christoffel(om: OrthoMetric, p) -> np.ndarray:
    """Gamma[i, j, k] = Gamma^i_{jk} of a diagonal metric from the closed forms."""
    n = om.n
    v = om.weight_jets(p, 1)
    v0 = np.array([w.value for w in v], dtype=float)
    dlog = np.array([[v[i].d(k).value / v0[i] for k in range(n)] for i in range(n)], dtype=float)
    G = np.zeros((n, n, n))
    for i in range(n):
        for k in range(n):
            G[i, i, k] = dlog[i, k]
            G[i, k, i] = dlog[i, k]
        for j in range(n):
            if j != i:
                G[i, j, j] = -dlog[j, i] * v0[j] ** 2 / v0[i] ** 2
    return G


def christoffel_dense(om: OrthoMetric, p) -> np.ndarray:
    """Gamma^i_{jk} = (1/2) g^{il}(g_{lj,k} + g_{lk,j} - g_{jk,l}) with full matrices."""
    n = om.n
    v = om.weight_jets(p, 1)
    g = np.zeros((n, n))
    D = np.zeros((n, n, n))  # D[a, b, c] = d_c g_ab
    for i in range(n):
        E = v[i] * v[i]
        g[i, i] = E.value
        for c in range(n):
            D[i, i, c] = E.d(c).value
    ginv = np.linalg.inv(g)
    T = D + D.transpose(0, 2, 1) - D.transpose(2, 0, 1)
    return 0.5 * np.einsum("il,ljk->ijk", ginv, T)


def codazzi_residual(om: OrthoMetric, p) -> float:
    """max over i != j of |lambda_i,j - (lambda_j - lambda_i) Gamma^i_ij|."""
    n = om.n
    lam = om.lambda_jets(p, 1)
    G = christoffel(om, p)
    worst = 0.0
    for i in range(n):
        for j in range(n):
            if i != j:
                r = lam[i].d(j).value - (lam[j].value - lam[i].value) * G[i, i, j]
                worst = max(worst, abs(float(r)))
    return worst


def codazzi_suite(om: OrthoMetric, points, tolerance: float = TOL_CODAZZI, name: str = "codazzi") -> ResidualReport:
    values = [codazzi_residual(om, q) for q in points]
    return ResidualReport.from_values(name, values, points, tolerance, note=om.name)


# leaf sampling and sphere fitting ---------------------------------------------------------


@dataclass(frozen=True)
class SphereFit:
    kind: str  # "sphere" or "plane"
    center: np.ndarray  # sphere center, or a point of the plane
    radius: float  # inf for planes
    dim: int  # leaf dimension m
    rms: float  # combined RMS defect
    off_hull: float  # RMS distance to the (m+1)- or m-dimensional affine hull


def fit_sphere(points, m: int, plane_rtol: float = 1e-7) -> SphereFit:
    """Fit a round m-sphere (or m-plane) to points in Euclidean space.

    Algebraic least squares for (center, radius) inside the (m+1)-dimensional
    affine hull, then one Gauss-Newton step on the geometric distances.
    """
    P = np.asarray(points, dtype=float)
    if P.shape[0] < m + 3:
        raise ValueError(f"need at least {m + 3} points to fit an {m}-sphere")
    mean = P.mean(axis=0)
    Q = P - mean
    _, s, Vt = np.linalg.svd(Q, full_matrices=False)
    if len(s) <= m or s[m] <= plane_rtol * s[0]:
        basis = Vt[:m]
        resid = Q - (Q @ basis.T) @ basis
        rms = float(np.sqrt(np.mean(np.sum(resid**2, axis=1))))
        return SphereFit("plane", mean, np.inf, m, rms, rms)
    basis = Vt[: m + 1]
    Y = Q @ basis.T
    off = Q - Y @ basis
    off_rms = float(np.sqrt(np.mean(np.sum(off**2, axis=1))))
    A = np.hstack([2.0 * Y, np.ones((len(Y), 1))])
    b = np.sum(Y**2, axis=1)
    sol, *_ = np.linalg.lstsq(A, b, rcond=None)
    c, d = sol[:-1], sol[-1]
    rho = float(np.sqrt(d + c @ c))
    diff = Y - c
    dist = np.linalg.norm(diff, axis=1)
    r = dist - rho
    Jm = np.hstack([-diff / dist[:, None], -np.ones((len(Y), 1))])
    step, *_ = np.linalg.lstsq(Jm, -r, rcond=None)
    c = c + step[:-1]
    rho = float(rho + step[-1])
    radial = np.linalg.norm(Y - c, axis=1) - rho
    radial_rms = float(np.sqrt(np.mean(radial**2)))
    return SphereFit("sphere", mean + c @ basis, rho, m, float(np.hypot(radial_rms, off_rms)), off_rms)


def _coordinate_line(chart: Chart, q0, axis: int, arc: float, count: int) -> list:
    """Points at equal arc-length spacing along the ``axis`` coordinate line through q0."""
    n = chart.dim_domain

    def fun(t, q):
        X = chart.func(J.variables(q, 1))
        v = float(np.linalg.norm(X.d(axis).value))
        out = np.zeros(n)
        out[axis] = 1.0 / v
        return out

    def admissible(t, q):
        return chart.contains(q)

    fwd = integrate(fun, 0.0, q0, arc, rtol=1e-11, atol=1e-12, admissible=admissible)
    bwd = integrate(fun, 0.0, q0, -arc, rtol=1e-11, atol=1e-12, admissible=admissible)
    reach = min(fwd.t[-1], -bwd.t[0])
    if reach <= 0:
        raise DomainError(f"{chart.name}: leaf sampling cannot leave {np.asarray(q0).tolist()}")
    out = []
    for t in np.linspace(-reach, reach, count):
        traj = fwd if t >= 0 else bwd
        out.append(np.asarray(traj(t)))
    return out


def sample_leaf(chart: Chart, block: Sequence[int], p, arc: float = 0.3, per_axis: Optional[int] = None) -> np.ndarray:
    """Chart coordinates of a net on the leaf through p spanned by the ``block`` coordinates."""
    m = len(block)
    if per_axis is None:
        per_axis = max(5, int(np.floor(MAX_LEAF_POINTS ** (1.0 / m))))
        per_axis = min(per_axis, 41)
    pts = [np.asarray(p, dtype=float)]
    for axis in block:
        pts = [q for base in pts for q in _coordinate_line(chart, base, axis, arc, per_axis)]
    return np.array(pts)


@dataclass(frozen=True)
class LeafReport:
    block: tuple
    multiplicity: int
    lam: float
    kind: str
    radius: float
    center: np.ndarray
    fit_rms: float
    umbilic_defect: float
    formula_vs_fit: float
    formula_vs_direct: float
    points: int

    def worst(self) -> float:
        return max(self.fit_rms, self.umbilic_defect, self.formula_vs_fit, self.formula_vs_direct)


def _leaf_normal_projector(jac, block):
    T = jac[:, list(block)]
    q, _ = np.linalg.qr(T)
    return np.eye(jac.shape[0]) - q @ q.T


def _leaf_data(geo: LocalGeometry, block):
    """Direct leaf second fundamental form pieces at the geometry's base point."""
    jac = geo.jac.value
    g = geo.g.value
    P = _leaf_normal_projector(jac, block)
    m = len(block)
    X2 = {(a, b): P @ geo.dX[a].d(b).value for a in block for b in block}
    H = sum(X2[(a, a)] / g[a, a] for a in block) / m
    defect = max(float(np.linalg.norm(X2[(a, b)] - g[a, b] * H)) for a in block for b in block)
    return H, defect


def leaf_mean_curvature_formula(geo: LocalGeometry, block) -> np.ndarray:
    """Leaf mean-curvature vector sum_k (e_k lam)/(lam - lam_k) e_k + lam N.

    ``e_k`` runs over unit principal directions outside the block and
    ``e_k lam`` is the derivative of the block curvature along ``e_k``.
    Requires principal coordinates and ``geo`` of order >= 3.
    """
    n = geo.n
    b = block[0]
    lam_b = geo.II[b, b] / geo.g[b, b].truncate(geo.II.order)
    lam = float(lam_b.value)
    g = geo.g.value
    II = geo.II.value
    jac = geo.jac.value
    H = lam * geo.N.value
    for k in range(n):
        if k in block:
            continue
        vk = np.sqrt(g[k, k])
        lam_k = II[k, k] / g[k, k]
        ek = jac[:, k] / vk
        H = H + (lam_b.d(k).value / vk) / (lam - lam_k) * ek
    return H


def leaf_umbilic_check(
    chart: Chart,
    block: Sequence[int],
    p,
    arc: float = 0.3,
    per_axis: Optional[int] = None,
    min_multiplicity: int = 2,
    defect_points: int = 25,
) -> LeafReport:
    """Sample the curvature leaf of ``block`` through p, test umbilicity and fit a sphere.

    ``block`` lists the chart coordinates spanning one principal-curvature
    eigenspace; chart coordinates must be curvature lines.
    """
    block = tuple(sorted(int(b) for b in block))
    m = len(block)
    if m < min_multiplicity:
        raise ValueError(f"block multiplicity {m} < {min_multiplicity}")
    geo = LocalGeometry(chart, p, order=3)
    g, II = geo.g.value, geo.II.value
    _check_diagonal(g, "metric", chart.name, p)
    _check_diagonal(II, "second fundamental form", chart.name, p, g)
    lam = np.diag(II) / np.diag(g)
    tol = CLUSTER_RTOL * (1.0 + np.max(np.abs(lam)))
    inside = lam[list(block)]
    if np.ptp(inside) > tol:
        raise FrameAmbiguityError(f"coordinates {block} do not share one principal curvature: {inside}")
    outside = [k for k in range(geo.n) if k not in block]
    if any(abs(lam[k] - inside[0]) <= tol for k in outside):
        raise FrameAmbiguityError(f"block {block} is not a full eigenspace at {np.asarray(p).tolist()}")

    coords = sample_leaf(chart, block, geo.p, arc, per_axis)
    amb = np.array([chart(q) for q in coords])
    fit = fit_sphere(amb, m)

    H_formula = leaf_mean_curvature_formula(geo, block)
    H_direct, _ = _leaf_data(geo, block)
    if fit.kind == "sphere":
        H_fit = (fit.center - geo.X.value) / fit.radius**2
    else:
        H_fit = np.zeros_like(H_formula)

    stride = max(1, len(coords) // defect_points)
    defect = 0.0
    for q in coords[::stride]:
        _, d = _leaf_data(LocalGeometry(chart, q, order=2), block)
        defect = max(defect, d)
    return LeafReport(
        block=block,
        multiplicity=m,
        lam=float(inside.mean()),
        kind=fit.kind,
        radius=fit.radius,
        center=fit.center,
        fit_rms=fit.rms,
        umbilic_defect=defect,
        formula_vs_fit=float(np.linalg.norm(H_formula - H_fit)),
        formula_vs_direct=float(np.linalg.norm(H_formula - H_direct)),
        points=len(coords),
    )


# level sets of h -------------------------------------------------------------------------


def _validity_half(ev: EvolvedChart) -> float:
    lo, hi = ev.profile.validity
    return min(-lo, hi)


def level_for_value(ev: EvolvedChart, t: float, frac: float = 0.999) -> float:
    """Smallest x_n >= 0 with h(x_n) = t (closed-form h, root refined by Brent)."""
    top = frac * _validity_half(ev)
    xs = np.linspace(0.0, top, 401)
    hs = np.array([ev.mean_curvature(x) for x in xs]) - t
    if abs(hs[0]) <= 1e-13 * (1.0 + abs(t)):
        return 0.0
    sign_change = np.nonzero(np.sign(hs[:-1]) * np.sign(hs[1:]) <= 0)[0]
    if sign_change.size == 0:
        raise DomainError(f"h-value {t} is not attained on x_n in [0, {top:.6g}]")
    k = int(sign_change[0])
    return float(brentq(lambda x: ev.mean_curvature(x) - t, xs[k], xs[k + 1], xtol=1e-15, rtol=1e-15))


def _seed_points(ev: EvolvedChart, count: int, rng, inset: float = 0.05) -> np.ndarray:
    return ev.seed.Y.sample(count, rng, inset=inset)


def _critical_direction(geo: LocalGeometry) -> np.ndarray:
    v = geo.jac.value[:, -1]
    return v / np.linalg.norm(v)


def level_set_suite(
    target: Union[EvolvedChart, Chart],
    t_values: Optional[Sequence[float]] = None,
    samples: int = 12,
    rng_seed: int = 0,
    tolerance: float = TOL_STRUCTURE,
) -> list[ResidualReport]:
    """Per h-level: h spread, curvature spread, normal-bundle flatness, gradient direction."""
    if isinstance(target, Chart):
        pts = target.sample(samples, np.random.default_rng(rng_seed), inset=0.05)
        grads = [np.linalg.norm(LocalGeometry(target, q, 3).h.grad().value) for q in pts]
        if max(grads) < 1e-10:
            raise NoRegularValueError(f"{target.name}: no regular value of h (h is constant)")
        raise TypeError("level-set suite needs an EvolvedChart for non-constant h")
    ev = target
    half = _validity_half(ev)
    if t_values is None:
        t_values = [ev.mean_curvature(x) for x in np.linspace(0.0, 0.8 * half, 5)]
    rng = np.random.default_rng(rng_seed)
    reports = []
    for t in t_values:
        xn = level_for_value(ev, float(t))
        seeds = _seed_points(ev, samples, rng)
        pts = np.hstack([seeds, np.full((samples, 1), xn)])
        lam_n = ev.principal_curvatures(xn)[-1]
        hs, lams, flat, direction = [], [], [], []
        critical = False
        for q in pts:
            geo = LocalGeometry(ev.chart, q, order=3)
            hs.append(float(geo.h.value))
            lams.append(principal(geo.II.value, geo.g.value)[0])
            g = geo.g.value
            w = np.linalg.solve(g, geo.h.grad().value)  # coordinate gradient of h
            grad_norm = float(np.sqrt(w @ g @ w))
            jac = geo.jac.value
            if grad_norm <= 1e-9 * (1.0 + abs(geo.h.value)):
                critical = True
                en = _critical_direction(geo)
            else:
                en = jac @ w / grad_norm
                r = geo.A.value @ w - lam_n * w
                direction.append(float(np.sqrt(r @ g @ r)) / grad_norm)
            # orthonormal basis of the level-set tangent space inside T Sigma
            U, _, _ = np.linalg.svd(jac - np.outer(en, en @ jac), full_matrices=False)
            basis = U[:, : geo.n - 1]
            dN = np.stack([geo.N.d(j).value for j in range(geo.n)], axis=-1)
            coef = np.linalg.lstsq(jac, basis, rcond=None)[0]
            flat.append(float(np.max(np.abs(en @ (dN @ coef)))))
        lams = np.array(lams)
        tag = f"level-set[t={t:.10g},x_n={xn:.10g}]"
        reports.append(
            ResidualReport.from_values(f"{tag} h-spread", np.array(hs) - t, pts, tolerance, note="|h - t| on U_t")
        )
        reports.append(
            ResidualReport.from_values(
                f"{tag} curvature-spread", np.max(np.abs(lams - lams.mean(axis=0)), axis=1), pts, tolerance
            )
        )
        reports.append(ResidualReport.from_values(f"{tag} flatness", flat, pts, tolerance))
        if critical and not direction:
            reports.append(
                ResidualReport(
                    name=f"{tag} grad-direction",
                    samples=0,
                    max_abs=0.0,
                    mean_abs=0.0,
                    tolerance=tolerance,
                    verdict="skipped",
                    worst_point=(),
                    note="grad h vanishes on this level (even profile, critical level); e_n taken along the x_n line",
                )
            )
        else:
            reports.append(ResidualReport.from_values(f"{tag} grad-direction", direction, pts, tolerance))
        if xn == 0.0:
            lam0 = np.sort(ev.seed.lam0)
            rest = []
            for row in lams:
                k = int(np.argmin(np.abs(row - lam_n)))
                rest.append(np.max(np.abs(np.sort(np.delete(row, k)) - lam0)))
            reports.append(
                ResidualReport.from_values(f"{tag} seed-curvatures", rest, pts, 1e-7, note="recovers lambda0 at x_n = 0")
            )
    return reports


# properness: not biharmonic ------------------------------------------------------------


def _skipped(name, note, tolerance=0.0) -> ResidualReport:
    return ResidualReport(name, 0, 0.0, 0.0, tolerance, "skipped", (), note)


def bhh_grid(ev: EvolvedChart, xn_half: float = 0.5, per_level: int = 6, levels: int = 11, rng_seed: int = 0):
    a = min(xn_half, 0.9 * _validity_half(ev))
    seeds = _seed_points(ev, per_level, np.random.default_rng(rng_seed))
    return np.array([np.append(s, x) for x in np.linspace(-a, a, levels) for s in seeds])


def bhh_properness_check(
    target: Union[EvolvedChart, Chart],
    floor: float = BHH_FLOOR,
    points=None,
    xn_half: float = 0.5,
) -> ResidualReport:
    """Minimum of |Delta h - |A|^2 h| over a grid must exceed ``floor``.

    A proper biconservative hypersurface that also had a vanishing normal
    part would be biharmonic; the report passes when it is bounded away
    from zero on the grid.
    """
    name = "bhh"
    if isinstance(target, Chart):
        chart = target
        pts = chart.sample(30, np.random.default_rng(0), inset=0.05) if points is None else points
        hs = [abs(float(LocalGeometry(chart, q, 2).h.value)) for q in pts]
        if max(hs) < 1e-12:
            return _skipped(name, "h vanishes: minimal, not proper", floor)
        values = [delta_H_split(chart, q).normal for q in pts]
        return ResidualReport.from_values(name, values, pts, floor, note="input is not an evolved chart", lower_bound=True)
    ev = target
    pts = bhh_grid(ev, xn_half) if points is None else np.asarray(points)
    pre = max(float(np.max(eigenframe_condition(ev.chart, q))) for q in pts)
    if pre > TOL_EIGENFRAME:
        r = ResidualReport.from_values(name, [pre], [pts[0]], TOL_EIGENFRAME)
        return ResidualReport(name, r.samples, r.max_abs, r.mean_abs, r.tolerance, "fail", r.worst_point,
                              f"precondition failed: eigenframe residual {pre:.3e}", r.min_abs)
    values = [delta_H_split(ev.chart, q).normal for q in pts]
    return ResidualReport.from_values(
        name, values, pts, floor, note="normal part bounded away from 0: not biharmonic", lower_bound=True
    )


# eigenframe suite ----------------------------------------------------------------------------


def eigenframe_grid(ev: EvolvedChart, coverage: float = 0.8, levels: int = 9, per_level: int = 4, rng_seed: int = 0):
    a = coverage * _validity_half(ev)
    seeds = _seed_points(ev, per_level, np.random.default_rng(rng_seed))
    return np.array([np.append(s, x) for x in np.linspace(-a, a, levels) for s in seeds])


def eigenframe_suite(target: Union[EvolvedChart, Chart], points=None, tolerance: float = TOL_EIGENFRAME) -> list:
    if isinstance(target, EvolvedChart):
        chart = target.chart
        pts = eigenframe_grid(target) if points is None else points
    else:
        chart = target
        pts = chart.sample(30, np.random.default_rng(0), inset=0.05) if points is None else points
    values = []
    for q in pts:
        try:
            values.append(float(np.max(eigenframe_condition(chart, q))))
        except FrameAmbiguityError:
            values.append(np.inf)
    reports = [ResidualReport.from_values("eigenframe", values, pts, tolerance)]
    if isinstance(target, EvolvedChart):
        ident = []
        for q in pts:
            lam = target.principal_curvatures(q[-1])
            geo = LocalGeometry(chart, q, 2)
            k = target.n - 1
            lam_n = float(geo.II.value[k, k] / geo.g.value[k, k])  # X_,n is principal
            ident.append(
                max(abs(lam[:-1].sum() + 3 * lam[-1]), abs(target.n * float(geo.h.value) + 2 * lam_n))
            )
        reports.append(
            ResidualReport.from_values(
                "bch-identity", ident, pts, tolerance, note="max of |n h + 2 lambda_n| (kernel) and |sum lambda_i + 3 lambda_n|"
            )
        )
    return reports


# symmetry extension ---------------------------------------------------------------------------


def project_to_chart(chart: Chart, target_point, starts) -> tuple[np.ndarray, float]:
    """Chart coordinates closest to an ambient point (least squares within the box)."""
    target_point = np.asarray(target_point, dtype=float)
    best = min(starts, key=lambda q: np.linalg.norm(chart(q) - target_point))

    def resid(q):
        return np.asarray(chart.func(list(q)), dtype=float) - target_point

    def jac(q):
        return chart.func(J.variables(q, 1)).grad().value

    lo, hi = chart.box[:, 0], chart.box[:, 1]
    sol = least_squares(resid, best, jac=jac, bounds=(lo, hi), xtol=1e-15, ftol=1e-15, gtol=1e-15, method="trf")
    q = sol.x
    return q, float(np.linalg.norm(resid(q)))


def symmetry_check(
    ev: EvolvedChart, samples: int = 10, rng_seed: int = 0, tolerance: float = TOL_SYMMETRY, max_tries: int = 200
) -> ResidualReport:
    """Seed isometries map the evolved hypersurface into itself."""
    rng = np.random.default_rng(rng_seed)
    chart = ev.chart
    per_axis = max(3, int(round(600 ** (1.0 / chart.dim_domain))))
    starts = chart.grid(per_axis, inset=0.02)
    lo, hi = chart.box[:, 0], chart.box[:, 1]
    values, pts = [], []
    tries = 0
    while len(values) < samples:
        tries += 1
        if tries > max_tries:
            raise RuntimeError("symmetry check could not find interior image points")
        Q = ev.seed.symmetry(rng)
        q = chart.sample(1, rng, inset=0.15)[0]
        image = Q @ chart(q)
        q_star, defect = project_to_chart(chart, image, starts)
        margin = 1e-6 * (hi - lo)
        if np.any(q_star <= lo + margin) or np.any(q_star >= hi - margin):
            continue  # image left the coordinate patch; draw again
        values.append(defect)
        pts.append(q)
    note = f"{ev.seed.symmetry_tag}; {tries - samples} draws discarded for leaving the patch"
    return ResidualReport.from_values("symmetry", values, pts, tolerance, note=note)


# structure of the x_n direction -----------------------------------------------------------------


def vn_slice_check(ev: EvolvedChart, levels: int = 5, per_level: int = 10, rng_seed: int = 0,
                   tolerance: float = TOL_VN) -> ResidualReport:
    """v_n = |X_,n| is constant on each x_n slice."""
    half = _validity_half(ev)
    rng = np.random.default_rng(rng_seed)
    values, pts = [], []
    for x in np.linspace(-0.8 * half, 0.8 * half, levels):
        seeds = _seed_points(ev, per_level, rng)
        qs = np.hstack([seeds, np.full((per_level, 1), x)])
        v = np.array([np.linalg.norm(ev.chart.func(J.variables(q, 1)).d(ev.n - 1).value) for q in qs])
        values.extend(v - v.mean())
        pts.extend(qs)
    return ResidualReport.from_values("v_n-slices", values, pts, tolerance)


def xn_line_checks(ev: EvolvedChart, base_points: int = 10, samples: int = 17, rng_seed: int = 0,
                   tolerance: float = TOL_STRUCTURE) -> list[ResidualReport]:
    """Geodesic curvature and plane deviation of the x_n coordinate curves."""
    half = _validity_half(ev)
    seeds = _seed_points(ev, base_points, np.random.default_rng(rng_seed))
    ts = np.linspace(-0.8 * half, 0.8 * half, samples)
    n = ev.n
    kappa, planar, pts = [], [], []
    for s in seeds:
        geo0 = LocalGeometry(ev.chart, np.append(s, 0.0), order=1)
        c0 = geo0.X.value
        frame, _ = np.linalg.qr(np.column_stack([geo0.jac.value[:, -1], geo0.N.value]))
        for t in ts:
            q = np.append(s, t)
            geo = LocalGeometry(ev.chart, q, order=2)
            jac, g = geo.jac.value, geo.g.value
            c1 = jac[:, -1]
            c2 = geo.dX[n - 1].d(n - 1).value
            tang = jac @ np.linalg.solve(g, jac.T @ c2)
            tang = tang - (tang @ c1) / (c1 @ c1) * c1
            kappa.append(float(np.linalg.norm(tang) / (c1 @ c1)))
            d = geo.X.value - c0
            planar.append(float(np.linalg.norm(d - frame @ (frame.T @ d))))
            pts.append(q)
    return [
        ResidualReport.from_values("x_n-lines geodesic", kappa, pts, tolerance),
        ResidualReport.from_values("x_n-lines planar", planar, pts, tolerance),
    ]


def gradient_curve(ev: EvolvedChart, s, x_start: float, length: float, tol: float = 1e-11):
    """Unit-speed integral curve of grad h from (s, x_start), oriented toward larger |x_n|."""
    chart = ev.chart
    q0 = np.append(np.asarray(s, dtype=float), x_start)
    half = _validity_half(ev)

    def direction(q):
        geo = LocalGeometry(chart, q, order=3)
        g = geo.g.value
        w = np.linalg.solve(g, geo.h.grad().value)
        return w / np.sqrt(w @ g @ w)

    sign = np.sign(direction(q0)[-1]) * np.sign(x_start if x_start != 0 else 1.0)

    def fun(t, q):
        return sign * direction(q)

    def admissible(t, q):
        return chart.contains(q) and abs(q[-1]) <= 0.95 * half

    return integrate(fun, 0.0, q0, length, rtol=tol, atol=tol, admissible=admissible)


def gradient_curve_checks(
    ev: EvolvedChart,
    base_points: int = 10,
    x_start: Optional[float] = None,
    length: Optional[float] = None,
    samples: int = 15,
    rng_seed: int = 0,
    tolerance: float = TOL_STRUCTURE,
) -> list[ResidualReport]:
    """Integral curves of grad h: they follow x_n lines, are planar and mutually congruent."""
    half = _validity_half(ev)
    x_start = 0.1 * half if x_start is None else x_start
    length = 0.5 * half if length is None else length
    seeds = _seed_points(ev, base_points, np.random.default_rng(rng_seed))
    curves, drift, planar, pts = [], [], [], []
    reach = np.inf
    trajs = []
    for s in seeds:
        tr = gradient_curve(ev, s, x_start, length)
        trajs.append(tr)
        reach = min(reach, tr.t[-1])
    taus = np.linspace(0.0, reach, samples)
    for s, tr in zip(seeds, trajs):
        qs = np.array([tr(t) for t in taus])
        drift.append(float(np.max(np.abs(qs[:, :-1] - s))))
        X = np.array([ev.chart(q) for q in qs])
        geo0 = LocalGeometry(ev.chart, qs[0], order=1)
        frame, _ = np.linalg.qr(np.column_stack([geo0.jac.value[:, -1], geo0.N.value]))
        # orient the in-plane frame consistently: first axis along the curve, second along N
        frame = frame * np.sign(np.array([frame[:, 0] @ geo0.jac.value[:, -1], frame[:, 1] @ geo0.N.value]))
        d = X - X[0]
        inplane = d @ frame
        planar.append(float(np.max(np.linalg.norm(d - inplane @ frame.T, axis=1))))
        curves.append(inplane)
        pts.append(qs[0])
    ref = curves[0]
    congruence = [float(np.max(np.abs(c - ref))) for c in curves]
    return [
        ResidualReport.from_values("grad-h curves follow x_n lines", drift, pts, tolerance),
        ResidualReport.from_values("grad-h curves planar", planar, pts, tolerance),
        ResidualReport.from_values("grad-h curves congruent", congruence, pts, tolerance),
    ]


def structure_suite(ev: EvolvedChart, base_points: int = 10) -> list[ResidualReport]:
    return (
        xn_line_checks(ev, base_points)
        + gradient_curve_checks(ev, base_points)
        + [vn_slice_check(ev)]
    )


# umbilic suite over the seed blocks ------------------------------------------------------------


def umbilic_suite(target: Union[EvolvedChart, Chart], tolerance: float = TOL_LEAF, levels=(-0.4, 0.0, 0.4)) -> list:
    reports = []
    if isinstance(target, EvolvedChart):
        ev = target
        half = _validity_half(ev)
        centre = ev.seed.box.mean(axis=1)
        for frac in levels:
            q = np.append(centre, frac * half)
            for block in ev.seed.blocks:
                try:
                    leaf = leaf_umbilic_check(ev.chart, block, q, min_multiplicity=1)
                except FrameAmbiguityError as exc:
                    # multiplicities jump here (e.g. equal seed curvatures at x_n = 0)
                    reports.append(_skipped(f"umbilic{list(block)}", f"x_n={q[-1]:.6g}: {exc}", tolerance))
                    continue
                reports.append(_leaf_report(leaf, q, tolerance))
    else:
        q = target.box.mean(axis=1)
        for block in curvature_blocks(target, q):
            leaf = leaf_umbilic_check(target, block, q, min_multiplicity=1)
            reports.append(_leaf_report(leaf, q, tolerance))
    return reports


def curvature_blocks(chart: Chart, p) -> list[tuple]:
    """Group curvature-line coordinates at p by equal principal curvature."""
    geo = LocalGeometry(chart, p, order=2)
    g, II = geo.g.value, geo.II.value
    _check_diagonal(g, "metric", chart.name, p)
    _check_diagonal(II, "second fundamental form", chart.name, p, g)
    lam = np.diag(II) / np.diag(g)
    tol = CLUSTER_RTOL * (1.0 + np.max(np.abs(lam)))
    blocks: list[list[int]] = []
    for i in np.argsort(lam, kind="stable"):
        if blocks and abs(lam[i] - lam[blocks[-1][0]]) <= tol:
            blocks[-1].append(int(i))
        else:
            blocks.append([int(i)])
    return [tuple(sorted(b)) for b in blocks]


def _leaf_report(leaf: LeafReport, q, tolerance) -> ResidualReport:
    vals = [leaf.fit_rms, leaf.umbilic_defect, leaf.formula_vs_fit, leaf.formula_vs_direct]
    note = f"kind={leaf.kind} m={leaf.multiplicity} lambda={leaf.lam:.10g} radius={leaf.radius:.10g} points={leaf.points}"
    return ResidualReport.from_values(f"umbilic{list(leaf.block)}", vals, [q] * 4, tolerance, note=note)


# suite registry ---------------------------------------------------------------------------------

SUITES = ("eigenframe", "level-set", "codazzi", "umbilic", "bhh", "symmetry", "structure")


def codazzi_points(target: Union[EvolvedChart, Chart], count: int = 20, rng_seed: int = 0):
    if isinstance(target, EvolvedChart):
        return eigenframe_grid(target, levels=5, per_level=max(1, count // 5), rng_seed=rng_seed)
    return target.sample(count, np.random.default_rng(rng_seed), inset=0.1)


def run_suite(name: str, target: Union[EvolvedChart, Chart], perturb: float = 0.0) -> list[ResidualReport]:
    """Run one named suite; ``perturb`` adds ``perturb * x_1`` to the last curvature (codazzi only)."""
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r}; expected one of {', '.join(SUITES)}")
    if name == "eigenframe":
        return eigenframe_suite(target)
    if name == "level-set":
        return level_set_suite(target)
    if name == "codazzi":
        om = OrthoMetric.from_evolved(target) if isinstance(target, EvolvedChart) else OrthoMetric.from_chart(target)
        if perturb:
            om = om.perturbed(perturb)
        return [codazzi_suite(om, codazzi_points(target))]
    if name == "umbilic":
        return umbilic_suite(target)
    if name == "bhh":
        return [bhh_properness_check(target)]
    if not isinstance(target, EvolvedChart):
        return [_skipped(name, "needs an evolved chart")]
    if name == "symmetry":
        return [symmetry_check(target)]
    return structure_suite(target)


def format_reports(reports: Sequence[ResidualReport]) -> str:
    """Structured text: one ``key: value`` block per report, blank-line separated."""
    return "\n\n".join(r.to_text() for r in reports) + "\n"


def aggregate_verdict(reports: Sequence[ResidualReport]) -> bool:
    return all(r.verdict != "fail" for r in reports)
