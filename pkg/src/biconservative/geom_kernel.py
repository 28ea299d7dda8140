"""Pointwise extrinsic geometry of an immersed hypersurface.

Every quantity is obtained by Taylor-propagating the chart at a point and
running the curvature pipeline (metric, normal, second fundamental form,
shape operator, mean curvature) in jet arithmetic, so derivatives of ``h`` or
``N`` come out of the same pipeline rather than from sampling.

Conventions: ``A = g^{-1} II`` with ``II_ij = <X_ij, N>``, so that
``D_i N = -A^j_i X_j``; ``h = trace(A) / n`` and ``H = h N``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional

import numpy as np
import scipy.linalg

from . import jets as J
from .charts import Chart
from .errors import DegenerateMetricError, DomainError, FrameAmbiguityError

MAX_JET_ORDER = 4
EPS_GRAM = 1e-10
CLUSTER_RTOL = 1e-7


def jet(chart: Chart, p, order: int = 2) -> J.Jet:
    """Taylor jet of the chart position at ``p`` to the given order (<= 4)."""
    if order > MAX_JET_ORDER or order < 0:
        raise ValueError(f"jet order must be in 0..{MAX_JET_ORDER}, got {order}")
    p = chart.check(p)
    xs = J.variables(p, order)
    out = chart.func(xs)
    if not isinstance(out, J.Jet):
        out = J.Jet.constant(out, chart.dim_domain, order)
    return out


def _reference_normal(jac: np.ndarray, hint) -> np.ndarray:
    # unit vector spanning the orthogonal complement of the tangent space
    u, s, _ = np.linalg.svd(jac, full_matrices=True)
    r = u[:, -1]
    if hint is not None:
        if np.dot(r, hint) < 0:
            r = -r
    elif np.linalg.det(np.column_stack([jac, r])) < 0:
        r = -r
    return r


class LocalGeometry:
    """Jet-level curvature pipeline around one point of a hypersurface chart.

    Attributes hold jets whose order drops with each differentiation:
    ``X`` has the requested order K, the metric and normal K-1, ``II``,
    ``A`` and ``h`` K-2.
    """

    def __init__(self, chart: Chart, p, order: int = 4):
        if chart.dim_ambient != chart.dim_domain + 1:
            raise ValueError(f"{chart.name} is not a hypersurface chart")
        self.chart = chart
        self.p = chart.check(p)
        self.n = n = chart.dim_domain
        self.X = jet(chart, self.p, order)
        self.dX = [self.X.d(i) for i in range(n)]
        jac = J.stack(self.dX, axis=-1)  # (n+1, n)
        self.jac = jac
        g = J.stack([J.stack([(self.dX[i] * self.dX[j]).sum() for j in range(n)]) for i in range(n)])
        self.g = g
        g0 = g.value
        det0 = np.linalg.det(g0)
        if not det0 > EPS_GRAM:
            raise DegenerateMetricError(f"{chart.name}: det g = {det0:.3e} at {self.p.tolist()}")
        self.g_inv = J.inv(g)
        self.det_g = J.det(g)
        self.sqrt_det = J.sqrt(self.det_g)

        hint = chart.normal_hint(self.p) if chart.normal_hint is not None else None
        r = _reference_normal(jac.value, hint)
        # project r off the tangent space: r - J g^{-1} J^T r
        coeff = J.matmul(self.g_inv, J.matmul(r, jac))
        nu = J.Jet.constant(r, n, jac.order) - J.matmul(jac, coeff)
        self.N = nu / J.sqrt((nu * nu).sum())

        if order >= 2:
            N = self.N.truncate(order - 2)
            self.II = J.stack(
                [J.stack([(self.dX[i].d(j) * N).sum() for j in range(n)]) for i in range(n)]
            )
            self.A = J.matmul(self.g_inv.truncate(order - 2), self.II)
            self.h = sum(self.A[i, i] for i in range(n)) / n
            self.A2 = (self.A * self.A.T).sum()

    # differential operators ----------------------------------------------

    def laplacian(self, f: J.Jet) -> J.Jet:
        """Laplace-Beltrami (1/sqrt|g|) d_j (sqrt|g| g^{ij} f_i) as a jet."""
        n = self.n
        df = f.grad()  # (..., n)
        order = min(df.order, self.g_inv.order)
        w = self.sqrt_det.truncate(order)
        ginv = self.g_inv.truncate(order)
        df = df.truncate(order)
        if len(f.shape) == 0:
            flux = J.matmul(ginv, df) * w
            div = sum(flux[j].d(j) for j in range(n))
        else:
            # componentwise on vector-valued f: df has shape (m, n)
            flux = J.matmul(df, ginv) * w
            div = sum(flux[:, j].d(j) for j in range(n))
        return div / w.truncate(div.order)

    def gradient(self, f: J.Jet) -> J.Jet:
        """Ambient gradient vector X_i g^{ij} f_j."""
        df = f.grad()
        coeff = J.matmul(self.g_inv.truncate(df.order), df)
        return J.matmul(self.jac.truncate(coeff.order), coeff)


def geometry(chart: Chart, p, order: int = 4) -> LocalGeometry:
    return LocalGeometry(chart, p, order)


# pointwise data ---------------------------------------------------------------


@dataclass(frozen=True)
class CurvatureData:
    g: np.ndarray
    g_inv: np.ndarray
    det_g: float
    sqrt_det: float
    II: np.ndarray
    A: np.ndarray
    lambdas: np.ndarray
    frames: np.ndarray  # columns: g-orthonormal principal directions (coordinate basis)
    h: float
    N: np.ndarray
    A2: float
    jac: np.ndarray = field(repr=False)
    convention: str = ""

    @property
    def n(self) -> int:
        return self.g.shape[0]

    def ambient_frames(self) -> np.ndarray:
        """Principal directions pushed forward to unit ambient vectors (columns)."""
        return self.jac @ self.frames


def principal(II: np.ndarray, g: np.ndarray):
    """Principal curvatures (ascending) and g-orthonormal directions."""
    lam, vecs = scipy.linalg.eigh(0.5 * (II + II.T), 0.5 * (g + g.T))
    return lam, vecs


def eigen_blocks(lambdas, rtol: float = CLUSTER_RTOL) -> list[list[int]]:
    """Group sorted eigenvalues into multiplicity blocks."""
    lambdas = np.asarray(lambdas)
    tol = rtol * (1.0 + np.max(np.abs(lambdas)))
    blocks = [[0]]
    for k in range(1, len(lambdas)):
        if abs(lambdas[k] - lambdas[blocks[-1][-1]]) <= tol:
            blocks[-1].append(k)
        else:
            blocks.append([k])
    return blocks


def curvature_from_geometry(geo: LocalGeometry) -> CurvatureData:
    g = geo.g.value
    II = geo.II.value
    lam, frames = principal(II, g)
    A = geo.A.value
    return CurvatureData(
        g=g,
        g_inv=geo.g_inv.value,
        det_g=float(geo.det_g.value),
        sqrt_det=float(geo.sqrt_det.value),
        II=II,
        A=A,
        lambdas=lam,
        frames=frames,
        h=float(np.trace(A)) / geo.n,
        N=geo.N.value,
        A2=float(geo.A2.value),
        jac=geo.jac.value,
        convention=geo.chart.convention,
    )


def curvature_at(chart: Chart, p) -> CurvatureData:
    return curvature_from_geometry(LocalGeometry(chart, p, order=2))


def _as_field(chart: Chart, f) -> Callable:
    if callable(f):
        return f
    raise TypeError("scalar field must be a callable of the chart coordinates")


def laplace_beltrami(chart: Chart, f: Callable, p) -> float:
    """Laplace-Beltrami of the scalar field ``f(xs)`` at ``p``.

    ``f`` is evaluated on jets, so it must use :mod:`biconservative.jets`
    operations (or plain arithmetic).
    """
    geo = LocalGeometry(chart, p, order=2)
    fj = _as_field(chart, f)(J.variables(geo.p, 2))
    if not isinstance(fj, J.Jet):
        return 0.0
    return float(geo.laplacian(fj).value)


def position_laplacian(chart: Chart, p) -> np.ndarray:
    """Componentwise Laplace-Beltrami of the position vector."""
    geo = LocalGeometry(chart, p, order=2)
    return geo.laplacian(geo.X).value


def bilaplacian(chart: Chart, f: Callable, p) -> float:
    """Laplace-Beltrami applied twice to the scalar field ``f(xs)``."""
    geo = LocalGeometry(chart, p, order=4)
    fj = _as_field(chart, f)(J.variables(geo.p, 4))
    if not isinstance(fj, J.Jet):
        return 0.0
    return float(geo.laplacian(geo.laplacian(fj)).value)


def position_bilaplacian(chart: Chart, p) -> np.ndarray:
    """Componentwise Delta^2 X, i.e. n Delta H."""
    geo = LocalGeometry(chart, p, order=4)
    return geo.laplacian(geo.laplacian(geo.X)).value


def beltrami_defect(chart: Chart, p) -> float:
    """|Delta X - n h N|, which vanishes for every immersion."""
    geo = LocalGeometry(chart, p, order=2)
    lap = geo.laplacian(geo.X).value
    return float(np.linalg.norm(lap - geo.n * geo.h.value * geo.N.value))


class DeltaHSplit(NamedTuple):
    tangential: np.ndarray  # ambient vector X_*(2A + nh I) grad h
    normal: float  # Delta h - |A|^2 h
    convention: str


def delta_H_split(chart: Chart, p) -> DeltaHSplit:
    """Tangential and normal parts of the bitension of ``H = hN``.

    The tangential part is reported as ``(2A + nh I) grad h``, the negative
    of ``(Delta H)^T``; both vanish on the same set.
    """
    geo = LocalGeometry(chart, p, order=4)
    n = geo.n
    h = geo.h
    grad_coords = geo.g_inv.value @ h.grad().value
    A = geo.A.value
    tang = geo.jac.value @ ((2.0 * A + n * h.value * np.eye(n)) @ grad_coords)
    normal = geo.laplacian(h).value - geo.A2.value * h.value
    return DeltaHSplit(tang, float(normal), chart.convention)


def delta_H_direct(chart: Chart, p) -> tuple[np.ndarray, float]:
    """(Delta H) computed as Delta(hN) then split by projection onto (T, N)."""
    geo = LocalGeometry(chart, p, order=4)
    hN = geo.h * geo.N.truncate(geo.h.order)
    lap = geo.laplacian(hN).value
    N = geo.N.value
    normal = float(lap @ N)
    return lap - normal * N, normal


def eigenframe_condition(chart: Chart, p, rtol: float = CLUSTER_RTOL) -> np.ndarray:
    """Per principal direction: min(|e_i h|, |n h + 2 lambda_i|)."""
    geo = LocalGeometry(chart, p, order=4)
    n = geo.n
    lam, frames = principal(geo.II.value, geo.g.value)
    _check_clusters(lam, rtol)
    dh = geo.h.grad().value
    h = geo.h.value
    return np.array([min(abs(frames[:, i] @ dh), abs(n * h + 2.0 * lam[i])) for i in range(n)])


def _check_clusters(lam, rtol):
    # near-collisions just outside the block tolerance make frames unreliable
    tol = rtol * (1.0 + np.max(np.abs(lam)))
    gaps = np.diff(lam)
    bad = (gaps > tol) & (gaps < 1e3 * tol)
    if np.any(bad):
        raise FrameAmbiguityError(f"eigenvalue gap {gaps[bad].min():.2e} near clustering tolerance {tol:.2e}")


def normal_laplacian_defect(chart: Chart, p) -> float:
    """|Delta N + |A|^2 N + grad(n h)|."""
    geo = LocalGeometry(chart, p, order=4)
    lapN = geo.laplacian(geo.N).value
    grad_trace = geo.gradient(geo.h * float(geo.n)).value
    rhs = -geo.A2.value * geo.N.value - grad_trace
    return float(np.linalg.norm(lapN - rhs))


normal_laplacian_check = normal_laplacian_defect


# residual reports -----------------------------------------------------------


@dataclass(frozen=True)
class ResidualReport:
    name: str
    samples: int
    max_abs: float
    mean_abs: float
    tolerance: float
    verdict: str
    worst_point: tuple
    note: str = ""
    min_abs: float = float("nan")

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    @classmethod
    def from_values(cls, name, values, points, tolerance, note="", lower_bound=False):
        """Reduce residual samples; ``lower_bound`` flips the test to min > tol."""
        vals = np.abs(np.asarray(values, dtype=float)).ravel()
        if vals.size == 0:
            raise ValueError(f"{name}: no samples")
        pts = [tuple(float(c) for c in np.atleast_1d(q)) for q in points]
        if lower_bound:
            k = int(np.argmin(vals))
            ok = bool(vals[k] > tolerance)
        else:
            k = int(np.argmax(vals))
            ok = bool(vals[k] <= tolerance)
        return cls(
            name=name,
            samples=int(vals.size),
            max_abs=float(vals.max()),
            mean_abs=float(vals.mean()),
            tolerance=float(tolerance),
            verdict="pass" if ok else "fail",
            worst_point=pts[k] if k < len(pts) else (),
            note=note,
            min_abs=float(vals.min()),
        )

    def line(self) -> str:
        return (
            f"{self.name}: {self.verdict.upper()} max={self.max_abs:.3e} min={self.min_abs:.3e} "
            f"mean={self.mean_abs:.3e} tol={self.tolerance:.1e} n={self.samples}"
        )

    def to_text(self) -> str:
        """Line-oriented ``key: value`` block with full-precision floats."""
        rows = [
            ("suite", self.name),
            ("verdict", self.verdict),
            ("samples", str(self.samples)),
            ("max_abs", f"{self.max_abs:.17g}"),
            ("min_abs", f"{self.min_abs:.17g}"),
            ("mean_abs", f"{self.mean_abs:.17g}"),
            ("tolerance", f"{self.tolerance:.17g}"),
            ("worst_point", " ".join(f"{c:.17g}" for c in self.worst_point)),
        ]
        if self.note:
            rows.append(("note", self.note))
        return "\n".join(f"{k}: {v}" for k, v in rows)


def sample_residuals(name, chart: Chart, fn: Callable, points, tolerance) -> ResidualReport:
    values = []
    for q in points:
        v = fn(chart, q)
        values.append(np.linalg.norm(np.atleast_1d(v), ord=np.inf))
    return ResidualReport.from_values(name, values, points, tolerance)


__all__ = [
    "CurvatureData",
    "DeltaHSplit",
    "DomainError",
    "LocalGeometry",
    "ResidualReport",
    "beltrami_defect",
    "curvature_at",
    "delta_H_direct",
    "delta_H_split",
    "eigen_blocks",
    "eigenframe_condition",
    "jet",
    "laplace_beltrami",
    "normal_laplacian_check",
    "normal_laplacian_defect",
    "position_laplacian",
    "principal",
]
