"""Graph hypersurfaces x -> (x, u(x)): minimal and biharmonic PDE residuals.

For a graph the induced metric is ``g_ij = delta_ij + u_i u_j`` with
``sqrt|g| = W = sqrt(1 + |grad u|^2)`` and inverse
``g^ij = delta_ij - u_i u_j / W^2``.  Writing

    B^l = (1/W) (W g^{kl})_{,k}     (= Delta x_l),
    L f = g^{kl} f_{,kl} + B^l f_{,l}   (= Delta f),

the bilaplacian of a function expands as
``Delta^2 f = g^{ij} (L f)_{,ij} + B^j (L f)_{,j}``.  The horizontal
components of ``Delta^2 X`` are ``Delta^2 x_m = g^{ij} B^m_{,ij} + B^j B^m_{,j}``
and the vertical one is ``Delta^2 u``.

Every quantity is assembled from the order-4 Taylor jet of ``u``; no
geometry from :mod:`geom_kernel` is used, so the kernel's composed
Laplacians are an independent check.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple, Union

import numpy as np

from . import jets as J
from .charts import Chart, graph
from .errors import DomainError
from .expr import Expression, parse

ORDER = 4


@dataclass(frozen=True)
class GraphJets:
    """Order-limited jets of the graph data at one point."""

    u: J.Jet  # order 4
    du: list  # u_,i, order 3
    W: J.Jet  # order 3
    g: np.ndarray  # object array of jets, order 3
    g_inv: np.ndarray  # object array of jets, order 3
    B: list  # B^l, order 2


class GraphChart:
    """Height function ``u`` on a box of R^n, evaluated through jets.

    Parameters
    ----------
    u : callable or str
        Function of a coordinate list built from jet-aware operations, or an
        expression string (see :mod:`biconservative.expr`).
    n : int
        Domain dimension.
    half : float
        Half-width of the domain box (ignored when ``box`` is given).
    """

    def __init__(self, u: Union[Callable, str], n: int = 2, half: float = 1.0, box=None, params=None, name=None):
        if isinstance(u, str):
            u = parse(u, n=n, params=params)
        if isinstance(u, Expression) and u.n != n:
            raise ValueError(f"expression uses {u.n} variables but n={n}")
        self.u = u
        self.n = n
        self.box = np.asarray(box if box is not None else [[-half, half]] * n, dtype=float).reshape(n, 2)
        self.name = name or (f"graph[{u.text}]" if isinstance(u, Expression) else "graph")

    def chart(self) -> Chart:
        c = graph(self.u, self.n, name=self.name)
        return Chart(c.name, c.dim_domain, c.dim_ambient, c.func, self.box, c.normal_hint, c.convention)

    def _point(self, p):
        p = np.asarray(p, dtype=float).ravel()
        if p.size != self.n:
            raise DomainError(f"expected {self.n} coordinates, got {p.size}")
        if np.any(p < self.box[:, 0] - 1e-12) or np.any(p > self.box[:, 1] + 1e-12):
            raise DomainError(f"point {p.tolist()} outside graph domain")
        return p

    def height_jet(self, p, order: int = ORDER) -> J.Jet:
        xs = J.variables(self._point(p), order)
        with np.errstate(all="ignore"):  # non-finite values are rejected below
            uj = self.u(xs)
        if not isinstance(uj, J.Jet):
            uj = J.Jet.constant(float(uj), self.n, order)
        if not np.all(np.isfinite(uj.c)):
            raise DomainError(f"{self.name}: height not finite at {np.asarray(p).tolist()}")
        return uj

    def jets(self, p, order: int = ORDER) -> GraphJets:
        n = self.n
        u = self.height_jet(p, order)
        du = [u.d(i) for i in range(n)]
        W2 = 1.0 + sum(d * d for d in du)
        W = J.sqrt(W2)
        g = np.empty((n, n), dtype=object)
        g_inv = np.empty((n, n), dtype=object)
        for i in range(n):
            for j in range(n):
                delta = 1.0 if i == j else 0.0
                g[i, j] = du[i] * du[j] + delta
                g_inv[i, j] = delta - du[i] * du[j] / W2
        B = []
        for l in range(n):
            div = sum((W * g_inv[k, l]).d(k) for k in range(n))
            B.append(div / W.truncate(div.order))
        return GraphJets(u, du, W, g, g_inv, B)

    def metric(self, p) -> tuple[np.ndarray, np.ndarray, float]:
        """(g, g_inv, W) at p from the closed forms."""
        gj = self.jets(p, 1)
        val = np.vectorize(lambda x: float(J.value(x)), otypes=[float])
        return val(gj.g), val(gj.g_inv), float(gj.W.value)


def _value(x) -> float:
    return float(J.value(x))


def _lap_expansion(gj: GraphJets, f: J.Jet) -> J.Jet:
    """L f = g^{kl} f_kl + B^l f_l as a jet two orders below ``f``."""
    n = len(gj.du)
    df = [f.d(l) for l in range(n)]
    out = None
    for k in range(n):
        for l in range(n):
            term = gj.g_inv[k, l] * df[l].d(k)
            out = term if out is None else out + term
    for l in range(n):
        out = out + gj.B[l] * df[l]
    return out


def _outer_expansion(gj: GraphJets, q: J.Jet) -> float:
    """g^{ij} q_,ij + B^j q_,j at the base point."""
    n = len(gj.du)
    total = 0.0
    for i in range(n):
        qi = q.d(i)
        for j in range(n):
            total += _value(gj.g_inv[i, j]) * _value(qi.d(j))
        total += _value(gj.B[i]) * _value(qi)
    return total


def bilaplacian_scalar(gc: GraphChart, f, p) -> float:
    """Delta^2 f at p by the expansion g^{ij}(Lf)_{,ij} + B^j (Lf)_{,j}.

    ``f`` is a callable of the coordinate list or an expression string.
    """
    if isinstance(f, str):
        f = parse(f, n=gc.n)
    gj = gc.jets(p)
    fj = f(J.variables(gc._point(p), ORDER))
    if not isinstance(fj, J.Jet):
        return 0.0
    return _outer_expansion(gj, _lap_expansion(gj, fj))


def minimal_graph_divergence(gc: GraphChart, p) -> float:
    """div(grad u / W) at p."""
    u = gc.height_jet(p, 2)
    du = [u.d(i) for i in range(gc.n)]
    W = J.sqrt(1.0 + sum(d * d for d in du))
    return float(sum((du[i] / W).d(i).value for i in range(gc.n)))


def minimal_graph_residual(gc: GraphChart, p) -> float:
    """W^3 div(grad u / W) = W^2 u_ii - u_i u_j u_ij at p.

    For n = 2 this is (1+u_y^2)u_xx - 2 u_x u_y u_xy + (1+u_x^2)u_yy.  The
    factor W^3 >= 1 does not change the zero set.
    """
    u = gc.height_jet(p, 2)
    n = gc.n
    grad = np.array([u.partial(np.eye(n, dtype=int)[i]) for i in range(n)])
    hess = np.array([[u.d(i).d(j).value for j in range(n)] for i in range(n)])
    return float((1.0 + grad @ grad) * np.trace(hess) - grad @ hess @ grad)


def minimal_graph_residual_2d(gc: GraphChart, p) -> float:
    """(1+u_y^2)u_xx - 2 u_x u_y u_xy + (1+u_x^2)u_yy, the n = 2 form."""
    if gc.n != 2:
        raise ValueError("two-dimensional form needs n = 2")
    u = gc.height_jet(p, 2)
    ux, uy = u.partial([1, 0]), u.partial([0, 1])
    uxx, uxy, uyy = u.partial([2, 0]), u.partial([1, 1]), u.partial([0, 2])
    return float((1 + uy * uy) * uxx - 2 * ux * uy * uxy + (1 + ux * ux) * uyy)


class BiharmonicResiduals(NamedTuple):
    horizontal: np.ndarray  # Delta^2 x_m, m = 1..n
    vertical: float  # Delta^2 u
    scale: float  # 1 + norm of the order-4 jet of u

    @property
    def normalized(self) -> tuple[np.ndarray, float]:
        return self.horizontal / self.scale, self.vertical / self.scale

    @property
    def max_abs(self) -> float:
        return float(max(np.max(np.abs(self.horizontal)), abs(self.vertical)))


def biharmonic_graph_residuals(gc: GraphChart, p) -> BiharmonicResiduals:
    """Horizontal and vertical components of Delta^2 X for the graph."""
    gj = gc.jets(p)
    n = gc.n
    horizontal = np.array([_outer_expansion(gj, gj.B[m]) for m in range(n)])
    vertical = _outer_expansion(gj, _lap_expansion(gj, gj.u))
    scale = 1.0 + float(np.linalg.norm(gj.u.c))
    return BiharmonicResiduals(horizontal, vertical, scale)


def vertical_as_displayed(gc: GraphChart, p) -> float:
    """The vertical fourth-order equation with only the terms of the printed expansion.

    Relative to ``Delta^2 u`` it drops ``u_l (g^{ij} B^l_ij + B^j B^l_j)`` and
    ``B^j g^{kl}_j u_kl``; kept for the comparison recorded in the notes.
    """
    gj = gc.jets(p)
    n = gc.n
    u = gj.u
    d = lambda f, *idx: _derive(f, idx)
    total = 0.0
    for i in range(n):
        for j in range(n):
            gij = _value(gj.g_inv[i, j])
            lap0 = sum(gj.g_inv[k, l] * u.d(k).d(l) for k in range(n) for l in range(n))
            total += gij * _value(d(lap0, i, j))
            total += gij * sum(_value(gj.B[l]) * _value(d(u, l, i, j)) for l in range(n))
            total += 2 * gij * sum(_value(d(gj.B[l], i)) * _value(d(u, l, j)) for l in range(n))
    for j in range(n):
        bj = _value(gj.B[j])
        inner = sum(_value(gj.g_inv[k, l]) * _value(d(u, k, l, j)) for k in range(n) for l in range(n))
        inner += sum(_value(gj.B[l]) * _value(d(u, j, l)) for l in range(n))
        total += bj * inner
    return total


def _derive(f: J.Jet, idx) -> J.Jet:
    for i in idx:
        f = f.d(i)
    return f


def position_bilaplacian_graph(gc: GraphChart, p) -> np.ndarray:
    """(Delta^2 x_1, ..., Delta^2 x_n, Delta^2 u) from the expansion."""
    r = biharmonic_graph_residuals(gc, p)
    return np.append(r.horizontal, r.vertical)


def scherk(n_half: float = 0.6) -> GraphChart:
    """Scherk's surface u = log(cos y / cos x) on a box inside |x|, |y| < pi/2."""
    return GraphChart(
        lambda xs: J.log(J.cos(xs[1])) - J.log(J.cos(xs[0])),
        n=2,
        half=n_half,
        name="scherk",
    )
