"""Parametrized patches and a small catalog of closed-form hypersurfaces."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import jets as J
from .errors import DomainError

# inset from coordinate poles
POLE_MARGIN = 1e-2


@dataclass(frozen=True)
class Chart:
    """Smooth map from an axis-aligned box of R^n into Euclidean space.

    ``func`` takes a list of n coordinates (floats or :class:`~.jets.Jet`)
    and returns the ambient point; it must only use operations from
    :mod:`biconservative.jets` so the same code serves plain evaluation and
    Taylor propagation.

    ``normal_hint`` (optional) maps float coordinates to an ambient vector
    the unit normal should have positive inner product with.
    """

    name: str
    dim_domain: int
    dim_ambient: int
    func: Callable
    box: np.ndarray
    normal_hint: Optional[Callable] = None
    convention: str = "normal: positive orientation of (X_1..X_n, N)"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        box = np.asarray(self.box, dtype=float).reshape(self.dim_domain, 2)
        object.__setattr__(self, "box", box)

    def contains(self, p, slack: float = 0.0) -> bool:
        p = np.asarray(p, dtype=float)
        return bool(np.all(p >= self.box[:, 0] - slack) and np.all(p <= self.box[:, 1] + slack))

    def check(self, p):
        p = np.asarray(p, dtype=float).ravel()
        if p.size != self.dim_domain:
            raise DomainError(f"{self.name}: expected {self.dim_domain} coordinates, got {p.size}")
        if not self.contains(p, slack=1e-12):
            raise DomainError(f"{self.name}: point {p.tolist()} outside domain box")
        return p

    def __call__(self, p) -> np.ndarray:
        p = self.check(p)
        return np.asarray(self.func(list(p)), dtype=float)

    def sample(self, count: int, rng=None, inset: float = 0.0) -> np.ndarray:
        """Uniform random points of the (optionally shrunk) box."""
        rng = np.random.default_rng(0) if rng is None else rng
        lo, hi = self.box[:, 0], self.box[:, 1]
        pad = inset * (hi - lo)
        return rng.uniform(lo + pad, hi - pad, size=(count, self.dim_domain))

    def grid(self, per_axis: int, inset: float = 0.05) -> np.ndarray:
        lo, hi = self.box[:, 0], self.box[:, 1]
        pad = inset * (hi - lo)
        axes = [np.linspace(a, b, per_axis) for a, b in zip(lo + pad, hi - pad)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)


def hyperspherical(r, angles):
    """Point of S^k(r) in R^{k+1} from k angles (all but the last are polar)."""
    coords = []
    prod = r
    for a in angles:
        coords.append(prod * J.cos(a))
        prod = prod * J.sin(a)
    coords.append(prod)
    return coords


def sphere_box(k: int, margin: float = POLE_MARGIN) -> np.ndarray:
    box = [[margin, np.pi - margin]] * (k - 1) + [[-np.pi + margin, np.pi - margin]]
    return np.array(box)


def plane(n: int = 2, half: float = 2.0) -> Chart:
    return Chart(
        name=f"plane:n={n}",
        dim_domain=n,
        dim_ambient=n + 1,
        func=lambda xs: J.vec(list(xs) + [0.0 * xs[0]]),
        box=[[-half, half]] * n,
        normal_hint=lambda p: np.eye(n + 1)[-1],
        convention="normal: +e_{n+1}",
    )


def sphere(n: int = 2, r: float = 1.0) -> Chart:
    """Round S^n(r) with the inward normal, so h = +1/r."""
    return Chart(
        name=f"sphere:n={n},r={r:g}",
        dim_domain=n,
        dim_ambient=n + 1,
        func=lambda xs: J.vec(hyperspherical(r, xs)),
        box=sphere_box(n),
        normal_hint=lambda p: -np.asarray(hyperspherical(r, p)),
        convention="normal: inward (h = +1/r)",
        meta={"radius": r},
    )


def cylinder(p: int = 1, q: int = 1, r: float = 1.0, half: float = 2.0) -> Chart:
    """S^p(r) x R^q with the inward normal on the round factor."""
    n = p + q

    def func(xs):
        return J.vec(hyperspherical(r, xs[:p]) + list(xs[p:]))

    box = np.vstack([sphere_box(p), [[-half, half]] * q]) if q else sphere_box(p)
    return Chart(
        name=f"cylinder:p={p},q={q},r={r:g}",
        dim_domain=n,
        dim_ambient=n + 1,
        func=func,
        box=box,
        normal_hint=lambda x: -np.concatenate([hyperspherical(r, x[:p]), np.zeros(q)]),
        convention="normal: inward on the round factor",
        meta={"radius": r},
    )


def catenoid(c: float = 1.0, half: float = 1.5) -> Chart:
    def func(xs):
        u, v = xs
        return J.vec([c * J.cosh(u / c) * J.cos(v), c * J.cosh(u / c) * J.sin(v), u])

    return Chart(
        name=f"catenoid:c={c:g}",
        dim_domain=2,
        dim_ambient=3,
        func=func,
        box=[[-half, half], [-np.pi, np.pi]],
    )


def torus(big: float = 2.0, small: float = 1.0) -> Chart:
    def func(xs):
        u, v = xs
        rad = big + small * J.cos(v)
        return J.vec([rad * J.cos(u), rad * J.sin(u), small * J.sin(v)])

    return Chart(
        name=f"torus:R={big:g},r={small:g}",
        dim_domain=2,
        dim_ambient=3,
        func=func,
        box=[[-np.pi, np.pi], [-np.pi, np.pi]],
    )


def graph(u: Callable, n: int = 2, half: float = 1.0, name: str = "graph") -> Chart:
    """Graph (x, u(x)) with the upward normal."""

    def func(xs):
        return J.vec(list(xs) + [u(xs)])

    return Chart(
        name=name,
        dim_domain=n,
        dim_ambient=n + 1,
        func=func,
        box=[[-half, half]] * n,
        normal_hint=lambda p: np.eye(n + 1)[-1],
        convention="normal: upward (+e_{n+1} component)",
    )


def reparametrize(chart: Chart, phi: Callable, box, name: Optional[str] = None) -> Chart:
    """Precompose ``chart`` with a domain diffeomorphism ``phi``."""

    def func(xs):
        return chart.func(list(phi(xs)))

    hint = None
    if chart.normal_hint is not None:
        hint = lambda p: chart.normal_hint(np.array([J.value(v) for v in phi(list(p))]))
    return Chart(
        name=name or f"{chart.name}@reparam",
        dim_domain=chart.dim_domain,
        dim_ambient=chart.dim_ambient,
        func=func,
        box=box,
        normal_hint=hint,
        convention=chart.convention,
        meta=dict(chart.meta),
    )


def catalog() -> dict[str, Chart]:
    """The fixed chart catalog used by the kernel identity suite."""
    return {
        "plane": plane(2),
        "graph": graph(lambda xs: 0.3 * xs[0] ** 2 - 0.2 * xs[0] * xs[1] + 0.1 * J.sin(xs[1]), 2,
                       name="graph:0.3x^2-0.2xy+0.1sin(y)"),
        "sphere2": sphere(2, 1.0),
        "sphere3": sphere(3, 2.0),
        "cylinder": cylinder(1, 1, 1.5),
        "catenoid": catenoid(1.0),
        "torus": torus(2.0, 1.0),
    }
