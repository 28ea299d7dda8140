"""Isoparametric codimension-2 seeds and related constructions.

A seed is a patch ``Y`` of an (n-1)-dimensional submanifold of E^{n+1}
together with an orthonormal normal frame ``(N0, e_n)``.  Sign conventions:
``D_i N0 = -lambda0_i Y_i`` and ``D_i e_n = -mu0_i Y_i`` in the seed's
curvature-line coordinates; ``N0`` is oriented so that ``sum(lambda0) < 0``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import jets as J
from .charts import Chart, hyperspherical, sphere_box
from .geom_kernel import LocalGeometry

FLAT_HALF_WIDTH = 1.0


@dataclass(frozen=True)
class IsoparSeed:
    name: str
    n: int  # dimension of the evolved hypersurface; the seed has dimension n-1
    Y: Chart
    frame: Callable  # xs -> (N0, e_n)
    lam0: np.ndarray
    mu0: np.ndarray
    weights: Callable  # xs -> metric weights v0_i
    symmetry_tag: str
    symmetry: Callable = field(repr=False, default=None)  # rng -> orthogonal matrix
    blocks: tuple = ()

    @property
    def box(self) -> np.ndarray:
        return self.Y.box

    def spec(self) -> str:
        return self.name

    def evaluate(self, s) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        s = list(self.Y.check(s))
        N0, en = self.frame(s)
        return self.Y(s), np.asarray(N0, dtype=float), np.asarray(en, dtype=float)


def _unit_sphere_weights(angles):
    # metric weights of hyperspherical coordinates on the unit sphere
    out = []
    prod = 1.0
    for a in angles:
        out.append(prod)
        prod = prod * J.sin(a)
    return out


def _pad(vec_items, total):
    return list(vec_items) + [0.0] * (total - len(vec_items))


def sphere_seed(n: int, r: float = 1.0) -> IsoparSeed:
    """S^{n-1}(r) in the hyperplane x_{n+1} = 0; N0 outward, e_n = e_{n+1}."""
    if n < 2:
        raise ValueError("sphere_seed needs n >= 2")
    if r <= 0:
        raise ValueError("radius must be positive")
    k = n - 1

    def Y(xs):
        return J.vec(_pad(hyperspherical(r, xs), n + 1))

    def frame(xs):
        N0 = J.vec(_pad(hyperspherical(1.0, xs), n + 1))
        en = np.eye(n + 1)[n]
        return N0, en

    def weights(xs):
        return _sphere_weights(r, xs)

    def symmetry(rng):
        q = np.eye(n + 1)
        q[:n, :n] = _random_orthogonal(n, rng)
        return q

    chart = Chart(f"sphere-seed:n={n},r={r:g}", k, n + 1, Y, sphere_box(k))
    return IsoparSeed(
        name=f"sphere:n={n},r={r:g}",
        n=n,
        Y=chart,
        frame=frame,
        lam0=np.full(k, -1.0 / r),
        mu0=np.zeros(k),
        weights=weights,
        symmetry_tag=f"O({n})",
        symmetry=symmetry,
        blocks=(tuple(range(k)),),
    )


def _sphere_weights(r, angles):
    # weights for hyperspherical(r, angles): r, r sin a1, r sin a1 sin a2, ...
    if not angles:
        return []
    return [r * w for w in _unit_sphere_weights(angles)]


def cylinder_seed(p: int, q: int, r: float = 1.0) -> IsoparSeed:
    """S^p(r) x R^q inside the hyperplane x_{n+1} = 0, n = p + q + 1."""
    if p < 1 or q < 0:
        raise ValueError("cylinder_seed needs p >= 1, q >= 0")
    n = p + q + 1

    def Y(xs):
        return J.vec(_pad(hyperspherical(r, xs[:p]) + list(xs[p:]), n + 1))

    def frame(xs):
        N0 = J.vec(_pad(hyperspherical(1.0, xs[:p]), n + 1))
        return N0, np.eye(n + 1)[n]

    def weights(xs):
        return _sphere_weights(r, xs[:p]) + [1.0] * q

    def symmetry(rng):
        m = np.eye(n + 1)
        m[: p + 1, : p + 1] = _random_orthogonal(p + 1, rng)
        return m

    box = sphere_box(p)
    if q:
        box = np.vstack([box, [[-FLAT_HALF_WIDTH, FLAT_HALF_WIDTH]] * q])
    chart = Chart(f"cylinder-seed:p={p},q={q},r={r:g}", n - 1, n + 1, Y, box)
    blocks = (tuple(range(p)),) + ((tuple(range(p, p + q)),) if q else ())
    return IsoparSeed(
        name=f"cylinder:p={p},q={q},r={r:g}",
        n=n,
        Y=chart,
        frame=frame,
        lam0=np.array([-1.0 / r] * p + [0.0] * q),
        mu0=np.zeros(p + q),
        weights=weights,
        symmetry_tag=f"O({p + 1})",
        symmetry=symmetry,
        blocks=blocks,
    )


def product_sphere_seed(p: int, q: int, r1: float = 1.0, r2: float = 1.0, normal: str = "radial") -> IsoparSeed:
    """S^p(r1) x S^q(r2) in E^{p+1} x E^{q+1}.

    With ``normal="radial"`` N0 is the radial direction of the sphere
    S^n(sqrt(r1^2+r2^2)) containing the product.  With ``normal="sphere"``
    N0 is the unit normal of the product inside that sphere (oriented so that
    sum lam0 <= 0); for p r2^2 = q r1^2 this seed is minimal.
    """
    if normal not in ("radial", "sphere"):
        raise ValueError(f"normal must be 'radial' or 'sphere', got {normal!r}")
    if p < 1 or q < 1:
        raise ValueError("product_sphere_seed needs p, q >= 1")
    if r1 <= 0 or r2 <= 0:
        raise ValueError("radii must be positive")
    n = p + q + 1
    R = float(np.hypot(r1, r2))

    def Y(xs):
        return J.vec(hyperspherical(r1, xs[:p]) + hyperspherical(r2, xs[p:]))

    def frame(xs):
        w1 = hyperspherical(1.0, xs[:p])
        w2 = hyperspherical(1.0, xs[p:])
        N0 = J.vec([v * (r1 / R) for v in w1] + [v * (r2 / R) for v in w2])
        en = J.vec([v * (r2 / R) for v in w1] + [v * (-r1 / R) for v in w2])
        if normal == "sphere":
            return en * flip, N0 * flip
        return N0, en

    def weights(xs):
        return _sphere_weights(r1, xs[:p]) + _sphere_weights(r2, xs[p:])

    def symmetry(rng):
        m = np.zeros((n + 1, n + 1))
        m[: p + 1, : p + 1] = _random_orthogonal(p + 1, rng)
        m[p + 1 :, p + 1 :] = _random_orthogonal(q + 1, rng)
        return m

    lam0 = np.full(p + q, -1.0 / R)
    mu0 = np.array([-r2 / (r1 * R)] * p + [r1 / (r2 * R)] * q)
    flip = 1.0
    suffix = ""
    if normal == "sphere":
        flip = -1.0 if mu0.sum() > 0 else 1.0
        lam0, mu0 = flip * mu0, flip * lam0
        suffix = ",normal=sphere"
    box = np.vstack([sphere_box(p), sphere_box(q)])
    chart = Chart(f"product-seed:p={p},q={q},r1={r1:g},r2={r2:g}{suffix}", n - 1, n + 1, Y, box)
    return IsoparSeed(
        name=f"product:p={p},q={q},r1={r1:g},r2={r2:g}{suffix}",
        n=n,
        Y=chart,
        frame=frame,
        lam0=lam0,
        mu0=mu0,
        weights=weights,
        symmetry_tag=f"O({p + 1})xO({q + 1})",
        symmetry=symmetry,
        blocks=(tuple(range(p)), tuple(range(p, p + q))),
    )


def _random_orthogonal(k: int, rng) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((k, k)))
    return q * np.sign(np.diag(r))


# seed verification ------------------------------------------------------------


@dataclass(frozen=True)
class SeedCurvatures:
    lam: np.ndarray  # eigenvalues of A_{N0}, in coordinate order
    mu: np.ndarray  # eigenvalues of A_{e_n}, in coordinate order
    frame_defect: float  # deviation of (N0, e_n) from an orthonormal normal frame
    flatness: float  # max_i |<D_{e_i} N0, e_n>|
    commutator: float  # ||[A_{N0}, A_{e_n}]||
    offdiag: float  # largest off-diagonal entry of either shape operator


def seed_curvatures(seed: IsoparSeed, s) -> SeedCurvatures:
    """Recompute the seed's normal-frame data at ``s`` from jets of ``Y``."""
    s = seed.Y.check(s)
    k = seed.n - 1
    xs = J.variables(s, 2)
    Yj = seed.Y.func(xs)
    N0, en = seed.frame(xs)
    if not isinstance(en, J.Jet):
        en = J.Jet.constant(en, k, 2)
    dY = [Yj.d(i) for i in range(k)]
    g = np.array([[float((dY[i] * dY[j]).sum().value) for j in range(k)] for i in range(k)])
    ginv = np.linalg.inv(g)
    N0v, env = N0.value, en.value
    IIN = np.array([[dY[i].d(j).value @ N0v for j in range(k)] for i in range(k)])
    IIe = np.array([[dY[i].d(j).value @ env for j in range(k)] for i in range(k)])
    AN = ginv @ IIN
    Ae = ginv @ IIe
    tangents = np.array([d.value for d in dY])
    frame_defect = max(
        abs(N0v @ N0v - 1.0),
        abs(env @ env - 1.0),
        abs(N0v @ env),
        float(np.max(np.abs(tangents @ N0v))),
        float(np.max(np.abs(tangents @ env))),
    )
    v = np.sqrt(np.diag(g))
    flat = max(abs(N0.d(i).value @ env) / v[i] for i in range(k))
    comm = float(np.max(np.abs(AN @ Ae - Ae @ AN)))
    off = 0.0
    if k > 1:
        mask = ~np.eye(k, dtype=bool)
        off = float(max(np.max(np.abs(AN[mask])), np.max(np.abs(Ae[mask]))))
    return SeedCurvatures(np.diag(AN).copy(), np.diag(Ae).copy(), frame_defect, flat, comm, off)


def seed_weights_defect(seed: IsoparSeed, s) -> float:
    """Mismatch between the declared weights v0_i and sqrt(<Y_i, Y_i>)."""
    s = seed.Y.check(s)
    xs = J.variables(s, 1)
    Yj = seed.Y.func(xs)
    v = np.array([np.sqrt(Yj.d(i).value @ Yj.d(i).value) for i in range(seed.n - 1)])
    w = np.array([float(J.value(x)) for x in seed.weights(list(s))])
    return float(np.max(np.abs(v - w)))


# reducible products -------------------------------------------------------------


def extend_cylinder(chart: Chart, l: int, half: float = 1.0) -> Chart:
    """Riemannian product of a hypersurface chart with E^l."""
    if l < 1:
        raise ValueError("l must be >= 1")
    n = chart.dim_domain

    def func(xs):
        return J.concat([chart.func(list(xs[:n]))] + [J.vec(list(xs[n:]))])

    hint = None
    if chart.normal_hint is not None:
        hint = lambda p: np.concatenate([chart.normal_hint(np.asarray(p[:n])), np.zeros(l)])
    else:
        # keep the base orientation: pull the normal of the factor chart
        def hint(p):
            geo = LocalGeometry(chart, p[:n], order=1)
            return np.concatenate([geo.N.value, np.zeros(l)])

    box = np.vstack([chart.box, [[-half, half]] * l])
    return Chart(
        name=f"{chart.name}xE{l}",
        dim_domain=n + l,
        dim_ambient=chart.dim_ambient + l,
        func=func,
        box=box,
        normal_hint=hint,
        convention=chart.convention,
        meta=dict(chart.meta, base=chart.name, flat_dims=l),
    )


# Veronese surface ----------------------------------------------------------------


def veronese_xyz(x, y, z):
    s3 = np.sqrt(3.0)
    return J.vec([y * z, x * z, x * y, (x * x - (y * y + z * z) * 0.5) / s3, (z * z - y * y) * 0.5])


def veronese_rp2(theta, phi) -> np.ndarray:
    """Veronese embedding of RP^2 into S^4(1/sqrt 3) in E^5."""
    x = J.cos(theta)
    y = J.sin(theta) * J.cos(phi)
    z = J.sin(theta) * J.sin(phi)
    return veronese_xyz(x, y, z)


def veronese_chart(margin: float = 1e-2) -> Chart:
    return Chart(
        name="veronese",
        dim_domain=2,
        dim_ambient=5,
        func=lambda xs: veronese_rp2(xs[0], xs[1]),
        box=[[margin, np.pi - margin], [-np.pi, np.pi]],
    )


# registry --------------------------------------------------------------------------

SEED_BUILDERS = {
    "sphere": (sphere_seed, {"n": int, "r": float}),
    "product": (product_sphere_seed, {"p": int, "q": int, "r1": float, "r2": float, "normal": str}),
    "cylinder": (cylinder_seed, {"p": int, "q": int, "r": float}),
}

CATALOG_ENTRIES = [
    "cylinder:p=1,q=1,r=1",
    "cylinder:p=2,q=0,r=1",
    "product:p=1,q=1,r1=1,r2=1",
    "product:p=1,q=2,r1=1,r2=1",
    "sphere:n=2,r=1",
    "sphere:n=2,r=2",
    "sphere:n=3,r=1",
    "sphere:n=3,r=2",
    "sphere:n=4,r=1",
    "sphere:n=4,r=2",
]


def parse_spec(spec: str) -> tuple[str, dict]:
    """Split ``name:k=v,k=v`` into the name and a raw string dict."""
    name, _, rest = spec.strip().partition(":")
    params = {}
    if rest:
        for item in rest.split(","):
            key, eq, val = item.partition("=")
            if not eq or not key.strip():
                raise ValueError(f"malformed parameter {item!r} in {spec!r}")
            key = key.strip()
            if key in params:
                raise ValueError(f"duplicate parameter {key!r} in {spec!r}")
            params[key] = val.strip()
    return name.strip(), params


def seed_from_spec(spec: str) -> IsoparSeed:
    name, raw = parse_spec(spec)
    if name not in SEED_BUILDERS:
        raise ValueError(f"unknown seed {name!r}; expected one of {sorted(SEED_BUILDERS)}")
    builder, types = SEED_BUILDERS[name]
    unknown = set(raw) - set(types)
    if unknown:
        raise ValueError(f"unknown key(s) {sorted(unknown)} for seed {name!r}")
    kwargs = {}
    for key, val in raw.items():
        try:
            kwargs[key] = types[key](val)
        except ValueError:
            raise ValueError(f"bad value {val!r} for {name}.{key}") from None
    return builder(**kwargs)
