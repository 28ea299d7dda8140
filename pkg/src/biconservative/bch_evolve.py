"""Normal evolution of an isoparametric seed into a proper biconservative hypersurface.

The evolved immersion is ``X(s, t) = Y(s) + alpha(t) N0(s) + t e_n(s)`` where
the profile ``alpha`` solves

    alpha'' = R(t, alpha, alpha'),
    R(x, y, z) = -(1 + z^2)/3 * sum_i (lam0_i - z mu0_i) / (1 - lam0_i y - x mu0_i),

with ``alpha(0) = alpha'(0) = 0``.  When every ``mu0_i`` vanishes the equation
is autonomous and has the first integral
``1 + alpha'^2 = prod_i (1 - lam0_i alpha)^(2/3)``, which gives a
quadrature for the inverse profile.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate as sp_integrate
from scipy.interpolate import PchipInterpolator

from . import jets as J
from .charts import Chart
from .errors import DomainError, FocalError, MinimalSeedError
from .isopar_catalog import IsoparSeed
from .rk45 import integrate

EPS_FOCAL = 1e-3
ODE_TOL = 1e-10
MAX_STEP = 0.02
QUAD_TOL = 1e-11
TAYLOR_ORDER = 4
# Sign of the alpha' mu0 coupling.  Differentiating N = (N0 - alpha' e_n) gamma
# with e_n,i = -mu0_i Y_,i gives lambda_i = (lambda0_i - alpha' mu0_i) gamma / beta_i;
# the opposite sign (+1) is kept selectable for the negative-control comparison.
MU_SIGN = -1.0

CSV_COLUMNS = ("x_n", "alpha", "alpha_p", "alpha_pp", "lambda_n")


def _coeffs(seed_or_coeffs):
    if isinstance(seed_or_coeffs, IsoparSeed):
        return np.asarray(seed_or_coeffs.lam0, dtype=float), np.asarray(seed_or_coeffs.mu0, dtype=float)
    lam0, mu0 = seed_or_coeffs
    return np.asarray(lam0, dtype=float), np.asarray(mu0, dtype=float)


def focal_factors(lam0, mu0, x, y):
    """beta_i = 1 - lam0_i y - x mu0_i (works on floats and jets)."""
    return [1.0 - l * y - x * m for l, m in zip(lam0, mu0)]


def ode_rhs(seed, x, y, z, eps_focal: float = EPS_FOCAL, mu_sign: float = MU_SIGN):
    """Right side R(x, y, z) of the profile equation alpha'' = R(x, alpha, alpha').

    ``mu_sign`` selects the sign of the ``z mu0_i`` term; see :data:`MU_SIGN`.
    Seeds with ``mu0 = 0`` do not depend on it.
    """
    lam0, mu0 = _coeffs(seed)
    betas = focal_factors(lam0, mu0, x, y)
    if eps_focal is not None:
        bmin = min(float(J.value(b)) for b in betas)
        if bmin < eps_focal:
            raise FocalError(f"focal proximity: min beta = {bmin:.3e} < {eps_focal:g} at x={J.value(x)}")
    total = 0.0
    for l, m, b in zip(lam0, mu0, betas):
        total = total + (l + mu_sign * z * m) / b
    return -(1.0 + z * z) * total / 3.0


def _check_proper(lam0):
    s = float(np.sum(lam0))
    if abs(s) <= 1e-12 * (1.0 + float(np.sum(np.abs(lam0)))):
        raise MinimalSeedError(
            "seed curvatures sum to zero: lambda_n vanishes at the seed and the evolution would be minimal"
        )


# profiles ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ProfileCurve:
    """Sampled profile (x_n, alpha(x_n)) with derivative data and validity."""

    xs: np.ndarray
    alpha: np.ndarray
    alpha_p: np.ndarray
    alpha_pp: np.ndarray
    lam0: np.ndarray
    mu0: np.ndarray
    validity: tuple
    branch: str = "+ for x_n > 0, - for x_n < 0"
    method: str = "rk45"
    stop_reason: str = ""
    tol: float = ODE_TOL
    seed_name: str = ""
    evaluator: Optional[Callable] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if len(self.xs) < 2:
            raise ValueError("profile needs at least two nodes")

    @property
    def lambda_n(self) -> np.ndarray:
        return self.alpha_pp / (1.0 + self.alpha_p**2) ** 1.5

    def in_validity(self, x, slack: float = 1e-12) -> bool:
        lo, hi = self.validity
        return lo - slack <= x <= hi + slack

    def state(self, x: float) -> tuple[float, float]:
        """(alpha, alpha') at x."""
        x = float(x)
        if not self.in_validity(x):
            raise DomainError(f"x_n={x} outside validity {self.validity}")
        if self.evaluator is not None:
            return self.evaluator(x)
        ts = self.xs
        k = int(np.clip(np.searchsorted(ts, x) - 1, 0, len(ts) - 2))
        h = ts[k + 1] - ts[k]
        s = (x - ts[k]) / h
        h00 = 2 * s**3 - 3 * s**2 + 1
        h10 = s**3 - 2 * s**2 + s
        h01 = -2 * s**3 + 3 * s**2
        h11 = s**3 - s**2
        a = h00 * self.alpha[k] + h10 * h * self.alpha_p[k] + h01 * self.alpha[k + 1] + h11 * h * self.alpha_p[k + 1]
        ap = (
            h00 * self.alpha_p[k]
            + h10 * h * self.alpha_pp[k]
            + h01 * self.alpha_p[k + 1]
            + h11 * h * self.alpha_pp[k + 1]
        )
        return float(a), float(ap)

    def taylor(self, x: float, order: int = TAYLOR_ORDER) -> np.ndarray:
        """Taylor coefficients of alpha at x, higher ones from the ODE itself."""
        a0, a1 = self.state(x)
        coeffs = np.zeros(order + 1)
        coeffs[0] = a0
        if order >= 1:
            coeffs[1] = a1
        for k in range(order - 1):
            # coefficient k of R(x + t, alpha(t), alpha'(t)) fixes coefficient k+2
            (t,) = J.variables([0.0], k)
            alpha = t.compose(coeffs[: k + 2])
            dalpha = t.compose(np.arange(1, k + 3) * coeffs[1 : k + 3])
            r = ode_rhs((self.lam0, self.mu0), t + x, alpha, dalpha, eps_focal=None)
            ck = r.c[k] if isinstance(r, J.Jet) else (r if k == 0 else 0.0)
            coeffs[k + 2] = ck / ((k + 2) * (k + 1))
        return coeffs

    def jet(self, xn: J.Jet) -> J.Jet:
        return xn.compose(self.taylor(xn.value, xn.order))

    def alpha_at(self, x):
        if isinstance(x, J.Jet):
            return self.jet(x)
        return self.state(x)[0]

    def derivatives(self, x: float) -> tuple[float, float, float]:
        a, ap = self.state(x)
        app = float(ode_rhs((self.lam0, self.mu0), x, a, ap, eps_focal=None))
        return a, ap, app


def solve_profile(
    seed,
    x_max: float = 1.0,
    tol: float = ODE_TOL,
    max_step: float = MAX_STEP,
    eps_focal: float = EPS_FOCAL,
) -> ProfileCurve:
    """Integrate the profile equation from (0, 0) over [-x_max, x_max] within validity."""
    if x_max <= 0:
        raise ValueError("x_max must be positive")
    lam0, mu0 = _coeffs(seed)
    _check_proper(lam0)

    def fun(x, y):
        return np.array([y[1], ode_rhs((lam0, mu0), x, y[0], y[1], eps_focal=None)])

    def admissible(x, y):
        betas = focal_factors(lam0, mu0, x, y[0])
        return min(betas) >= eps_focal and np.all(np.isfinite(y))

    fwd = integrate(fun, 0.0, [0.0, 0.0], x_max, rtol=tol, atol=tol, max_step=max_step, admissible=admissible)
    bwd = integrate(fun, 0.0, [0.0, 0.0], -x_max, rtol=tol, atol=tol, max_step=max_step, admissible=admissible)
    half = min(fwd.t[-1], -bwd.t[0])
    if half <= 1e-6:
        raise FocalError("validity interval collapsed: focal point at the seed")
    ts = np.concatenate([bwd.t[:-1], fwd.t])
    ys = np.concatenate([bwd.y[:-1], fwd.y])
    fs = np.concatenate([bwd.f[:-1], fwd.f])
    keep = np.abs(ts) < half - 1e-9
    ts, ys, fs = ts[keep], ys[keep], fs[keep]
    # close the node range exactly at +-half so that validity equals the node span
    ends_t, ends_y, ends_f = [], [], []
    for x, traj in ((-half, bwd), (half, fwd)):
        y = np.asarray(traj(x), dtype=float)
        ends_t.append(x)
        ends_y.append(y)
        ends_f.append(fun(x, y))
    ts = np.concatenate([[ends_t[0]], ts, [ends_t[1]]])
    ys = np.vstack([ends_y[0], ys, ends_y[1]])
    fs = np.vstack([ends_f[0], fs, ends_f[1]])
    reasons = {fwd.stop_reason, bwd.stop_reason}
    stop = "focal threshold" if "admissibility limit" in reasons else "x_max reached"
    return ProfileCurve(
        xs=ts,
        alpha=ys[:, 0],
        alpha_p=ys[:, 1],
        alpha_pp=fs[:, 1],
        lam0=lam0,
        mu0=mu0,
        validity=(-float(half), float(half)),
        method="rk45",
        stop_reason=stop,
        tol=tol,
        seed_name=getattr(seed, "name", ""),
    )


class _Quadrature:
    """Inverse profile x(s), alpha = s^2, for autonomous seeds."""

    def __init__(self, lam0, x_max, eps_focal, n_table=400):
        self.lam0 = lam0
        self.c = -(2.0 / 3.0) * float(np.sum(lam0))
        pos = lam0[lam0 > 0]
        self.alpha_cap = (1.0 - eps_focal) / pos.max() if pos.size else np.inf
        s_max = 0.5
        while self.x_of_s(s_max) < x_max:
            if s_max**2 >= self.alpha_cap:
                break
            s_max = min(1.5 * s_max, np.sqrt(self.alpha_cap))
        if s_max**2 >= self.alpha_cap:
            s_max = np.sqrt(self.alpha_cap)
        self.s_tab = np.linspace(0.0, s_max, n_table)
        pieces = [self._quad(a, b) for a, b in zip(self.s_tab[:-1], self.s_tab[1:])]
        self.x_tab = np.concatenate([[0.0], np.cumsum(pieces)])
        self.x_reach = float(min(self.x_tab[-1], x_max))
        self.inverse = PchipInterpolator(self.x_tab, self.s_tab)

    def F(self, alpha):
        return float(np.expm1((2.0 / 3.0) * np.sum(np.log1p(-self.lam0 * alpha))))

    def integrand(self, s):
        if s == 0.0:
            return 2.0 / np.sqrt(self.c)
        return 2.0 * s / np.sqrt(self.F(s * s))

    def _quad(self, a, b):
        val, _ = sp_integrate.quad(self.integrand, a, b, epsabs=1e-15, epsrel=QUAD_TOL, limit=200)
        return val

    def x_of_s(self, s):
        return self._quad(0.0, s)

    def s_of_x(self, x):
        x = abs(float(x))
        s = float(self.inverse(x))
        k = int(np.clip(np.searchsorted(self.s_tab, s) - 1, 0, len(self.s_tab) - 2))
        x_s = self.x_tab[k] + self._quad(self.s_tab[k], s)
        return s - (x_s - x) / self.integrand(s)

    def state(self, x):
        s = self.s_of_x(x)
        alpha = s * s
        ap = np.sqrt(max(self.F(alpha), 0.0))
        return alpha, float(np.copysign(ap, x)) if x != 0 else 0.0


def closed_form_lambda_n(lam0, alpha):
    """lambda_n as a function of alpha for autonomous seeds."""
    lam0 = np.asarray(lam0, dtype=float)
    b = 1.0 - lam0 * alpha
    return float(-np.sum(lam0 / b) / 3.0 * np.prod(b) ** (-1.0 / 3.0))


def closed_form_profile(seed, x_max: float = 1.0, nodes: int = 201, eps_focal: float = EPS_FOCAL) -> ProfileCurve:
    """Profile from the first integral and one quadrature (requires mu0 = 0)."""
    lam0, mu0 = _coeffs(seed)
    if np.any(mu0 != 0.0):
        raise ValueError("closed-form profile needs all mu0 = 0")
    _check_proper(lam0)
    if np.sum(lam0) >= 0:
        raise ValueError("closed-form profile needs sum(lam0) < 0 (h < 0 orientation)")
    quad = _Quadrature(lam0, x_max, eps_focal)
    half = quad.x_reach
    xs = np.linspace(-half, half, nodes)
    states = np.array([quad.state(x) for x in xs])
    alpha, ap = states[:, 0], states[:, 1]
    app = np.array([ode_rhs((lam0, mu0), x, a, p, eps_focal=None) for x, a, p in zip(xs, alpha, ap)])
    return ProfileCurve(
        xs=xs,
        alpha=alpha,
        alpha_p=ap,
        alpha_pp=app,
        lam0=lam0,
        mu0=mu0,
        validity=(-half, half),
        method="closed-form",
        stop_reason="x_max reached" if half >= x_max else "focal threshold",
        tol=QUAD_TOL,
        seed_name=getattr(seed, "name", ""),
        evaluator=quad.state,
    )


def first_integral_defect(profile: ProfileCurve) -> np.ndarray:
    """1 + alpha'^2 - prod(1 - lam0 alpha)^(2/3) at the profile nodes."""
    lam0 = profile.lam0
    rhs = np.array([np.prod(1.0 - lam0 * a) ** (2.0 / 3.0) for a in profile.alpha])
    return 1.0 + profile.alpha_p**2 - rhs


# evolved hypersurface ------------------------------------------------------------------


@dataclass(frozen=True)
class EvolvedChart:
    seed: IsoparSeed
    profile: ProfileCurve
    chart: Chart

    @property
    def n(self) -> int:
        return self.seed.n

    def _profile_state(self, xn):
        a, ap, app = self.profile.derivatives(xn)
        return a, ap, app

    def betas(self, xn: float) -> np.ndarray:
        a, _, _ = self._profile_state(xn)
        return np.array(focal_factors(self.seed.lam0, self.seed.mu0, xn, a))

    def principal_curvatures(self, xn: float) -> np.ndarray:
        """Closed-form (lambda_1..lambda_{n-1}, lambda_n) along the level x_n."""
        a, ap, app = self._profile_state(xn)
        gamma = 1.0 / np.sqrt(1.0 + ap * ap)
        beta = np.array(focal_factors(self.seed.lam0, self.seed.mu0, xn, a))
        lam = (self.seed.lam0 + MU_SIGN * ap * self.seed.mu0) * gamma / beta
        lam_n = app / (1.0 + ap * ap) ** 1.5
        return np.append(lam, lam_n)

    def principal_curvatures_jet(self, xn: J.Jet) -> list:
        """Same closed forms evaluated on a jet in x_n."""
        coeffs = self.profile.taylor(xn.value, xn.order + 2)
        a = xn.compose(coeffs)
        ap = xn.compose(np.arange(1, len(coeffs)) * coeffs[1:])
        app = xn.compose(np.arange(1, len(coeffs) - 1) * np.arange(2, len(coeffs)) * coeffs[2:])
        gamma = (1.0 + ap * ap) ** -0.5
        out = []
        for l, m in zip(self.seed.lam0, self.seed.mu0):
            out.append((l + MU_SIGN * ap * m) * gamma / (1.0 - l * a - xn * m))
        out.append(app * gamma**3)
        return out

    def normal(self, point) -> np.ndarray:
        """Closed-form unit normal (N0 - alpha' e_n)/sqrt(1 + alpha'^2)."""
        point = self.chart.check(point)
        _, N0, en = self.seed.evaluate(point[:-1])
        _, ap, _ = self._profile_state(point[-1])
        return (N0 - ap * en) / np.sqrt(1.0 + ap * ap)

    def weights(self, point) -> np.ndarray:
        """Closed-form metric weights (v0_i |beta_i|, sqrt(1 + alpha'^2))."""
        point = self.chart.check(point)
        v0 = np.array([float(J.value(w)) for w in self.seed.weights(list(point[:-1]))])
        a, ap, _ = self._profile_state(point[-1])
        beta = np.array(focal_factors(self.seed.lam0, self.seed.mu0, point[-1], a))
        return np.append(v0 * np.abs(beta), np.sqrt(1.0 + ap * ap))

    def mean_curvature(self, xn: float) -> float:
        return float(np.sum(self.principal_curvatures(xn)) / self.n)


def evolve(seed: IsoparSeed, profile: ProfileCurve) -> EvolvedChart:
    """Assemble X = Y + alpha N0 + x_n e_n over the seed box times the profile validity."""
    if len(profile.lam0) != len(seed.lam0) or not (
        np.allclose(profile.lam0, seed.lam0, atol=1e-9) and np.allclose(profile.mu0, seed.mu0, atol=1e-9)
    ):
        raise ValueError("profile was not solved for this seed")
    lo, hi = profile.validity
    if not hi > lo:
        raise FocalError("profile has an empty validity interval")
    n = seed.n

    def func(xs):
        s, xn = list(xs[:-1]), xs[-1]
        Y = seed.Y.func(s)
        N0, en = seed.frame(s)
        alpha = profile.alpha_at(xn)
        return Y + N0 * alpha + en * xn

    def hint(point):
        return seed.evaluate(point[:-1])[1]

    box = np.vstack([seed.box, [[lo, hi]]])
    chart = Chart(
        name=f"evolved[{seed.name}]",
        dim_domain=n,
        dim_ambient=n + 1,
        func=func,
        box=box,
        normal_hint=hint,
        convention="normal: (N0 - alpha' e_n)/sqrt(1+alpha'^2), h < 0",
        meta={"seed": seed.name, "validity": (lo, hi)},
    )
    return EvolvedChart(seed, profile, chart)


def mean_curvature_sum(evolved: EvolvedChart, xn: float) -> float:
    """sum_{i<n} lambda_i from the closed-form evolution."""
    lam0, mu0 = evolved.seed.lam0, evolved.seed.mu0
    a, ap, _ = evolved._profile_state(xn)
    beta = np.array(focal_factors(lam0, mu0, xn, a))
    return float(np.sum((lam0 + MU_SIGN * ap * mu0) / beta) / np.sqrt(1.0 + ap * ap))


def build(seed: IsoparSeed, x_max: float = 1.0, tol: float = ODE_TOL) -> EvolvedChart:
    return evolve(seed, solve_profile(seed, x_max, tol))


# serialization ---------------------------------------------------------------------------


def write_profile_csv(profile: ProfileCurve, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for row in zip(profile.xs, profile.alpha, profile.alpha_p, profile.alpha_pp, profile.lambda_n):
            w.writerow([f"{v:.17g}" for v in row])


def read_profile_table(path) -> dict:
    """Read a profile CSV into column arrays, checking the header."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty profile file")
    header = tuple(c.strip() for c in rows[0])
    if header != CSV_COLUMNS:
        raise ValueError(f"{path}: header {header} does not match {CSV_COLUMNS}")
    body = [r for r in rows[1:] if r]
    if len(body) < 2:
        raise ValueError(f"{path}: need at least two data rows")
    try:
        data = np.array([[float(v) for v in r] for r in body])
    except ValueError as exc:
        raise ValueError(f"{path}: non-numeric entry ({exc})") from None
    if data.shape[1] != len(CSV_COLUMNS):
        raise ValueError(f"{path}: expected {len(CSV_COLUMNS)} columns")
    return {name: data[:, k] for k, name in enumerate(CSV_COLUMNS)}


def read_profile_csv(path, seed: IsoparSeed, validity=None, tol: float = ODE_TOL) -> ProfileCurve:
    cols = read_profile_table(path)
    xs = cols["x_n"]
    if validity is None:
        validity = (float(xs[0]), float(xs[-1]))
    return ProfileCurve(
        xs=xs,
        alpha=cols["alpha"],
        alpha_p=cols["alpha_p"],
        alpha_pp=cols["alpha_pp"],
        lam0=np.asarray(seed.lam0, dtype=float),
        mu0=np.asarray(seed.mu0, dtype=float),
        validity=tuple(float(v) for v in validity),
        method="rk45",
        tol=tol,
        seed_name=seed.name,
    )
