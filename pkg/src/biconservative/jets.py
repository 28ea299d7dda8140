"""Truncated multivariate Taylor arithmetic.

A :class:`Jet` holds the Taylor coefficients of a (possibly array-valued)
function of ``nvars`` variables around a base point, truncated at total
degree ``order``.  Coefficients are stored in graded order so truncating to a
lower order is a prefix slice; the leading axis of ``Jet.c`` indexes
monomials, trailing axes carry the value shape (vectors, matrices).

The coefficient convention is ``c[a] = d^a f / a!`` so that
``partial(a) = a! * c[a]``.
"""

from __future__ import annotations

import itertools
import math
from functools import lru_cache

import numpy as np

MAX_ORDER = 6


@lru_cache(maxsize=None)
def monomials(nvars: int, order: int) -> np.ndarray:
    """Exponent vectors of total degree <= order, graded then lexicographic."""
    out = []
    for deg in range(order + 1):
        block = [a for a in itertools.product(range(deg + 1), repeat=nvars) if sum(a) == deg]
        out.extend(sorted(block, reverse=True))
    return np.array(out, dtype=np.int64).reshape(len(out), nvars)


@lru_cache(maxsize=None)
def _index(nvars: int, order: int) -> dict:
    return {tuple(int(v) for v in a): k for k, a in enumerate(monomials(nvars, order))}


@lru_cache(maxsize=None)
def _mul_table(nvars: int, order: int):
    mons = monomials(nvars, order)
    idx = _index(nvars, order)
    ia, ib, ic = [], [], []
    degs = mons.sum(axis=1)
    for a, ma in enumerate(mons):
        for b, mb in enumerate(mons):
            if degs[a] + degs[b] <= order:
                ia.append(a)
                ib.append(b)
                ic.append(idx[tuple(int(v) for v in ma + mb)])
    ia, ib, ic = (np.array(v, dtype=np.int64) for v in (ia, ib, ic))
    scatter = np.zeros((len(mons), len(ia)))
    scatter[ic, np.arange(len(ia))] = 1.0
    return ia, ib, scatter


@lru_cache(maxsize=None)
def _deriv_table(nvars: int, order: int, var: int):
    # d/dx_var maps an order-K jet onto an order-(K-1) jet
    lower = monomials(nvars, order - 1)
    idx = _index(nvars, order)
    src = np.empty(len(lower), dtype=np.int64)
    fac = np.empty(len(lower))
    for k, a in enumerate(lower):
        b = a.copy()
        b[var] += 1
        src[k] = idx[tuple(int(v) for v in b)]
        fac[k] = b[var]
    return src, fac


def n_coeffs(nvars: int, order: int) -> int:
    return math.comb(nvars + order, order)


class Jet:
    """Truncated Taylor expansion with array-valued coefficients."""

    __slots__ = ("c", "nvars", "order")
    __array_priority__ = 1000

    def __init__(self, c, nvars: int, order: int):
        self.c = np.asarray(c, dtype=float)
        self.nvars = nvars
        self.order = order

    # construction ---------------------------------------------------------

    @classmethod
    def constant(cls, value, nvars: int, order: int) -> "Jet":
        value = np.asarray(value, dtype=float)
        c = np.zeros((n_coeffs(nvars, order),) + value.shape)
        c[0] = value
        return cls(c, nvars, order)

    @property
    def shape(self) -> tuple:
        return self.c.shape[1:]

    @property
    def value(self):
        v = self.c[0]
        return float(v) if v.ndim == 0 else v.copy()

    def truncate(self, order: int) -> "Jet":
        if order > self.order:
            raise ValueError(f"cannot raise jet order {self.order} to {order}")
        if order == self.order:
            return self
        return Jet(self.c[: n_coeffs(self.nvars, order)], self.nvars, order)

    def _coerce(self, other):
        if isinstance(other, Jet):
            if other.nvars != self.nvars:
                raise ValueError("jets over different variable sets")
            k = min(self.order, other.order)
            return self.truncate(k), other.truncate(k)
        return self, Jet.constant(other, self.nvars, self.order)

    # arithmetic -----------------------------------------------------------

    @staticmethod
    def _aligned(c, ndim):
        pad = ndim - (c.ndim - 1)
        if pad <= 0:
            return c
        return c.reshape((c.shape[0],) + (1,) * pad + c.shape[1:])

    def __add__(self, other):
        a, b = self._coerce(other)
        nd = max(len(a.shape), len(b.shape))
        return Jet(self._aligned(a.c, nd) + self._aligned(b.c, nd), a.nvars, a.order)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.c, self.nvars, self.order)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Jet):
            other = np.asarray(other, dtype=float)
            nd = max(len(self.shape), other.ndim)
            return Jet(self._aligned(self.c, nd) * other, self.nvars, self.order)
        a, b = self._coerce(other)
        nd = max(len(a.shape), len(b.shape))
        ac, bc = self._aligned(a.c, nd), self._aligned(b.c, nd)
        if a.order == 0:
            return Jet(ac * bc, a.nvars, 0)
        ia, ib, scatter = _mul_table(a.nvars, a.order)
        prod = ac[ia] * bc[ib]
        out = scatter @ prod.reshape(prod.shape[0], -1)
        return Jet(out.reshape((scatter.shape[0],) + prod.shape[1:]), a.nvars, a.order)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * other.reciprocal()
        return self * (1.0 / np.asarray(other, dtype=float))

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, p):
        if isinstance(p, Jet):
            return exp(log(self) * p)
        if float(p).is_integer() and 0 <= p <= 8:
            out = Jet.constant(np.ones(self.shape), self.nvars, self.order)
            for _ in range(int(p)):
                out = out * self
            return out
        return self.power(float(p))

    def __rpow__(self, base):
        return exp(self * math.log(base))

    # array-like access ----------------------------------------------------

    def __getitem__(self, idx):
        if not isinstance(idx, tuple):
            idx = (idx,)
        return Jet(self.c[(slice(None),) + idx], self.nvars, self.order)

    def __len__(self):
        return self.shape[0]

    def __iter__(self):
        for k in range(len(self)):
            yield self[k]

    def sum(self, axis=None) -> "Jet":
        if axis is None:
            return Jet(self.c.reshape(self.c.shape[0], -1).sum(axis=1), self.nvars, self.order)
        axis = axis if axis < 0 else axis + 1
        return Jet(self.c.sum(axis=axis), self.nvars, self.order)

    @property
    def T(self) -> "Jet":
        return Jet(np.swapaxes(self.c, -1, -2), self.nvars, self.order)

    def __matmul__(self, other):
        return matmul(self, other)

    def __rmatmul__(self, other):
        return matmul(other, self)

    # calculus -------------------------------------------------------------

    def d(self, var: int) -> "Jet":
        """Partial derivative in variable ``var``; lowers the order by one."""
        if self.order == 0:
            raise ValueError("jet has no derivative information left")
        src, fac = _deriv_table(self.nvars, self.order, var)
        c = self.c[src] * fac.reshape((-1,) + (1,) * len(self.shape))
        return Jet(c, self.nvars, self.order - 1)

    def grad(self) -> "Jet":
        """Stack of first partials along a new trailing axis."""
        return stack([self.d(i) for i in range(self.nvars)], axis=-1)

    def partial(self, alpha) -> np.ndarray | float:
        alpha = tuple(int(a) for a in alpha)
        if sum(alpha) > self.order:
            raise ValueError("derivative order exceeds jet order")
        k = _index(self.nvars, self.order)[alpha]
        scale = math.prod(math.factorial(a) for a in alpha)
        v = self.c[k] * scale
        return float(v) if np.ndim(v) == 0 else v

    def derivatives(self, k: int) -> np.ndarray:
        """All k-th partials as a symmetric tensor with k leading index axes."""
        out = np.empty((self.nvars,) * k + self.shape)
        for multi in itertools.product(range(self.nvars), repeat=k):
            alpha = [0] * self.nvars
            for i in multi:
                alpha[i] += 1
            out[multi] = self.partial(alpha)
        return out

    def compose(self, coeffs) -> "Jet":
        """Evaluate a univariate series ``sum coeffs[k] (x - x0)^k`` at this jet.

        ``coeffs[k]`` must be broadcastable to the jet's value shape.
        """
        d = Jet(self.c.copy(), self.nvars, self.order)
        d.c[0] = 0.0
        out = Jet.constant(np.broadcast_to(np.asarray(coeffs[0], dtype=float), self.shape), self.nvars, self.order)
        power = None
        for k in range(1, min(len(coeffs), self.order + 1)):
            power = d if power is None else power * d
            out = out + power * np.asarray(coeffs[k], dtype=float)
        return out

    def reciprocal(self) -> "Jet":
        x0 = self.c[0]
        if np.any(x0 == 0):
            raise ZeroDivisionError("reciprocal of jet with zero constant term")
        return self.compose([(-1.0) ** k / x0 ** (k + 1) for k in range(self.order + 1)])

    def power(self, p: float) -> "Jet":
        x0 = self.c[0]
        coeffs = []
        binom = 1.0
        for k in range(self.order + 1):
            coeffs.append(binom * x0 ** (p - k))
            binom *= (p - k) / (k + 1)
        return self.compose(coeffs)

    def __repr__(self):
        return f"Jet(nvars={self.nvars}, order={self.order}, shape={self.shape}, value={self.value!r})"


def variables(point, order: int) -> list[Jet]:
    """Seed jets x_i = p_i + dx_i for a base point."""
    point = np.asarray(point, dtype=float).ravel()
    n = point.size
    out = []
    for i in range(n):
        v = Jet.constant(point[i], n, order)
        if order > 0:
            e = [0] * n
            e[i] = 1
            v.c[_index(n, order)[tuple(e)]] = 1.0
        out.append(v)
    return out


def stack(items, axis: int = 0) -> Jet:
    """Stack jets (and plain numbers) along a new value axis."""
    jets = [x for x in items if isinstance(x, Jet)]
    if not jets:
        raise TypeError("stack needs at least one Jet")
    nvars = jets[0].nvars
    order = min(j.order for j in jets)
    shape = np.broadcast_shapes(*[j.shape for j in jets])
    cs = []
    for x in items:
        if not isinstance(x, Jet):
            x = Jet.constant(np.broadcast_to(np.asarray(x, dtype=float), shape), nvars, order)
        x = x.truncate(order)
        cs.append(np.broadcast_to(x.c, (x.c.shape[0],) + shape))
    axis = axis if axis < 0 else axis + 1
    return Jet(np.stack(cs, axis=axis), nvars, order)


def matmul(a, b):
    """Matrix product over the last two value axes (vector on either side ok)."""
    if isinstance(a, Jet) and isinstance(b, Jet):
        if len(b.shape) == 1:
            return (a * b[None, :]).sum(-1) if len(a.shape) == 2 else (a * b).sum()
        if len(a.shape) == 1:
            return (a[:, None] * b).sum(0)
        return (a[:, :, None] * b[None, :, :]).sum(-2)
    if isinstance(a, Jet):
        return Jet(np.matmul(a.c, np.asarray(b, dtype=float)), a.nvars, a.order)
    if isinstance(b, Jet):
        a = np.asarray(a, dtype=float)
        if len(b.shape) == 1:
            return Jet(b.c @ a.T, b.nvars, b.order)
        return Jet(np.matmul(a, b.c), b.nvars, b.order)
    return np.asarray(a) @ np.asarray(b)


def inv(m: Jet) -> Jet:
    """Inverse of a jet-valued square matrix by the nilpotent Neumann series."""
    m0 = m.value
    m0_inv = np.linalg.inv(m0)
    d = Jet(m.c.copy(), m.nvars, m.order)
    d.c[0] = 0.0
    step = -matmul(m0_inv, d)
    term = Jet.constant(m0_inv, m.nvars, m.order)
    out = term
    for _ in range(m.order):
        term = matmul(step, term)
        out = out + term
    return out


def det(m: Jet) -> Jet:
    """Determinant via log-det expansion: det(M0) * det(I + M0^{-1} D)."""
    m0 = m.value
    d = Jet(m.c.copy(), m.nvars, m.order)
    d.c[0] = 0.0
    e = matmul(np.linalg.inv(m0), d)
    # log det(I+E) = sum_k (-1)^{k+1} tr(E^k)/k, E nilpotent in the jet ring
    logdet = None
    power = e
    for k in range(1, m.order + 1):
        tr = sum(power[i, i] for i in range(m0.shape[0]))
        term = tr * ((-1.0) ** (k + 1) / k)
        logdet = term if logdet is None else logdet + term
        power = matmul(power, e)
    if logdet is None:
        return Jet.constant(np.linalg.det(m0), m.nvars, m.order)
    return exp(logdet) * np.linalg.det(m0)


# elementary functions -----------------------------------------------------


def _series(x: Jet, coeff_fn):
    return x.compose([coeff_fn(k, x.c[0]) for k in range(x.order + 1)])


def exp(x):
    if not isinstance(x, Jet):
        return np.exp(x)
    return _series(x, lambda k, x0: np.exp(x0) / math.factorial(k))


def log(x):
    if not isinstance(x, Jet):
        return np.log(x)
    return _series(x, lambda k, x0: np.log(x0) if k == 0 else (-1.0) ** (k + 1) / (k * x0**k))


def _trig(x0, k, phase):
    # k-th derivative of sin cycles through sin, cos, -sin, -cos
    r = (k + phase) % 4
    v = (np.sin(x0), np.cos(x0), -np.sin(x0), -np.cos(x0))[r]
    return v / math.factorial(k)


def sin(x):
    if not isinstance(x, Jet):
        return np.sin(x)
    return _series(x, lambda k, x0: _trig(x0, k, 0))


def cos(x):
    if not isinstance(x, Jet):
        return np.cos(x)
    return _series(x, lambda k, x0: _trig(x0, k, 1))


def sinh(x):
    return (exp(x) - exp(-x)) * 0.5


def cosh(x):
    return (exp(x) + exp(-x)) * 0.5


def sqrt(x):
    if not isinstance(x, Jet):
        return np.sqrt(x)
    return x.power(0.5)


def value(x):
    return x.value if isinstance(x, Jet) else x


def vec(items):
    """Build a vector from scalars; returns a Jet if any entry is a Jet."""
    items = list(items)
    if any(isinstance(x, Jet) for x in items):
        return stack(items, axis=0)
    return np.array(items, dtype=float)


def concat(parts):
    """Concatenate 1-D vectors (Jets or arrays) into one vector."""
    items = []
    for part in parts:
        if isinstance(part, Jet):
            items.extend(part[k] for k in range(part.shape[0]))
        else:
            items.extend(np.atleast_1d(np.asarray(part, dtype=float)))
    return vec(items)
