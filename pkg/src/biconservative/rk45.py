"""Dormand-Prince 5(4) embedded Runge-Kutta with cubic Hermite dense output."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import IntegrationError

# Butcher tableau (Dormand & Prince 1980)
C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
E = B5 - B4


@dataclass(frozen=True)
class Trajectory:
    """Accepted steps of an integration, ordered by increasing t."""

    t: np.ndarray
    y: np.ndarray  # (len(t), dim)
    f: np.ndarray  # right side at each node
    stop_reason: str
    rejected: int

    def __call__(self, t) -> np.ndarray:
        """Cubic Hermite interpolation of the state."""
        t = float(t)
        ts = self.t
        if t < ts[0] - 1e-14 or t > ts[-1] + 1e-14:
            raise ValueError(f"t={t} outside integrated range [{ts[0]}, {ts[-1]}]")
        k = int(np.clip(np.searchsorted(ts, t) - 1, 0, len(ts) - 2))
        h = ts[k + 1] - ts[k]
        s = (t - ts[k]) / h
        h00 = 2 * s**3 - 3 * s**2 + 1
        h10 = s**3 - 2 * s**2 + s
        h01 = -2 * s**3 + 3 * s**2
        h11 = s**3 - s**2
        return h00 * self.y[k] + h10 * h * self.f[k] + h01 * self.y[k + 1] + h11 * h * self.f[k + 1]


def _step(fun, t, y, fy, h):
    k = [fy]
    for i in range(1, 7):
        yi = y + h * sum(a * kj for a, kj in zip(A[i], k))
        k.append(fun(t + C[i] * h, yi))
    y_new = y + h * sum(b * kj for b, kj in zip(B5, k) if b != 0.0)
    err = h * sum(e * kj for e, kj in zip(E, k) if e != 0.0)
    return y_new, k[-1], err


def integrate(
    fun: Callable,
    t0: float,
    y0,
    t_end: float,
    rtol: float = 1e-10,
    atol: float = 1e-10,
    max_step: float = np.inf,
    first_step: Optional[float] = None,
    admissible: Optional[Callable] = None,
) -> Trajectory:
    """Integrate ``y' = fun(t, y)`` from t0 to t_end (either direction).

    ``admissible(t, y)`` may veto a state; integration then stops at the last
    admissible node and ``stop_reason`` says so.
    """
    y = np.asarray(y0, dtype=float).copy()
    t = float(t0)
    direction = 1.0 if t_end >= t0 else -1.0
    span = abs(t_end - t0)
    fy = np.asarray(fun(t, y), dtype=float)
    ts, ys, fs = [t], [y.copy()], [fy.copy()]
    if span == 0.0:
        return Trajectory(np.array(ts), np.array(ys), np.array(fs), "t_end reached", 0)

    h = first_step if first_step is not None else min(1e-3 * span, max_step, 1e-2)
    rejected = 0
    reason = "t_end reached"
    while direction * (t_end - t) > 0:
        h = min(h, max_step, abs(t_end - t))
        if h < 1e-14 * max(1.0, abs(t)):
            raise IntegrationError(f"step size underflow at t={t}")
        try:
            y_new, f_new, err = _step(fun, t, y, fy, direction * h)
        except (ZeroDivisionError, FloatingPointError, ValueError):
            h *= 0.25
            rejected += 1
            continue
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        en = float(np.sqrt(np.mean((err / scale) ** 2)))
        if not np.isfinite(en):
            h *= 0.25
            rejected += 1
            continue
        if en <= 1.0:
            t_new = t + direction * h
            if admissible is not None and not admissible(t_new, y_new):
                reason = "admissibility limit"
                if h <= 1e-6 * max(1.0, abs(t)):
                    break
                h *= 0.5
                rejected += 1
                continue
            t, y, fy = t_new, y_new, np.asarray(f_new, dtype=float)
            ts.append(t)
            ys.append(y.copy())
            fs.append(fy.copy())
            factor = 5.0 if en == 0.0 else min(5.0, 0.9 * en ** (-0.2))
            h *= factor
        else:
            h *= max(0.2, 0.9 * en ** (-0.2))
            rejected += 1
    ts, ys, fs = np.array(ts), np.array(ys), np.array(fs)
    if direction < 0:
        ts, ys, fs = ts[::-1], ys[::-1], fs[::-1]
    return Trajectory(ts, ys, fs, reason, rejected)
