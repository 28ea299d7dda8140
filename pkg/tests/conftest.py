"""Shared fixtures: cached evolutions and a finite-difference oracle."""

import functools

import numpy as np
import pytest

from biconservative import bch_evolve as be
from biconservative import isopar_catalog as ic


@functools.lru_cache(maxsize=None)
def evolved(spec: str, x_max: float = 1.0) -> be.EvolvedChart:
    return be.build(ic.seed_from_spec(spec), x_max)


def fd_gradient(f, p, h=1e-5):
    """Central-difference gradient of a scalar or vector function."""
    p = np.asarray(p, dtype=float)
    cols = []
    for i in range(p.size):
        e = np.zeros_like(p)
        e[i] = h
        cols.append((np.asarray(f(p + e)) - np.asarray(f(p - e))) / (2 * h))
    return np.stack(cols, axis=-1)


def fd_hessian(f, p, h=1e-4):
    p = np.asarray(p, dtype=float)
    n = p.size
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            ei = np.zeros(n)
            ej = np.zeros(n)
            ei[i] = h
            ej[j] = h
            out[i, j] = (f(p + ei + ej) - f(p + ei - ej) - f(p - ei + ej) + f(p - ei - ej)) / (4 * h * h)
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    """Print one verdict line per acceptance criterion that ran."""
    import sys

    acc = sys.modules.get("test_acceptance")
    if acc is None or not acc.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(acc.RESULTS):
        terminalreporter.write_line(acc.RESULTS[k])
