"""Shared oracles for the test suite."""
from __future__ import annotations

import itertools

import numpy as np
import pytest

from grwsurf import exprs
from grwsurf.jets import jet_var

# 1D central stencils (offsets in units of h, weights, power of h)
_STENCILS = {
    0: ((0,), (1.0,), 0),
    1: ((1, -1), (0.5, -0.5), 1),
    2: ((1, 0, -1), (1.0, -2.0, 1.0), 2),
    3: ((2, 1, -1, -2), (0.5, -1.0, 1.0, -0.5), 3),
}

# derivative multi-indices in the jet's packed slot order
SLOTS = [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2), (3, 0), (2, 1), (1, 2), (0, 3)]


def _central(F, x, y, i, j, h):
    ox, wx, px = _STENCILS[i]
    oy, wy, py = _STENCILS[j]
    acc = 0.0
    for (a, wa), (b, wb) in itertools.product(zip(ox, wx), zip(oy, wy)):
        acc = acc + wa * wb * F(x + a * h, y + b * h)
    return acc / h ** (px + py)


def richardson_partial(F, x, y, i, j, h=0.02, levels=4):
    """``d^(i+j) F / dx^i dy^j`` by central differences with Richardson extrapolation."""
    table = [_central(F, x, y, i, j, h / 2 ** k) for k in range(levels)]
    for m in range(1, levels):
        f = 4.0 ** m
        table = [(f * table[k + 1] - table[k]) / (f - 1) for k in range(len(table) - 1)]
    return table[0]


def richardson_slots(F, x, y, **kw):
    return [richardson_partial(F, x, y, i, j, **kw) for i, j in SLOTS]


def jet_slots(j):
    return [j.v, *j.g, *j.h, *j.t]


def scalar_fn(node):
    return lambda x, y: exprs.eval_scalar(node, {"x": x, "y": y})


def jet_at(node, x, y):
    return exprs.eval_jet(node, {"x": jet_var(0, x), "y": jet_var(1, y)})


# ------------------------------------------------------------ random exprs
def _leaf(rng):
    r = rng.random()
    if r < 0.4:
        return "x"
    if r < 0.8:
        return "y"
    return f"{rng.uniform(-2, 2):.3f}"


def random_expr(rng, depth=3) -> str:
    """Random expression that is smooth and finite on ``[-1, 1]^2``."""
    if depth == 0:
        return _leaf(rng)
    a = random_expr(rng, depth - 1)
    b = random_expr(rng, depth - 1)
    k = rng.integers(0, 16)
    return [
        f"({a} + {b})",
        f"({a} - {b})",
        f"({a} * {b})",
        f"{a} / (1 + ({b})^2)",
        f"sin({a})",
        f"cos({a})",
        f"tanh({a})",
        f"exp(sin({a}))",
        f"sinh(tanh({a}))",
        f"cosh(cos({a}))",
        f"log(2 + sin({a}))",
        f"sqrt(1 + ({a})^2)",
        f"(1 + ({a})^2)^(1/3)",
        f"(2 + cos({a}))^(-3/2)",
        f"({a})^3",
        f"-({a})^2",
    ][k]


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def close(a, b, rel=1e-6):
    """``|a - b| <= rel * max(1, |b|)``, elementwise."""
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    return np.abs(a - b) <= rel * np.maximum(1.0, np.abs(b))


# ------------------------------------------------------- acceptance summary
ACCEPTANCE_LINES: list = []

__all__ = ["richardson_partial", "richardson_slots", "jet_slots", "scalar_fn", "jet_at",
           "random_expr", "close", "SLOTS", "ACCEPTANCE_LINES"]


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
