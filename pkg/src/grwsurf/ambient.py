"""Generalized Robertson-Walker spacetimes ``-I x_f M`` with space-form fibers.

Coordinates are ``(t, p_1, ..., p_m)`` with the time coordinate at index 0.
The fiber ``M`` of constant curvature ``c`` is realised in one conformally
flat chart with factor ``lambda(p) = 1 / (1 + c/4 |p|^2)``, so the metric is

    -dt^2 + f(t)^2 lambda(p)^2 (dp_1^2 + ... + dp_m^2).

All functions accept a single point of shape ``(n,)`` or a batch of shape
``(N, n)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

from . import exprs
from .jets import Jet3, jet_var

__all__ = [
    "ChartError",
    "WarpingFunction",
    "FiberModel",
    "GRWSpacetime",
    "warp_eval",
    "metric_at",
    "connection_coeffs_at",
    "riemann_at",
    "ambient_sectional",
    "minkowski",
]

FD_STEP = 1e-4


class ChartError(ValueError):
    """A point lies outside the interval ``I`` or outside the fiber chart."""


@dataclass(frozen=True)
class WarpingFunction:
    """Positive warping function ``f`` on the open interval ``(t_min, t_max)``."""

    text: str = "1"
    t_min: float = -math.inf
    t_max: float = math.inf
    expr: exprs.Node = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "expr", exprs.parse(self.text, ("t",)))
        if not self.t_min < self.t_max:
            raise ValueError(f"empty interval ({self.t_min}, {self.t_max})")

    @property
    def is_static(self) -> bool:
        return isinstance(self.expr, exprs.Const) and self.expr.value == 1.0

    def check_interval(self, t) -> None:
        t = np.asarray(t)
        if np.any(t <= self.t_min) or np.any(t >= self.t_max):
            raise ChartError(f"time coordinate outside I = ({self.t_min}, {self.t_max})")

    def jet(self, tau: Jet3) -> Jet3:
        """Jet of ``f(tau)`` for a jet-valued time function."""
        self.check_interval(tau.v)
        out = exprs.eval_jet(self.expr, {"t": tau})
        if np.any(np.asarray(out.v) <= 0):
            raise ChartError(f"warping function '{self.text}' is not positive")
        return out


def warp_eval(w: WarpingFunction, t) -> Tuple:
    """Return ``(f, f', f'')`` at ``t`` (scalar or array)."""
    t = np.asarray(t, dtype=float)
    j = w.jet(jet_var(0, t if t.ndim else float(t)))
    return j.v, j.g[0], j.h[0]


@dataclass(frozen=True)
class FiberModel:
    """Space form of curvature ``curvature`` and dimension ``dim`` in a conformal chart."""

    kind: str = "euclidean"
    dim: int = 3
    curvature: float = 0.0

    def __post_init__(self):
        kind = self.kind.lower()
        object.__setattr__(self, "kind", kind)
        if kind not in ("euclidean", "sphere", "hyperbolic"):
            raise ValueError(f"unknown fiber kind {self.kind!r}")
        if self.dim < 2:
            raise ValueError("fiber dimension must be at least 2")
        c = self.curvature
        if kind == "euclidean" and c != 0:
            raise ValueError("euclidean fiber must have curvature 0")
        if kind == "sphere" and not c > 0:
            raise ValueError("sphere fiber needs positive curvature")
        if kind == "hyperbolic" and not c < 0:
            raise ValueError("hyperbolic fiber needs negative curvature")

    @property
    def chart_radius(self) -> float:
        if self.curvature == 0:
            return math.inf
        return 2.0 / math.sqrt(abs(self.curvature))

    def check_chart(self, p) -> None:
        if self.curvature == 0:
            return
        r2 = np.sum(np.asarray(p) ** 2, axis=-1)
        if np.any(r2 >= self.chart_radius ** 2):
            raise ChartError(f"fiber point outside the {self.kind} chart |p| < {self.chart_radius:g}")

    def conformal_factor(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        return 1.0 / (1.0 + 0.25 * self.curvature * np.sum(p * p, axis=-1))


@dataclass(frozen=True)
class GRWSpacetime:
    warping: WarpingFunction = field(default_factory=WarpingFunction)
    fiber: FiberModel = field(default_factory=FiberModel)

    @property
    def n(self) -> int:
        return self.fiber.dim + 1

    @property
    def is_static(self) -> bool:
        return self.warping.is_static

    def __post_init__(self):
        if self.n < 3:
            raise ValueError("ambient dimension must be at least 3")

    def split(self, points) -> Tuple[np.ndarray, np.ndarray]:
        pts = np.asarray(points, dtype=float)
        if pts.shape[-1] != self.n:
            raise ValueError(f"expected points with {self.n} coordinates, got shape {pts.shape}")
        t, p = pts[..., 0], pts[..., 1:]
        self.warping.check_interval(t)
        self.fiber.check_chart(p)
        return t, p


def minkowski(dim: int = 4) -> GRWSpacetime:
    """Lorentz-Minkowski space of dimension ``dim`` as a static GRW spacetime."""
    return GRWSpacetime(WarpingFunction("1"), FiberModel("euclidean", dim - 1, 0.0))


def _fiber_scale(st: GRWSpacetime, points):
    t, p = st.split(points)
    f, f1, f2 = warp_eval(st.warping, t)
    lam = st.fiber.conformal_factor(p)
    return t, p, np.asarray(f), np.asarray(f1), np.asarray(f2), lam


def metric_at(st: GRWSpacetime, point) -> np.ndarray:
    """Metric matrix ``g_ij`` at one point ``(n,)`` or a batch ``(N, n)``."""
    pts = np.asarray(point, dtype=float)
    _, _, f, _, _, lam = _fiber_scale(st, pts)
    n = st.n
    g = np.zeros(pts.shape[:-1] + (n, n))
    g[..., 0, 0] = -1.0
    a = (f * lam) ** 2
    for i in range(1, n):
        g[..., i, i] = a
    return g


def connection_coeffs_at(st: GRWSpacetime, point) -> np.ndarray:
    """Christoffel symbols ``G[..., k, i, j] = Gamma^k_ij`` of the warped metric."""
    pts = np.asarray(point, dtype=float)
    _, p, f, f1, _, lam = _fiber_scale(st, pts)
    n = st.n
    m = n - 1
    c = st.fiber.curvature
    gam = np.zeros(pts.shape[:-1] + (n, n, n))
    hub = f1 / f
    tf = f * f1 * lam ** 2
    # d_i log(lambda) for fiber coordinate i
    dlog = -0.5 * c * p * lam[..., None]
    for i in range(1, n):
        gam[..., 0, i, i] = tf
        gam[..., i, 0, i] = hub
        gam[..., i, i, 0] = hub
    for i in range(m):
        for j in range(m):
            for k in range(m):
                val = 0.0
                if i == j:
                    val = val + dlog[..., k]
                if i == k:
                    val = val + dlog[..., j]
                if j == k:
                    val = val - dlog[..., i]
                if not (i == j or i == k or j == k):
                    continue
                gam[..., i + 1, j + 1, k + 1] = val
    return gam


def _dgamma(st: GRWSpacetime, pts: np.ndarray, h: float) -> np.ndarray:
    """``dG[..., l, k, i, j] = d_l Gamma^k_ij`` by Richardson-extrapolated central differences."""
    n = st.n
    out = np.zeros(pts.shape[:-1] + (n, n, n, n))
    for l in range(n):
        e = np.zeros(n)
        e[l] = h
        d1 = (connection_coeffs_at(st, pts + e) - connection_coeffs_at(st, pts - e)) / (2 * h)
        d2 = (connection_coeffs_at(st, pts + 2 * e) - connection_coeffs_at(st, pts - 2 * e)) / (4 * h)
        out[..., l, :, :, :] = (4.0 * d1 - d2) / 3.0
    return out


def riemann_at(st: GRWSpacetime, point, h: float = FD_STEP) -> np.ndarray:
    """Curvature components ``R[..., l, i, j, k] = R^l_{ijk}``.

    Convention: ``R(d_i, d_j) d_k = R^l_{ijk} d_l`` with
    ``R(X, Y) = [nabla_X, nabla_Y] - nabla_[X, Y]``.
    """
    pts = np.asarray(point, dtype=float)
    gam = connection_coeffs_at(st, pts)
    dg = _dgamma(st, pts, h)
    # d_i Gamma^l_jk - d_j Gamma^l_ik
    term = np.einsum("...iljk->...lijk", dg) - np.einsum("...jlik->...lijk", dg)
    quad = (np.einsum("...lim,...mjk->...lijk", gam, gam)
            - np.einsum("...ljm,...mik->...lijk", gam, gam))
    return term + quad


def inner(st: GRWSpacetime, point, a, b) -> np.ndarray:
    g = metric_at(st, point)
    return np.einsum("...i,...ij,...j->...", a, g, b)


def ambient_sectional(st: GRWSpacetime, point, span, h: float = FD_STEP):
    """Sectional curvature of the plane spanned by ``span = (X, Y)``.

    ``X`` and ``Y`` have the same leading shape as ``point``.  The plane must
    be non-degenerate; otherwise :class:`ValueError` is raised.
    """
    pts = np.asarray(point, dtype=float)
    X = np.asarray(span[0], dtype=float)
    Y = np.asarray(span[1], dtype=float)
    g = metric_at(st, pts)
    xx = np.einsum("...i,...ij,...j->...", X, g, X)
    yy = np.einsum("...i,...ij,...j->...", Y, g, Y)
    xy = np.einsum("...i,...ij,...j->...", X, g, Y)
    q = xx * yy - xy * xy
    scale = np.abs(xx * yy) + xy * xy
    if np.any(np.abs(q) <= 1e-14 * np.maximum(scale, 1e-300)):
        raise ValueError("degenerate plane: Gram determinant vanishes")
    R = riemann_at(st, pts, h)
    # <R(X,Y)Y, X>
    rv = np.einsum("...lijk,...i,...j,...k->...l", R, X, Y, Y)
    num = np.einsum("...l,...lm,...m->...", rv, g, X)
    return num / q


def sectional_closed_form(st: GRWSpacetime, tau, u):
    """Sectional curvature of a spacelike tangent plane from ``f`` and ``u``.

    ``f''/f + (f'^2 - f'' f) u / f^4 + u K_M / f^4``.
    """
    f, f1, f2 = warp_eval(st.warping, tau)
    c = st.fiber.curvature
    return f2 / f + (f1 ** 2 - f2 * f) * u / f ** 4 + u * c / f ** 4
