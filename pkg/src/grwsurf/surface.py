"""Extrinsic geometry of spacelike surfaces in GRW spacetimes.

An :class:`Immersion` maps parameters ``(x, y)`` into ``I x M`` through ``n``
expression strings: component 0 is the time coordinate, the remaining ones
are fiber chart coordinates.  Every evaluation routine accepts a single
parameter pair or an ``(N, 2)`` array and works on the whole batch at once.

Conventions
-----------
* ``H = (sigma(E1, E1) + sigma(E2, E2)) / 2``.
* Shape operators follow ``A_xi X = -(nabla_X xi)^T`` so that
  ``<A_xi X, Y> = <sigma(X, Y), xi>`` for normals of either causal character.
* ``A_time`` is the shape operator of ``T^N`` itself (not of the unit normal),
  hence ``tr(A_time^2) / u`` is the trace for the unit timelike normal.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from . import exprs
from .ambient import (
    GRWSpacetime,
    ambient_sectional,
    connection_coeffs_at,
    metric_at,
    sectional_closed_form,
    warp_eval,
)
from .jets import Jet3, jet_demote, jet_var

__all__ = [
    "NotSpacelikeError",
    "DomainError",
    "Rect",
    "Disk",
    "Immersion",
    "PointFrame",
    "ExtrinsicReport",
    "evaluate_jets",
    "induced_metric",
    "decompose_T",
    "normal_frame",
    "second_fundamental",
    "weingarten",
    "gauss_curvature_intrinsic",
    "laplace_beltrami_u",
    "extrinsic_report",
    "surface_jets",
]

PIVOT_THRESHOLD = 1e-12


class NotSpacelikeError(ValueError):
    """The induced metric is not positive definite at some parameter point."""


class DomainError(ValueError):
    """A parameter point lies outside the immersion's parameter domain."""


@dataclass(frozen=True)
class Rect:
    x0: float
    x1: float
    y0: float
    y1: float

    def contains(self, pts, slack: float = 1e-12) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        return ((pts[..., 0] >= self.x0 - slack) & (pts[..., 0] <= self.x1 + slack)
                & (pts[..., 1] >= self.y0 - slack) & (pts[..., 1] <= self.y1 + slack))

    def contains_disk(self, center, radius: float) -> bool:
        cx, cy = center
        return (cx - radius >= self.x0 - 1e-12 and cx + radius <= self.x1 + 1e-12
                and cy - radius >= self.y0 - 1e-12 and cy + radius <= self.y1 + 1e-12)

    def describe(self) -> dict:
        return {"kind": "rect", "x0": self.x0, "x1": self.x1, "y0": self.y0, "y1": self.y1}


@dataclass(frozen=True)
class Disk:
    cx: float
    cy: float
    radius: float
    open: bool = False

    def contains(self, pts, slack: float = 1e-12) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        d = np.hypot(pts[..., 0] - self.cx, pts[..., 1] - self.cy)
        if self.open:
            return d < self.radius
        return d <= self.radius + slack

    def contains_disk(self, center, radius: float) -> bool:
        d = math.hypot(center[0] - self.cx, center[1] - self.cy) + radius
        return d < self.radius if self.open else d <= self.radius + 1e-12

    def describe(self) -> dict:
        return {"kind": "disk", "cx": self.cx, "cy": self.cy, "radius": self.radius,
                "open": self.open}


Domain = Union[Rect, Disk]


@dataclass(frozen=True)
class Immersion:
    """Parametrised surface ``(x, y) -> (t, p_1, ..., p_m)`` in ``spacetime``."""

    spacetime: GRWSpacetime
    components: Tuple[str, ...]
    domain: Domain = Rect(-1.0, 1.0, -1.0, 1.0)
    name: str = "surface"
    exprs: Tuple[exprs.Node, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        comps = tuple(self.components)
        object.__setattr__(self, "components", comps)
        if len(comps) != self.spacetime.n:
            raise ValueError(f"immersion needs {self.spacetime.n} components, got {len(comps)}")
        object.__setattr__(self, "exprs", exprs.compile_many(comps, ("x", "y")))

    @property
    def n(self) -> int:
        return self.spacetime.n


def _as_points(p) -> Tuple[np.ndarray, bool]:
    pts = np.asarray(p, dtype=float)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    if pts.shape[-1] != 2:
        raise ValueError(f"parameter points must have shape (2,) or (N, 2), got {pts.shape}")
    return pts, single


def _full(j: Jet3, n: int) -> Jet3:
    def b(c):
        return np.broadcast_to(np.asarray(c, dtype=float), (n,)).copy()
    return Jet3(b(j.v), tuple(b(c) for c in j.g), tuple(b(c) for c in j.h),
                tuple(b(c) for c in j.t), j.order)


def evaluate_jets(im: Immersion, p) -> List[Jet3]:
    """Order-3 jets of all components at ``p``."""
    pts, single = _as_points(p)
    inside = im.domain.contains(pts)
    if not np.all(inside):
        bad = pts[~inside][0]
        raise DomainError(f"parameter point ({bad[0]:g}, {bad[1]:g}) outside the domain of {im.name}")
    N = len(pts)
    env = {"x": jet_var(0, pts[:, 0].copy()), "y": jet_var(1, pts[:, 1].copy())}
    jets = [_full(exprs.eval_jet(node, env), N) for node in im.exprs]
    if single:
        jets = [Jet3(j.v[0], tuple(c[0] for c in j.g), tuple(c[0] for c in j.h),
                     tuple(c[0] for c in j.t), j.order) for j in jets]
    return jets


# --------------------------------------------------------------- metric jets
@dataclass
class SurfaceJets:
    """Order-2 jets of the induced metric and of ``u`` over a batch of points.

    ``laplacian`` and ``grad_sq`` apply the Laplace-Beltrami operator and the
    squared gradient norm of the induced metric to any jet on the same batch.
    """

    E: Jet3
    F: Jet3
    G: Jet3
    u: Jet3
    f: Jet3

    def laplacian(self, s: Jet3) -> np.ndarray:
        E, F, G = self.E, self.F, self.G
        det = E * G - F * F
        sq = det ** 0.5
        w11 = sq * G / det
        w12 = -(sq * F) / det
        w22 = sq * E / det
        sx, sy = s.g
        sxx, sxy, syy = s.h
        div = (w11.g[0] * sx + w12.g[0] * sy + w12.g[1] * sx + w22.g[1] * sy
               + w11.v * sxx + 2.0 * w12.v * sxy + w22.v * syy)
        return div / sq.v

    def inverse_metric(self) -> np.ndarray:
        E, F, G = self.E.v, self.F.v, self.G.v
        det = E * G - F * F
        return np.stack([np.stack([G, -F], -1), np.stack([-F, E], -1)], -2) / det[..., None, None]

    def grad_sq(self, s: Jet3) -> np.ndarray:
        gi = self.inverse_metric()
        d = np.stack(s.g, -1)
        return np.einsum("...a,...ab,...b->...", d, gi, d)

    def gauss_curvature(self) -> np.ndarray:
        """Brioschi formula on the metric jets."""
        E, F, G = self.E, self.F, self.G
        Eu, Ev = E.g
        Fu, Fv = F.g
        Gu, Gv = G.g
        Evv = E.h[2]
        Fuv = F.h[1]
        Guu = G.h[0]
        e, f, g = E.v, F.v, G.v
        a11 = -0.5 * Evv + Fuv - 0.5 * Guu
        m1 = np.array([[a11, 0.5 * Eu, Fu - 0.5 * Ev],
                       [Fv - 0.5 * Gu, e, f],
                       [0.5 * Gv, f, g]])
        m2 = np.array([[np.zeros_like(e), 0.5 * Ev, 0.5 * Gu],
                       [0.5 * Ev, e, f],
                       [0.5 * Gu, f, g]])
        d1 = np.linalg.det(np.moveaxis(m1, (0, 1), (-2, -1)))
        d2 = np.linalg.det(np.moveaxis(m2, (0, 1), (-2, -1)))
        return (d1 - d2) / (e * g - f * f) ** 2


def surface_jets(im: Immersion, comps: Sequence[Jet3]) -> SurfaceJets:
    """Build metric and ``u`` jets from order-3 component jets."""
    st = im.spacetime
    tau = comps[0]
    fj = st.warping.jet(tau)
    c = st.fiber.curvature
    scale = fj
    if c != 0:
        r2 = comps[1] * comps[1]
        for q in comps[2:]:
            r2 = r2 + q * q
        scale = fj / (1.0 + (0.25 * c) * r2)
    s2 = scale * scale
    dt = [jet_demote(tau, a) for a in (0, 1)]
    dp = [[jet_demote(q, a) for a in (0, 1)] for q in comps[1:]]

    def fiber_dot(a, b):
        acc = dp[0][a] * dp[0][b]
        for q in dp[1:]:
            acc = acc + q[a] * q[b]
        return acc

    E = s2 * fiber_dot(0, 0) - dt[0] * dt[0]
    F = s2 * fiber_dot(0, 1) - dt[0] * dt[1]
    G = s2 * fiber_dot(1, 1) - dt[1] * dt[1]
    det = E * G - F * F
    grad_tau_sq = (G * dt[0] * dt[0] - 2.0 * F * dt[0] * dt[1] + E * dt[1] * dt[1]) / det
    f2 = fj * fj
    u = f2 * (1.0 + grad_tau_sq)
    return SurfaceJets(E, F, G, u, fj)


# ---------------------------------------------------------------- state core
@dataclass(frozen=True)
class PointFrame:
    """Adapted frame: orthonormal tangents, spacelike normals, unit timelike normal.

    Arrays carry a leading batch axis unless a single point was requested.
    ``coeffs[..., i, a]`` expresses ``E_i = coeffs[i, a] d_a x``.
    """

    p: np.ndarray
    E1: np.ndarray
    E2: np.ndarray
    normals: np.ndarray  # (..., n-3, n)
    xi_time: np.ndarray
    coeffs: np.ndarray

    def gram(self, st: GRWSpacetime, point) -> np.ndarray:
        vecs = np.concatenate([self.E1[..., None, :], self.E2[..., None, :], self.normals,
                               self.xi_time[..., None, :]], axis=-2)
        g = metric_at(st, point)
        return np.einsum("...ai,...ij,...bj->...ab", vecs, g, vecs)


@dataclass
class _State:
    pts: np.ndarray
    comps: List[Jet3]
    X: np.ndarray
    dX: np.ndarray      # (N, 2, n)
    ddX: np.ndarray     # (N, 2, 2, n)
    G: np.ndarray       # ambient metric (N, n, n)
    g: np.ndarray       # induced metric (N, 2, 2)
    f: np.ndarray
    f1: np.ndarray
    f2: np.ndarray
    T: np.ndarray
    T_tan: np.ndarray
    T_nor: np.ndarray
    u: np.ndarray
    frame: Optional[PointFrame] = None


def _dot(G, a, b):
    return np.einsum("...i,...ij,...j->...", a, G, b)


def _state(im: Immersion, p) -> Tuple[_State, bool]:
    pts, single = _as_points(p)
    comps = evaluate_jets(im, pts)
    st = im.spacetime
    X = np.stack([c.v for c in comps], -1)
    dX = np.stack([np.stack([c.g[a] for c in comps], -1) for a in (0, 1)], 1)
    ddX = np.stack([np.stack([np.stack([c.d2(a, b) for c in comps], -1) for b in (0, 1)], 1)
                    for a in (0, 1)], 1)
    G = metric_at(st, X)
    g = np.einsum("nai,nij,nbj->nab", dX, G, dX)
    det = g[:, 0, 0] * g[:, 1, 1] - g[:, 0, 1] ** 2
    bad = ~((det > 0) & (g[:, 0, 0] + g[:, 1, 1] > 0))
    if np.any(bad):
        q = pts[bad][0]
        raise NotSpacelikeError(f"{im.name} is not spacelike at ({q[0]:g}, {q[1]:g})")
    f, f1, f2 = (np.broadcast_to(np.asarray(v, dtype=float), (len(pts),))
                 for v in warp_eval(st.warping, X[:, 0]))
    T = np.zeros_like(X)
    T[:, 0] = f
    gi = np.linalg.inv(g)
    Tdot = np.einsum("ni,nij,naj->na", T, G, dX)
    T_tan = np.einsum("nab,na,nbi->ni", gi, Tdot, dX)
    T_nor = T - T_tan
    u = -_dot(G, T_nor, T_nor)
    return _State(pts, comps, X, dX, ddX, G, g, f, f1, f2, T, T_tan, T_nor, u), single


def _frame(s: _State, n: int) -> PointFrame:
    G = s.G
    d0, d1 = s.dX[:, 0], s.dX[:, 1]
    n0 = np.sqrt(_dot(G, d0, d0))
    E1 = d0 / n0[:, None]
    c = _dot(G, d1, E1)
    w = d1 - c[:, None] * E1
    nw = np.sqrt(_dot(G, w, w))
    E2 = w / nw[:, None]
    N = len(s.pts)
    coeffs = np.zeros((N, 2, 2))
    coeffs[:, 0, 0] = 1.0 / n0
    coeffs[:, 1, 0] = -c / (n0 * nw)
    coeffs[:, 1, 1] = 1.0 / nw
    xi_t = s.T_nor / np.sqrt(s.u)[:, None]

    # spacelike normals: pivoted Gram-Schmidt over coordinate directions
    chosen = []
    basis = np.broadcast_to(np.eye(n), (N, n, n))
    for _ in range(n - 3):
        r = basis.copy()
        # timelike unit normal enters with the opposite sign
        for v, sign in [(E1, 1.0), (E2, 1.0), (xi_t, -1.0)] + [(v, 1.0) for v in chosen]:
            r = r - sign * np.einsum("nki,nij,nj->nk", r, G, v)[:, :, None] * v[:, None, :]
        norms2 = np.einsum("nki,nij,nkj->nk", r, G, r)
        best = np.argmax(norms2, axis=1)
        top = norms2[np.arange(N), best]
        if np.any(top < PIVOT_THRESHOLD ** 2):
            raise ValueError("normal frame construction degenerated")
        v = r[np.arange(N), best] / np.sqrt(top)[:, None]
        chosen.append(v)
    normals = np.stack(chosen, 1) if chosen else np.zeros((N, 0, n))
    return PointFrame(s.pts, E1, E2, normals, xi_t, coeffs)


def _squeeze(obj, single: bool):
    if not single:
        return obj
    if isinstance(obj, np.ndarray):
        return obj[0]
    return obj


def induced_metric(im: Immersion, p) -> np.ndarray:
    """Induced metric ``g_ab = <d_a x, d_b x>``; raises if not spacelike."""
    s, single = _state(im, p)
    return _squeeze(s.g, single)


def decompose_T(im: Immersion, p):
    """Split ``T = f(tau) d/dt`` into tangent and normal parts; also return ``u``."""
    s, single = _state(im, p)
    return _squeeze(s.T_tan, single), _squeeze(s.T_nor, single), _squeeze(s.u, single)


def normal_frame(im: Immersion, p) -> PointFrame:
    s, single = _state(im, p)
    fr = _frame(s, im.n)
    if single:
        fr = PointFrame(*(a[0] for a in (fr.p, fr.E1, fr.E2, fr.normals, fr.xi_time, fr.coeffs)))
    return fr


def _sigma(im: Immersion, s: _State, fr: PointFrame):
    gam = connection_coeffs_at(im.spacetime, s.X)
    raw = s.ddX + np.einsum("nkij,nai,nbj->nabk", gam, s.dX, s.dX)
    sE = np.einsum("nia,njb,nabk->nijk", fr.coeffs, fr.coeffs, raw)
    nvecs = np.concatenate([fr.normals, fr.xi_time[:, None, :]], 1)
    eps = np.ones(nvecs.shape[1])
    eps[-1] = -1.0
    # shape operator entries <sigma(E_i, E_j), nu_k>
    A = np.einsum("nijk,nkl,nml->nmij", sE, s.G, nvecs)
    sN = np.einsum("m,nmij,nml->nijl", eps, A, nvecs)
    return sN, A


def _frame_batch(fr: PointFrame) -> PointFrame:
    if fr.E1.ndim == 1:
        return PointFrame(*(np.asarray(a)[None] for a in (fr.p, fr.E1, fr.E2, fr.normals,
                                                          fr.xi_time, fr.coeffs)))
    return fr


def second_fundamental(im: Immersion, p, frame: Optional[PointFrame] = None):
    """Return ``(sigma, H)``.

    ``sigma`` stacks ``sigma(E1,E1), sigma(E1,E2), sigma(E2,E2)`` along
    axis -2; ``H`` is the mean curvature vector.
    """
    s, single = _state(im, p)
    fr = _frame(s, im.n) if frame is None else _frame_batch(frame)
    sN, _ = _sigma(im, s, fr)
    sig = np.stack([sN[:, 0, 0], sN[:, 0, 1], sN[:, 1, 1]], 1)
    H = 0.5 * (sN[:, 0, 0] + sN[:, 1, 1])
    return _squeeze(sig, single), _squeeze(H, single)


def weingarten(im: Immersion, p, frame: Optional[PointFrame] = None, normal="time") -> np.ndarray:
    """Matrix of the shape operator in the ``E`` basis.

    ``normal`` is ``"time"`` for ``T^N``, ``"xi_time"`` for the unit
    timelike normal, or an integer ``i`` (0-based) for the spacelike
    normal ``xi_{i+1}``.
    """
    s, single = _state(im, p)
    fr = _frame(s, im.n) if frame is None else _frame_batch(frame)
    _, A = _sigma(im, s, fr)
    if normal == "time":
        out = A[:, -1] * np.sqrt(s.u)[:, None, None]
    elif normal == "xi_time":
        out = A[:, -1]
    elif isinstance(normal, (int, np.integer)) and 0 <= normal < im.n - 3:
        out = A[:, normal]
    else:
        raise ValueError(f"unknown normal selector {normal!r}")
    return _squeeze(out, single)


def gauss_curvature_intrinsic(im: Immersion, p):
    """Gauss curvature of the induced metric (Brioschi formula)."""
    s, single = _state(im, p)
    return _squeeze(surface_jets(im, s.comps).gauss_curvature(), single)


def laplace_beltrami_u(im: Immersion, p):
    """Return ``(grad_u, |grad u|^2, lap_u, lap_log_u)``; ``grad_u`` is in the E basis."""
    s, single = _state(im, p)
    fr = _frame(s, im.n)
    sj = surface_jets(im, s.comps)
    out = _u_derivatives(sj, fr)
    return tuple(_squeeze(a, single) for a in out)


def _u_derivatives(sj: SurfaceJets, fr: PointFrame):
    u = sj.u
    du = np.stack(u.g, -1)
    grad_E = np.einsum("nia,na->ni", fr.coeffs, du)
    gsq = sj.grad_sq(u)
    lap = sj.laplacian(u)
    lap_log = lap / u.v - gsq / u.v ** 2
    return grad_E, gsq, lap, lap_log


@dataclass
class ExtrinsicReport:
    """Per-point extrinsic data; every array has a leading batch axis."""

    p: np.ndarray
    tau: np.ndarray
    f: np.ndarray
    f1: np.ndarray
    f2: np.ndarray
    K_M: float
    u: np.ndarray
    T_tan: np.ndarray
    T_nor: np.ndarray
    T_tan_sq: np.ndarray
    T_tan_E: np.ndarray
    grad_tau_sq: np.ndarray
    sigma: np.ndarray
    H: np.ndarray
    H_norm: np.ndarray
    sigma_norm: np.ndarray
    A_time: np.ndarray
    A_spacelike: np.ndarray
    tr_A2_time: np.ndarray
    tr_A2_space: np.ndarray
    Kbar: np.ndarray
    Kbar_lemma: np.ndarray
    Kbar_diff: np.ndarray
    K_intrinsic: np.ndarray
    K_gauss: np.ndarray
    grad_u: np.ndarray
    grad_u_sq: np.ndarray
    lap_u: np.ndarray
    lap_log_u: np.ndarray
    frame: PointFrame = field(repr=False)
    jets: SurfaceJets = field(repr=False)

    @property
    def sum_tr_A2_space(self) -> np.ndarray:
        return self.tr_A2_space.sum(axis=-1)

    def __len__(self) -> int:
        return len(self.p)


def extrinsic_report(im: Immersion, p) -> ExtrinsicReport:
    """Evaluate every extrinsic quantity at one point or a batch.

    The report always carries a leading batch axis, even for a single point.
    """
    s, _ = _state(im, p)
    st = im.spacetime
    fr = _frame(s, im.n)
    sN, A = _sigma(im, s, fr)
    sig = np.stack([sN[:, 0, 0], sN[:, 0, 1], sN[:, 1, 1]], 1)
    H = 0.5 * (sN[:, 0, 0] + sN[:, 1, 1])
    G = s.G
    # H measured through its coefficients in the orthonormal normal frame, so
    # a null mean curvature vector still registers
    H_norm = np.sqrt(np.sum((0.5 * (A[:, :, 0, 0] + A[:, :, 1, 1])) ** 2, axis=1))
    # coefficient norm of sigma in the orthonormal normal frame
    sigma_norm = np.sqrt(np.einsum("nmij,nmij->n", A, A))
    A_time = A[:, -1] * np.sqrt(s.u)[:, None, None]
    A_space = A[:, :-1]
    tr_time = np.einsum("nij,nij->n", A_time, A_time)
    tr_space = np.einsum("nmij,nmij->nm", A_space, A_space)
    Kbar = ambient_sectional(st, s.X, (fr.E1, fr.E2))
    Kbar_lemma = np.broadcast_to(sectional_closed_form(st, s.X[:, 0], s.u), s.u.shape)
    sj = surface_jets(im, s.comps)
    K_int = sj.gauss_curvature()
    K_gauss = Kbar - 0.5 * tr_space.sum(axis=1) + 0.5 * tr_time / s.u
    grad_E, gsq, lap, lap_log = _u_derivatives(sj, fr)
    T_tan_sq = _dot(G, s.T_tan, s.T_tan)
    T_tan_E = np.stack([_dot(G, s.T_tan, fr.E1), _dot(G, s.T_tan, fr.E2)], 1)
    dtau = s.dX[:, :, 0]
    gi = np.linalg.inv(s.g)
    grad_tau_sq = np.einsum("na,nab,nb->n", dtau, gi, dtau)
    return ExtrinsicReport(
        p=s.pts, tau=s.X[:, 0], f=s.f, f1=s.f1, f2=s.f2, K_M=st.fiber.curvature,
        u=s.u, T_tan=s.T_tan, T_nor=s.T_nor, T_tan_sq=T_tan_sq, T_tan_E=T_tan_E,
        grad_tau_sq=grad_tau_sq,
        sigma=sig, H=H, H_norm=H_norm, sigma_norm=sigma_norm,
        A_time=A_time, A_spacelike=A_space, tr_A2_time=tr_time, tr_A2_space=tr_space,
        Kbar=Kbar, Kbar_lemma=Kbar_lemma, Kbar_diff=Kbar - Kbar_lemma,
        K_intrinsic=K_int, K_gauss=K_gauss,
        grad_u=grad_E, grad_u_sq=gsq, lap_u=lap, lap_log_u=lap_log,
        frame=fr, jets=sj,
    )
