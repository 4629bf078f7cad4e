"""Built-in surfaces with closed-form oracles.

* ``slice``            -- ``{t0} x M`` in any GRW spacetime (stationary iff f'(t0) = 0)
* ``graph_w``          -- ``(w, x, y, w)`` in L^4 for a harmonic ``w``
* ``enneper_l4``       -- the polynomial stationary surface built from the
  holomorphic data ``(1 - z^2, i(1 + z^2), 2z, sqrt(2)(1 - z^2))``
* ``hyperbolic_slice`` -- ``{t0} x H^2`` in the static spacetime ``-R x H^2``
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Mapping, Optional

import numpy as np

from . import exprs
from .ambient import FiberModel, GRWSpacetime, WarpingFunction, minkowski
from .grids import Grid
from .jets import jet_var
from .surface import Disk, Immersion, Rect

__all__ = [
    "GallerySpec",
    "Instance",
    "NotHarmonicError",
    "list_surfaces",
    "instantiate",
    "check_holomorphic_data",
    "holomorphic_data",
    "ENNEPER_COMPONENTS",
]

SQ2 = math.sqrt(2.0)

ENNEPER_COMPONENTS = (
    "x - x^3/3 + x*y^2",
    "-y - x^2*y + y^3/3",
    "x^2 - y^2",
    "sqrt(2)*x - sqrt(2)/3*x^3 + sqrt(2)*x*y^2",
)


class NotHarmonicError(ValueError):
    """``graph_w`` was given a function whose flat Laplacian does not vanish."""


@dataclass(frozen=True)
class GallerySpec:
    name: str
    parameters: Mapping[str, object]
    oracles: tuple
    description: str = ""


@dataclass
class Instance:
    """An instantiated gallery surface with its oracles and default grid."""

    immersion: Immersion
    grid: Grid
    oracles: Dict[str, Callable] = field(default_factory=dict)
    spec: Optional[GallerySpec] = None

    @property
    def name(self) -> str:
        return self.immersion.name


_SPECS = {
    "slice": GallerySpec(
        "slice",
        {"t0": 0.0, "warping": "1", "fiber": "euclidean", "fiber_dim": 3, "curvature": 0.0},
        ("u", "K"),
        "slice {t0} x M of a GRW spacetime",
    ),
    "graph_w": GallerySpec(
        "graph_w",
        {"w": "x^2-y^2", "extent": 2.0},
        ("u", "metric_factor", "K"),
        "(w, x, y, w) in L^4 for harmonic w",
    ),
    "enneper_l4": GallerySpec(
        "enneper_l4",
        {"extent": 4.0, "grid_radius": 1.5},
        ("u", "metric_factor", "K"),
        "stationary polynomial surface in L^4 from holomorphic data",
    ),
    "hyperbolic_slice": GallerySpec(
        "hyperbolic_slice",
        {"t0": 0.0, "curvature": -1.0},
        ("u", "K"),
        "slice of the static spacetime -R x H^2",
    ),
}


def list_surfaces() -> List[GallerySpec]:
    return [_SPECS[k] for k in sorted(_SPECS)]


def _merge(name: str, params: Optional[Mapping]) -> dict:
    base = dict(_SPECS[name].parameters)
    for k, v in (params or {}).items():
        if k not in base:
            raise ValueError(f"unknown parameter {k!r} for gallery surface {name!r}")
        base[k] = v
    return base


def instantiate(name: str, params: Optional[Mapping] = None,
                spacetime: Optional[GRWSpacetime] = None) -> Instance:
    """Build a gallery surface.

    ``spacetime`` overrides the ambient for ``slice`` (the other surfaces
    live in fixed ambients).
    """
    if name not in _SPECS:
        raise KeyError(f"unknown gallery surface {name!r}; known: {', '.join(sorted(_SPECS))}")
    p = _merge(name, params)
    return _BUILDERS[name](p, spacetime)


def _slice(p, spacetime):
    st = spacetime or GRWSpacetime(
        WarpingFunction(str(p["warping"])),
        FiberModel(str(p["fiber"]), int(p["fiber_dim"]), float(p["curvature"])))
    t0 = float(p["t0"])
    comps = (repr(t0), "x", "y") + ("0",) * (st.n - 3)
    c = st.fiber.curvature
    if c == 0:
        # wide enough for capacity scans out to R = e^4
        domain = Rect(-100.0, 100.0, -100.0, 100.0)
        grid = Grid.rect(-1.0, 1.0, -1.0, 1.0, 21, 21)
    else:
        rad = st.fiber.chart_radius
        domain = Disk(0.0, 0.0, rad, open=True)
        grid = Grid.disk(0.0, 0.0, 0.75 * rad, 21, 21)
    im = Immersion(st, comps, domain, name="slice")
    from .ambient import warp_eval
    f0 = float(warp_eval(st.warping, t0)[0])
    oracles = {
        "u": lambda x, y: np.full(np.broadcast(x, y).shape, f0 ** 2),
        "K": lambda x, y: np.full(np.broadcast(x, y).shape, c / f0 ** 2),
    }
    return Instance(im, grid, oracles, _SPECS["slice"])


def _check_harmonic(w: exprs.Node, extent: float, text: str) -> None:
    xs = np.linspace(-extent, extent, 9)
    X, Y = np.meshgrid(xs, xs)
    j = exprs.eval_jet(w, {"x": jet_var(0, X.ravel()), "y": jet_var(1, Y.ravel())})
    lap = np.broadcast_to(np.asarray(j.h[0]) + np.asarray(j.h[2]), X.ravel().shape)
    worst = int(np.argmax(np.abs(lap)))
    if abs(lap[worst]) > 1e-9 * max(1.0, float(np.max(np.abs(j.h[0])))):
        raise NotHarmonicError(
            f"w = {text} is not harmonic: flat Laplacian {lap[worst]:.6g} at "
            f"({X.ravel()[worst]:g}, {Y.ravel()[worst]:g})")


def _graph_w(p, spacetime):
    text = str(p["w"])
    extent = float(p["extent"])
    w = exprs.parse(text, ("x", "y"))
    _check_harmonic(w, extent, text)
    im = Immersion(minkowski(4), (text, "x", "y", text),
                   Rect(-2 * extent, 2 * extent, -2 * extent, 2 * extent), name="graph_w")

    def u(x, y):
        j = exprs.eval_jet(w, {"x": jet_var(0, np.asarray(x, float)),
                               "y": jet_var(1, np.asarray(y, float))})
        return 1.0 + np.asarray(j.g[0]) ** 2 + np.asarray(j.g[1]) ** 2

    oracles = {
        "u": u,
        "metric_factor": lambda x, y: np.ones(np.broadcast(x, y).shape),
        "K": lambda x, y: np.zeros(np.broadcast(x, y).shape),
    }
    grid = Grid.rect(-extent, extent, -extent, extent, 21, 21)
    return Instance(im, grid, oracles, _SPECS["graph_w"])


def _enneper(p, spacetime):
    extent = float(p["extent"])
    im = Immersion(minkowski(4), ENNEPER_COMPONENTS, Rect(-extent, extent, -extent, extent),
                   name="enneper_l4")
    gr = float(p["grid_radius"])

    def lam(x, y):
        return 1.0 + np.asarray(x) ** 2 + np.asarray(y) ** 2

    oracles = {
        "u": lambda x, y: 2.0 * (lam(x, y) ** 2 - 2.0 * np.asarray(x) ** 2) / lam(x, y) ** 2,
        "metric_factor": lambda x, y: lam(x, y) ** 2,
        "K": lambda x, y: -4.0 / lam(x, y) ** 4,
    }
    return Instance(im, Grid.disk(0.0, 0.0, gr, 21, 21), oracles, _SPECS["enneper_l4"])


def _hyperbolic_slice(p, spacetime):
    c = float(p["curvature"])
    st = GRWSpacetime(WarpingFunction("1"), FiberModel("hyperbolic", 2, c))
    inst = _slice({"t0": p["t0"]}, st)
    inst.immersion = Immersion(st, inst.immersion.components, inst.immersion.domain,
                               name="hyperbolic_slice")
    inst.spec = _SPECS["hyperbolic_slice"]
    return inst


_BUILDERS = {
    "slice": _slice,
    "graph_w": _graph_w,
    "enneper_l4": _enneper,
    "hyperbolic_slice": _hyperbolic_slice,
}


# ------------------------------------------------------- holomorphic data
def holomorphic_data(zr, zi):
    """Real and imaginary parts of ``(1 - z^2, i(1 + z^2), 2z, sqrt(2)(1 - z^2))``.

    Returns two arrays of shape ``(4,) + zr.shape``.
    """
    zr = np.asarray(zr, dtype=float)
    zi = np.asarray(zi, dtype=float)
    sr = zr * zr - zi * zi  # Re z^2
    si = 2.0 * zr * zi      # Im z^2
    re = np.stack([1.0 - sr, -si, 2.0 * zr, SQ2 * (1.0 - sr)])
    im = np.stack([-si, 1.0 + sr, 2.0 * zi, -SQ2 * si])
    return re, im


def check_holomorphic_data(n_samples: int = 100, radius: float = 2.0, seed: int = 0,
                           tolerance: float = 1e-12):
    """Residuals of the null condition and of the positivity identity.

    ``-phi1^2 + phi2^2 + phi3^2 + phi4^2 = 0`` and
    ``-|phi1|^2 + |phi2|^2 + |phi3|^2 + |phi4|^2 = 2 (1 + |z|^2)^2``
    evaluated in split real/imaginary arithmetic at ``z = 0``, ``z = 1`` and
    random points of the disk ``|z| <= radius``.
    """
    from .identities import ResidualReport

    rng = np.random.default_rng(seed)
    rho = radius * np.sqrt(rng.uniform(0.0, 1.0, n_samples))
    ang = rng.uniform(0.0, 2 * np.pi, n_samples)
    zr = np.concatenate([[0.0, 1.0], rho * np.cos(ang)])
    zi = np.concatenate([[0.0, 0.0], rho * np.sin(ang)])
    re, im = holomorphic_data(zr, zi)
    sign = np.array([-1.0, 1.0, 1.0, 1.0])[:, None]
    # phi^2 = (re^2 - im^2) + 2i re im
    null_re = np.sum(sign * (re * re - im * im), axis=0)
    null_im = np.sum(sign * (2.0 * re * im), axis=0)
    pos = np.sum(sign * (re * re + im * im), axis=0)
    target = 2.0 * (1.0 + zr * zr + zi * zi) ** 2
    res = np.maximum(np.hypot(null_re, null_im), np.abs(pos - target))
    return ResidualReport.build("holomorphic_data", res, np.stack([zr, zi], 1), tolerance)
