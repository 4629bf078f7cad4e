"""Capacity of geodesic annuli on a spacelike surface.

The surface is discretised locally by a polar triangulation of a parameter
disk.  Geodesic distance comes from Dijkstra on the edge graph, the
harmonic measure of an annulus from linear finite elements for the induced
metric, and the capacity is the Dirichlet energy of that solution.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.sparse import coo_matrix, csr_matrix
from scipy.sparse.csgraph import connected_components, dijkstra
from scipy.sparse.linalg import LinearOperator, cg

from .ambient import metric_at
from .surface import (
    Immersion,
    NotSpacelikeError,
    Rect,
    evaluate_jets,
    laplace_beltrami_u,
)

__all__ = [
    "MeshError",
    "SolverError",
    "TriMesh",
    "CapacityResult",
    "ScanConfig",
    "ScanResult",
    "build_mesh",
    "geodesic_distance",
    "harmonic_measure",
    "capacity",
    "parabolicity_scan",
    "check_energy_capacity_bound",
    "capacities_to_csv",
]

SOLVER_RTOL = 1e-10


class MeshError(ValueError):
    """Invalid mesh request or a mesh unusable for the requested solve."""


class SolverError(RuntimeError):
    """Conjugate gradients did not reach the requested residual."""


@dataclass(frozen=True)
class ScanConfig:
    """Thresholds used to label a capacity scan."""

    fit_tolerance: float = 0.20
    plateau_tolerance: float = 0.01
    plateau_floor: float = 1e-3


@dataclass
class TriMesh:
    """Triangulated parameter disk carrying the induced metric at each vertex.

    ``rings`` holds the vertex index range of each ring (the center is
    ring 0) and ``ring_distance`` the metric distance of each ring measured
    along the spokes.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    metrics: np.ndarray
    center: Tuple[float, float]
    center_index: int = 0
    ring_radius: np.ndarray = field(default_factory=lambda: np.zeros(1))
    ring_distance: np.ndarray = field(default_factory=lambda: np.zeros(1))
    n_spokes: int = 0
    distance: Optional[np.ndarray] = None
    immersion: Optional[Immersion] = field(default=None, repr=False)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    def edges(self) -> np.ndarray:
        t = self.triangles
        e = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        e.sort(axis=1)
        return np.unique(e, axis=0)

    def param_radius(self) -> np.ndarray:
        c = np.asarray(self.center)
        return np.hypot(*(self.vertices - c).T)

    def stats(self) -> dict:
        return {"vertices": self.n_vertices, "triangles": len(self.triangles),
                "rings": len(self.ring_radius), "spokes": self.n_spokes}


@dataclass(frozen=True)
class CapacityResult:
    r: float
    R: float
    capacity: float
    dofs: int
    solver_residual: float
    mode: str = "geodesic"

    def row(self) -> dict:
        return {"r": self.r, "R": self.R, "capacity": self.capacity, "dofs": self.dofs,
                "residual": self.solver_residual}


def _param_metric(im: Immersion, pts: np.ndarray) -> np.ndarray:
    """Induced metric in parameter coordinates, shape ``(N, 2, 2)``."""
    jets = evaluate_jets(im, pts)
    X = np.stack([j.v for j in jets], -1)
    dX = np.stack([np.stack([j.g[a] for j in jets], -1) for a in (0, 1)], 1)
    G = metric_at(im.spacetime, X)
    g = np.einsum("nai,nij,nbj->nab", dX, G, dX)
    det = g[:, 0, 0] * g[:, 1, 1] - g[:, 0, 1] ** 2
    bad = ~((det > 0) & (g[:, 0, 0] + g[:, 1, 1] > 0))
    if np.any(bad):
        q = pts[bad][0]
        raise NotSpacelikeError(f"{im.name} is not spacelike at ({q[0]:g}, {q[1]:g})")
    return g


def _check_disk(im: Immersion, center, extent: float) -> None:
    if not im.domain.contains_disk(center, extent):
        raise MeshError(f"disk of radius {extent:g} about ({center[0]:g}, {center[1]:g}) "
                        f"is not inside the domain of {im.name}")


def _max_extent(im: Immersion, center) -> float:
    d = im.domain
    cx, cy = center
    if isinstance(d, Rect):
        return min(cx - d.x0, d.x1 - cx, cy - d.y0, d.y1 - cy)
    rad = d.radius - math.hypot(cx - d.cx, cy - d.cy)
    # stay strictly inside an open chart
    return rad * (1.0 - 1e-6) if d.open else rad


def build_mesh(im: Immersion, center=(0.0, 0.0), extent: Optional[float] = None,
               h: float = 0.05, growth: Optional[float] = None,
               n_spokes: Optional[int] = None, stop_distance: Optional[float] = None,
               snap: Sequence[float] = (), snap_mode: str = "geodesic") -> TriMesh:
    """Polar triangulation of the parameter disk ``|p - center| <= extent``.

    Rings are spaced so that the longest radial edge has metric length
    ``h`` (or ``growth * distance`` once that is larger).  The number of
    spokes is fixed, ``ceil(2 pi / h)`` by default, so spokes are straight
    lines in parameter space.  Rings are placed exactly on the values in
    ``snap``, read as metric distances (``snap_mode="geodesic"``) or
    parameter radii (``"parameter"``).  Meshing stops at ``extent`` or
    once the ring distance reaches ``stop_distance``.
    """
    if not h > 0:
        raise MeshError(f"mesh size must be positive, got {h!r}")
    if growth is not None and growth < 0:
        raise MeshError("growth must be non-negative")
    if snap_mode not in ("geodesic", "parameter"):
        raise MeshError(f"unknown snap mode {snap_mode!r}")
    center = (float(center[0]), float(center[1]))
    if extent is None:
        extent = _max_extent(im, center)
    if not extent > 0:
        raise MeshError(f"extent must be positive, got {extent!r}")
    _check_disk(im, center, extent)
    ns = int(n_spokes) if n_spokes else max(8, int(math.ceil(2 * math.pi / h)))
    ang = 2 * math.pi * np.arange(ns) / ns
    dirs = np.stack([np.cos(ang), np.sin(ang)], 1)
    c = np.asarray(center)

    def radial_rate(s: float) -> np.ndarray:
        g = _param_metric(im, c + s * dirs)
        return np.sqrt(np.einsum("na,nab,nb->n", dirs, g, dirs))

    def seg_length(s0: float, ds: float, r0: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        # Simpson's rule along every spoke; returns (lengths, rate at the end)
        rm = radial_rate(s0 + 0.5 * ds)
        r1 = radial_rate(s0 + ds)
        return ds * (r0 + 4.0 * rm + r1) / 6.0, r1

    targets = sorted(float(v) for v in snap if v > 0)
    radii = [0.0]
    dist = [0.0]
    cum = np.zeros(ns)
    s = 0.0
    rate = radial_rate(0.0)
    stop = math.inf if stop_distance is None else float(stop_distance)
    while s < extent * (1 - 1e-12) and dist[-1] < stop:
        D = dist[-1]
        step = h if growth is None else max(h, growth * D)
        pending = [v for v in targets if v > (s if snap_mode == "parameter" else D) + 1e-12]
        goal = D + step
        exact = None
        if pending:
            nxt = pending[0]
            if snap_mode == "geodesic" and nxt < goal + 0.5 * step:
                goal = nxt
            elif snap_mode == "parameter":
                exact = nxt
        ds = (goal - D) / max(float(rate.max()), 1e-300)
        if exact is not None and s + ds >= exact - 0.5 * ds:
            ds = exact - s
        else:
            exact = None
            for _ in range(4):
                ds = min(ds, extent - s)
                lens, _ = seg_length(s, ds, rate)
                got = float((cum + lens).max()) - D
                if got <= 0:
                    break
                ds *= (goal - D) / got
        ds = min(ds, extent - s)
        if extent - s - ds < 0.25 * ds:
            ds = extent - s
        lens, rate_new = seg_length(s, ds, rate)
        s = extent if ds == extent - s else s + ds
        cum = cum + lens
        rate = rate_new
        radii.append(s)
        dist.append(float(cum.max()))
    radii = np.asarray(radii)
    nr = len(radii) - 1
    if nr < 1:
        raise MeshError("mesh has no rings")
    verts = [c[None, :]]
    for k in range(1, nr + 1):
        verts.append(c + radii[k] * dirs)
    V = np.concatenate(verts)
    tris = []
    j = np.arange(ns)
    jn = (j + 1) % ns
    ring1 = 1 + j
    tris.append(np.stack([np.zeros(ns, int), ring1, 1 + jn], 1))
    for k in range(1, nr):
        a = 1 + (k - 1) * ns
        b = 1 + k * ns
        # split each trapezoid along the same diagonal orientation
        tris.append(np.stack([a + j, b + j, b + jn], 1))
        tris.append(np.stack([a + j, b + jn, a + jn], 1))
    T = np.concatenate(tris).astype(np.int64)
    metrics = _param_metric(im, V)
    return TriMesh(V, T, metrics, center, 0, radii, np.asarray(dist), ns, None, im)


def _edge_graph(mesh: TriMesh) -> csr_matrix:
    e = mesh.edges()
    d = mesh.vertices[e[:, 1]] - mesh.vertices[e[:, 0]]
    gm = 0.5 * (mesh.metrics[e[:, 0]] + mesh.metrics[e[:, 1]])
    w = np.sqrt(np.einsum("na,nab,nb->n", d, gm, d))
    n = mesh.n_vertices
    return coo_matrix((w, (e[:, 0], e[:, 1])), shape=(n, n)).tocsr()


def geodesic_distance(mesh: TriMesh, center=None) -> np.ndarray:
    """Graph distance from ``center`` (a mesh vertex) with metric edge lengths.

    The result is also stored on ``mesh.distance``.
    """
    if center is None:
        idx = mesh.center_index
    else:
        d = np.hypot(*(mesh.vertices - np.asarray(center, float)).T)
        idx = int(np.argmin(d))
        if d[idx] > 1e-12:
            raise MeshError(f"center ({center[0]:g}, {center[1]:g}) is not a mesh vertex")
    graph = _edge_graph(mesh)
    ncomp, _ = connected_components(graph, directed=False)
    if ncomp != 1:
        raise MeshError("mesh edge graph is disconnected")
    dist = dijkstra(graph, directed=False, indices=idx)
    mesh.distance = dist
    return dist


def _stiffness(mesh: TriMesh) -> csr_matrix:
    V, T = mesh.vertices, mesh.triangles
    p0, p1, p2 = V[T[:, 0]], V[T[:, 1]], V[T[:, 2]]
    e1, e2 = p1 - p0, p2 - p0
    det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    if np.any(det <= 0):
        raise MeshError("mesh has degenerate or negatively oriented triangles")
    area = 0.5 * det
    # gradients of the barycentric functions in parameter coordinates
    B = np.empty((len(T), 2, 3))
    B[:, 0, 1] = e2[:, 1] / det
    B[:, 1, 1] = -e2[:, 0] / det
    B[:, 0, 2] = -e1[:, 1] / det
    B[:, 1, 2] = e1[:, 0] / det
    B[:, :, 0] = -B[:, :, 1] - B[:, :, 2]
    G = mesh.metrics[T].mean(axis=1)
    gdet = G[:, 0, 0] * G[:, 1, 1] - G[:, 0, 1] ** 2
    Ginv = np.linalg.inv(G)
    Ke = (area * np.sqrt(gdet))[:, None, None] * np.einsum("nai,nab,nbj->nij", B, Ginv, B)
    rows = np.repeat(T, 3, axis=1).ravel()
    cols = np.tile(T, (1, 3)).ravel()
    n = mesh.n_vertices
    return coo_matrix((Ke.ravel(), (rows, cols)), shape=(n, n)).tocsr()


def _vertex_length(mesh: TriMesh) -> np.ndarray:
    """Shortest metric length of the edges incident to each vertex."""
    e = mesh.edges()
    d = mesh.vertices[e[:, 1]] - mesh.vertices[e[:, 0]]
    gm = 0.5 * (mesh.metrics[e[:, 0]] + mesh.metrics[e[:, 1]])
    w = np.sqrt(np.einsum("na,nab,nb->n", d, gm, d))
    out = np.full(mesh.n_vertices, np.inf)
    np.minimum.at(out, e[:, 0], w)
    np.minimum.at(out, e[:, 1], w)
    return out


def _radius_field(mesh: TriMesh, mode: str) -> np.ndarray:
    if mode == "geodesic":
        return mesh.distance if mesh.distance is not None else geodesic_distance(mesh)
    if mode == "parameter":
        return mesh.param_radius()
    raise ValueError(f"unknown radius mode {mode!r}")


def _solve(mesh: TriMesh, r: float, R: float, mode: str):
    if not 0 < r < R:
        raise MeshError(f"need 0 < r < R, got r={r!r}, R={R!r}")
    dist = _radius_field(mesh, mode)
    if mode == "geodesic":
        ell = _vertex_length(mesh)
    else:
        e = mesh.edges()
        w = np.linalg.norm(mesh.vertices[e[:, 1]] - mesh.vertices[e[:, 0]], axis=1)
        ell = np.full(mesh.n_vertices, np.inf)
        np.minimum.at(ell, e[:, 0], w)
        np.minimum.at(ell, e[:, 1], w)
    inner = dist < r + 0.5 * ell
    outer = dist > R - 0.5 * ell
    if not outer.any() or dist.max() < R - 1e-9 * max(1.0, R):
        raise MeshError(f"mesh does not reach R = {R:g} (max distance {dist.max():.6g})")
    if np.any(inner & outer):
        raise MeshError("boundary bands overlap; refine the mesh")
    free = ~(inner | outer)
    if not free.any():
        raise MeshError(f"annulus ({r:g}, {R:g}) contains no free vertices")
    e = mesh.edges()
    if np.any((inner[e[:, 0]] & outer[e[:, 1]]) | (outer[e[:, 0]] & inner[e[:, 1]])):
        raise MeshError("boundary bands are adjacent; refine the mesh")
    A = _stiffness(mesh)
    omega = np.where(outer, 1.0, 0.0)
    fi = np.flatnonzero(free)
    Aff = A[fi][:, fi]
    b = -(A[fi] @ omega)
    dinv = 1.0 / Aff.diagonal()
    M = LinearOperator(Aff.shape, matvec=lambda x: dinv * x, dtype=float)
    maxiter = int(math.ceil(50 * math.sqrt(len(fi))))
    x, info = cg(Aff, b, rtol=SOLVER_RTOL, atol=0.0, maxiter=maxiter, M=M)
    bn = float(np.linalg.norm(b))
    res = float(np.linalg.norm(Aff @ x - b)) / bn if bn > 0 else 0.0
    if info != 0 and res > SOLVER_RTOL:
        raise SolverError(f"conjugate gradients stopped after {maxiter} iterations "
                          f"with relative residual {res:.3g}")
    omega[fi] = x
    return omega, A, res, len(fi)


def harmonic_measure(mesh: TriMesh, r: float, R: float, mode: str = "geodesic") -> np.ndarray:
    """Discrete harmonic measure of the outer boundary of the annulus ``r < d < R``.

    Vertices with ``d < r + l/2`` are fixed to 0 and those with
    ``d > R - l/2`` to 1, where ``l`` is the shortest incident edge.  ``d``
    is geodesic distance, or parameter radius when ``mode="parameter"``.
    """
    return _solve(mesh, r, R, mode)[0]


def capacity(mesh: TriMesh, r: float, R: float, mode: str = "geodesic") -> CapacityResult:
    """Dirichlet energy of the harmonic measure of the annulus."""
    omega, A, res, dofs = _solve(mesh, r, R, mode)
    energy = float(omega @ (A @ omega))
    return CapacityResult(float(r), float(R), max(energy, 0.0), dofs, res, mode)


@dataclass
class ScanResult:
    results: List[CapacityResult]
    verdict: str
    details: dict

    def to_dict(self) -> dict:
        return {"verdict": self.verdict, "details": self.details,
                "results": [c.row() for c in self.results]}


def _verdict(r: float, R: Sequence[float], caps: Sequence[float], cfg: ScanConfig):
    caps = np.asarray(caps, float)
    R = np.asarray(R, float)
    if len(caps) < 2:
        return "inconclusive", {"reason": "a single radius cannot show a trend"}
    logs = np.log(R / r)
    c_fit = float(np.mean(caps * logs))
    fit_err = np.abs(caps - c_fit / logs) / (c_fit / logs)
    decreasing = bool(np.all(np.diff(caps) < 0))
    last_change = float(abs(caps[-1] - caps[-2]) / caps[-1]) if caps[-1] > 0 else math.inf
    details = {"log_fit_constant": c_fit, "max_log_fit_error": float(fit_err.max()),
               "strictly_decreasing": decreasing, "last_relative_change": last_change}
    if decreasing and fit_err.max() <= cfg.fit_tolerance:
        return "decaying", details
    if last_change < cfg.plateau_tolerance and caps[-1] > cfg.plateau_floor:
        return "plateau", details
    return "inconclusive", details


def parabolicity_scan(im: Immersion, center=(0.0, 0.0), r: float = 1.0,
                      R_list: Sequence[float] = (), h: float = 0.05,
                      growth: Optional[float] = None, mesh: Optional[TriMesh] = None,
                      config: ScanConfig = ScanConfig()) -> ScanResult:
    """Capacities of ``B_R \\ B_r`` for increasing ``R`` and a trend label.

    ``"decaying"`` means strictly decreasing with every value within the fit
    tolerance of ``c / log(R / r)``; ``"plateau"`` means the last relative
    change is below the plateau tolerance while the value stays above the
    floor.  Labels are evidence from finitely many radii, nothing more.
    """
    R_list = [float(v) for v in R_list]
    if not R_list:
        raise ValueError("R_list is empty")
    if any(b <= a for a, b in zip(R_list, R_list[1:])):
        raise ValueError("R_list must be strictly increasing")
    if mesh is None:
        top = R_list[-1]
        mesh = build_mesh(im, center, None, h, growth=growth,
                          stop_distance=top + 2 * h * (1 + (growth or 0) * top / h),
                          snap=[r] + R_list)
    if mesh.distance is None:
        geodesic_distance(mesh)
    results = [capacity(mesh, r, R) for R in R_list]
    caps = [c.capacity for c in results]
    if any(b > a * (1 + 1e-9) for a, b in zip(caps, caps[1:])):
        raise AssertionError(f"capacity increased with R: {caps}")
    verdict, details = _verdict(r, R_list, caps, config)
    details.update({"r": r, "note": "single inner radius; the limit is independent of r",
                    "mesh": mesh.stats()})
    return ScanResult(results, verdict, details)


def _p1_energy(mesh: TriMesh, values: np.ndarray, mask: np.ndarray) -> float:
    A = _stiffness(TriMesh(mesh.vertices, mesh.triangles[mask], mesh.metrics, mesh.center))
    return float(values @ (A @ values))


def check_energy_capacity_bound(im: Immersion, mesh: TriMesh, r: float, R: float,
                                tol: float = 1e-6, field_name: str = "u"):
    """Energy bound ``int_{B_r} |grad v|^2 <= 4 sup_{B_R} v^2 * capacity`` for ``v = u``.

    The left side is the P1 energy of ``u`` over triangles whose mean vertex
    distance is at most ``r``.  The bound is accepted with 5% slack.  When
    ``u Delta u >= -tol`` fails somewhere on ``B_R`` the report's status is
    ``"skipped"``; both sides are still computed and recorded.
    """
    from .identities import ResidualReport

    if field_name != "u":
        raise ValueError("only the field 'u' is supported")
    dist = mesh.distance if mesh.distance is not None else geodesic_distance(mesh)
    from .surface import decompose_T
    _, _, u = decompose_T(im, mesh.vertices)
    inB_R = dist <= R + 1e-12
    _, _, lap, _ = laplace_beltrami_u(im, mesh.vertices[inB_R])
    prod = u[inB_R] * lap
    pre_ok = bool(prod.min() >= -tol)
    tmask = dist[mesh.triangles].mean(axis=1) <= r
    lhs = max(_p1_energy(mesh, u, tmask), 0.0)
    cap = capacity(mesh, r, R)
    sup_u2 = float(np.max(u[inB_R] ** 2))
    rhs = 4.0 * sup_u2 * cap.capacity
    excess = max(lhs - 1.05 * rhs, 0.0)
    worst = mesh.vertices[inB_R][int(np.argmin(prod))]
    details = {
        "lhs": lhs, "rhs": rhs, "slack": rhs - lhs, "capacity": cap.capacity,
        "sup_u_sq": sup_u2, "r": r, "R": R,
        "precondition": "holds" if pre_ok else "violated",
        "min_u_lap_u": float(prod.min()),
        "min_u_lap_u_at": [float(v) for v in worst],
        "status": "checked" if pre_ok else "skipped",
    }
    return ResidualReport("energy_capacity_bound", int(inB_R.sum()), excess,
                          [float(v) for v in worst], 0.0, excess <= 0.0, details)


def capacities_to_csv(results: Sequence[CapacityResult]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=["r", "R", "capacity", "dofs", "residual"],
                       lineterminator="\n")
    w.writeheader()
    for c in results:
        w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in c.row().items()})
    return buf.getvalue()
