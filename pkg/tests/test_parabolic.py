import csv
import io
import math

import numpy as np
import pytest

from grwsurf.gallery import instantiate
from grwsurf.parabolic import (
    MeshError,
    build_mesh,
    capacities_to_csv,
    capacity,
    check_energy_capacity_bound,
    geodesic_distance,
    harmonic_measure,
    parabolicity_scan,
)

E = math.e


@pytest.fixture(scope="module")
def flat():
    return instantiate("slice").immersion


@pytest.fixture(scope="module")
def flat_mesh(flat):
    m = build_mesh(flat, extent=3.0, h=0.05, snap=[1.0, E, math.sqrt(E)])
    geodesic_distance(m)
    return m


@pytest.fixture(scope="module")
def enneper():
    return instantiate("enneper_l4").immersion


@pytest.fixture(scope="module")
def enneper_mesh(enneper):
    m = build_mesh(enneper, extent=2.0, h=0.05)
    geodesic_distance(m)
    return m


def test_mesh_size_and_validity(flat):
    m = build_mesh(flat, extent=4.0, h=0.05)
    expected = math.pi * 16 / (0.05 ** 2 * math.sqrt(3) / 4 * 2)
    assert abs(len(m.triangles) / expected - 1) <= 0.20
    V, T = m.vertices, m.triangles
    e1, e2 = V[T[:, 1]] - V[T[:, 0]], V[T[:, 2]] - V[T[:, 0]]
    assert np.all(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0] > 0)
    rounded = np.round(V / 1e-12).astype(np.int64)
    assert len(np.unique(rounded, axis=0)) == len(V)
    assert np.all(np.linalg.eigvalsh(m.metrics) > 0)


def test_mesh_errors(flat, enneper):
    with pytest.raises(MeshError):
        build_mesh(flat, extent=1.0, h=0.0)
    with pytest.raises(MeshError):
        build_mesh(flat, extent=1.0, h=-0.1)
    with pytest.raises(MeshError):
        build_mesh(enneper, extent=5.0, h=0.1)
    with pytest.raises(MeshError):
        build_mesh(flat, extent=1.0, h=0.1, snap_mode="polar")


def test_enneper_mesh_is_conformal(enneper_mesh):
    M = enneper_mesh.metrics
    assert np.max(np.abs(M[:, 0, 1])) <= 1e-10
    assert np.max(np.abs(M[:, 0, 0] - M[:, 1, 1]) / M[:, 0, 0]) <= 1e-10


def test_flat_distance(flat_mesh):
    d = flat_mesh.distance
    rho = flat_mesh.param_radius()
    assert d[flat_mesh.center_index] == 0.0
    assert np.all(d >= 0)
    far = rho > 0.5
    assert np.max(np.abs(d[far] - rho[far]) / rho[far]) <= 0.02


def test_enneper_distance_along_axis(enneper_mesh):
    m = enneper_mesh
    d = m.distance
    rho = m.param_radius()
    axis = (np.abs(m.vertices[:, 1]) < 1e-12) & (m.vertices[:, 0] > 0.2)
    exact = rho[axis] + rho[axis] ** 3 / 3
    assert np.max(np.abs(d[axis] - exact) / exact) <= 0.02


def test_center_must_be_vertex(flat_mesh):
    with pytest.raises(MeshError):
        geodesic_distance(flat_mesh, center=(0.0123, 0.0))


def test_harmonic_measure_flat(flat_mesh):
    w = harmonic_measure(flat_mesh, 1.0, E)
    d = flat_mesh.distance
    ring = np.abs(d - math.sqrt(E)) < 1e-9
    assert ring.any()
    assert np.all(np.abs(w[ring] - 0.5) <= 0.01 * 0.5)
    assert np.all(w[d >= E] == 1.0)
    assert np.all(w[d <= 1.0] == 0.0)
    assert w.min() >= -1e-12 and w.max() <= 1 + 1e-12


def test_annulus_contract(flat_mesh):
    with pytest.raises(MeshError):
        capacity(flat_mesh, 2.0, 1.0)
    with pytest.raises(MeshError):
        capacity(flat_mesh, 1.0, 1.0)
    with pytest.raises(MeshError):
        capacity(flat_mesh, 1.0, 10.0)


def test_flat_capacity_values(flat):
    m = build_mesh(flat, extent=7.5, h=0.05, snap=[1.0, E, E ** 2])
    c1 = capacity(m, 1.0, E)
    c2 = capacity(m, 1.0, E ** 2)
    assert abs(c1.capacity / (2 * math.pi) - 1) <= 0.02
    assert abs(c2.capacity / math.pi - 1) <= 0.02
    assert c1.solver_residual <= 1e-10 and c1.dofs > 0


def test_flat_capacity_converges(flat):
    errs = []
    for h in (0.1, 0.05):
        m = build_mesh(flat, extent=3.0, h=h, snap=[1.0, E])
        errs.append(abs(capacity(m, 1.0, E).capacity - 2 * math.pi))
    assert errs[1] <= 0.5 * errs[0]


def test_conformal_invariance(enneper):
    m = build_mesh(enneper, extent=3.0, h=0.05, snap=[1.0, E], snap_mode="parameter")
    c = capacity(m, 1.0, E, mode="parameter")
    assert abs(c.capacity / (2 * math.pi) - 1) <= 0.02


def test_single_radius_is_inconclusive(flat):
    s = parabolicity_scan(flat, r=1.0, R_list=[E], h=0.1)
    assert s.verdict == "inconclusive"
    with pytest.raises(ValueError):
        parabolicity_scan(flat, r=1.0, R_list=[3.0, 2.0], h=0.1)


def test_flat_scan_decays(flat):
    s = parabolicity_scan(flat, r=1.0, R_list=[E, E ** 2, E ** 3, E ** 4], h=0.05, growth=0.05)
    caps = [c.capacity for c in s.results]
    assert s.verdict == "decaying"
    for k, c in enumerate(caps, start=1):
        assert abs(c / (2 * math.pi / k) - 1) <= 0.20


def test_energy_bound_slice(flat, flat_mesh):
    rep = check_energy_capacity_bound(flat, flat_mesh, 1.0, E)
    assert rep.passed and rep.details["lhs"] == 0.0
    assert rep.details["status"] == "checked"


def test_csv_schema(flat_mesh):
    rows = [capacity(flat_mesh, 1.0, E)]
    text = capacities_to_csv(rows)
    reader = list(csv.reader(io.StringIO(text)))
    assert reader[0] == ["r", "R", "capacity", "dofs", "residual"]
    assert float(reader[1][2]) == rows[0].capacity
