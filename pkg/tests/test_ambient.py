import math

import numpy as np
import pytest

from grwsurf.ambient import (
    ChartError,
    FiberModel,
    GRWSpacetime,
    WarpingFunction,
    ambient_sectional,
    connection_coeffs_at,
    metric_at,
    minkowski,
    riemann_at,
    sectional_closed_form,
    warp_eval,
)


def model(warp="cosh(t)", kind="sphere", dim=3, c=0.5):
    return GRWSpacetime(WarpingFunction(warp), FiberModel(kind, dim, c))


def random_points(st, n, rng):
    pts = rng.uniform(-0.6, 0.6, (n, st.n))
    return pts


def fd_metric_derivative(st, pts, h=1e-4):
    n = st.n
    out = np.zeros(pts.shape[:-1] + (n, n, n))
    for l in range(n):
        e = np.zeros(n)
        e[l] = h
        d1 = (metric_at(st, pts + e) - metric_at(st, pts - e)) / (2 * h)
        d2 = (metric_at(st, pts + 2 * e) - metric_at(st, pts - 2 * e)) / (4 * h)
        out[..., l, :, :] = (4 * d1 - d2) / 3
    return out


def test_warp_eval_examples():
    assert tuple(map(float, warp_eval(WarpingFunction("1"), 3.0))) == (1.0, 0.0, 0.0)
    assert tuple(map(float, warp_eval(WarpingFunction("cosh(t)"), 0.0))) == (1.0, 0.0, 1.0)
    f, f1, f2 = warp_eval(WarpingFunction("exp(t)"), 0.5)
    F = np.exp
    h = 1e-3
    fd1 = (F(0.5 + h) - F(0.5 - h)) / (2 * h)
    fd1 = (4 * (F(0.5 + h / 2) - F(0.5 - h / 2)) / h - fd1) / 3
    fd2 = (F(0.5 + h) - 2 * F(0.5) + F(0.5 - h)) / h ** 2
    fd2 = (4 * (F(0.5 + h / 2) - 2 * F(0.5) + F(0.5 - h / 2)) / (h / 2) ** 2 - fd2) / 3
    assert abs(f - math.exp(0.5)) < 1e-15
    assert abs(f1 - fd1) < 1e-8 and abs(f2 - fd2) < 1e-8


def test_warp_interval_and_positivity():
    w = WarpingFunction("t", 0.0, 2.0)
    with pytest.raises(ChartError):
        warp_eval(w, 2.5)
    with pytest.raises(ChartError):
        warp_eval(WarpingFunction("t - 1"), 0.0)
    with pytest.raises(ValueError):
        WarpingFunction("1", 1.0, 0.0)


def test_fiber_validation():
    for kind, c in [("euclidean", 1.0), ("sphere", -1.0), ("hyperbolic", 0.0), ("torus", 0.0)]:
        with pytest.raises(ValueError):
            FiberModel(kind, 2, c)
    with pytest.raises(ValueError):
        FiberModel("euclidean", 1, 0.0)
    assert FiberModel("hyperbolic", 2, -1.0).chart_radius == 2.0


def test_chart_violation():
    st = GRWSpacetime(WarpingFunction("1"), FiberModel("hyperbolic", 2, -1.0))
    with pytest.raises(ChartError):
        metric_at(st, [0.0, 2.0, 0.0])


def test_metric_examples():
    assert np.array_equal(metric_at(minkowski(4), [0.3, 1, 2, 3]), np.diag([-1.0, 1, 1, 1]))
    st = GRWSpacetime(WarpingFunction("cosh(t)"), FiberModel("euclidean", 3, 0.0))
    assert np.array_equal(metric_at(st, [0.0, 5, -1, 2]), np.diag([-1.0, 1, 1, 1]))
    st = GRWSpacetime(WarpingFunction("1"), FiberModel("hyperbolic", 2, -1.0))
    assert np.array_equal(metric_at(st, [0.0, 0.0, 0.0])[1:, 1:], np.eye(2))


def test_signature(rng):
    st = model()
    for g in metric_at(st, random_points(st, 10, rng)):
        ev = np.linalg.eigvalsh(g)
        assert (ev < 0).sum() == 1 and (ev > 0).sum() == st.n - 1


def test_flat_connection_vanishes():
    assert np.all(connection_coeffs_at(minkowski(4), [0.1, 0.2, 0.3, 0.4]) == 0)


def test_exp_warping_mixed_symbol():
    st = GRWSpacetime(WarpingFunction("exp(t)"), FiberModel("euclidean", 3, 0.0))
    gam = connection_coeffs_at(st, [0.3, 0.1, 0.2, 0.3])
    for i in range(1, 4):
        assert abs(gam[i, 0, i] - 1.0) < 1e-15


@pytest.mark.parametrize("kind,c", [("euclidean", 0.0), ("sphere", 0.5), ("hyperbolic", -1.0)])
def test_christoffels_match_metric_finite_differences(kind, c, rng):
    st = model("exp(0.3*t)*cosh(t)", kind, 3, c)
    pts = random_points(st, 8, rng)
    dg = fd_metric_derivative(st, pts)
    gi = np.linalg.inv(metric_at(st, pts))
    # Gamma^k_ij = 1/2 g^kl (d_i g_lj + d_j g_li - d_l g_ij)
    t = (np.einsum("nilj->nlij", dg) + np.einsum("njli->nlij", dg) - dg)
    ref = 0.5 * np.einsum("nkl,nlij->nkij", gi, t)
    assert np.max(np.abs(connection_coeffs_at(st, pts) - ref)) < 1e-8


def test_christoffel_symmetry_exact(rng):
    st = model()
    gam = connection_coeffs_at(st, random_points(st, 5, rng))
    assert np.array_equal(gam, np.swapaxes(gam, -1, -2))


def test_metric_compatibility(rng):
    st = model("1 + 0.2*sin(t)", "hyperbolic", 3, -0.7)
    pts = random_points(st, 10, rng)
    dg = fd_metric_derivative(st, pts)
    g = metric_at(st, pts)
    gam = connection_coeffs_at(st, pts)
    cov = dg - np.einsum("nlki,nlj->nkij", gam, g) - np.einsum("nlkj,nil->nkij", gam, g)
    assert np.max(np.abs(cov)) < 1e-6


def test_closed_conformal_field(rng):
    st = model("cosh(t)", "sphere", 3, 0.8)
    pts = random_points(st, 20, rng)
    h = 1e-4
    f, f1, _ = warp_eval(st.warping, pts[:, 0])

    def T(p):
        out = np.zeros_like(p)
        out[:, 0] = warp_eval(st.warping, p[:, 0])[0]
        return out

    gam = connection_coeffs_at(st, pts)
    for i in range(st.n):
        e = np.zeros(st.n)
        e[i] = h
        d1 = (T(pts + e) - T(pts - e)) / (2 * h)
        d2 = (T(pts + 2 * e) - T(pts - 2 * e)) / (4 * h)
        dT = (4 * d1 - d2) / 3
        nabla = dT + np.einsum("nkl,nl->nk", gam[:, :, i, :], T(pts))
        expected = np.zeros_like(pts)
        expected[:, i] = f1
        assert np.max(np.abs(nabla - expected)) <= 1e-8


def test_sectional_examples():
    X, Y = np.array([0.0, 1, 0, 0]), np.array([0.0, 0, 1, 0.3])
    assert abs(ambient_sectional(minkowski(4), np.array([0.1, 0.2, 0.3, 0.4]), (X, Y))) < 1e-9
    st = GRWSpacetime(WarpingFunction("exp(t)"), FiberModel("euclidean", 3, 0.0))
    k = ambient_sectional(st, np.array([0.2, 0.1, 0.1, 0.1]),
                          (np.array([1.0, 0, 0, 0]), np.array([0.0, 1, 0, 0])))
    assert abs(k - 1.0) < 1e-6
    st = GRWSpacetime(WarpingFunction("1"), FiberModel("hyperbolic", 2, -1.0))
    k = ambient_sectional(st, np.array([0.0, 0.3, -0.5]),
                          (np.array([0.0, 1, 0]), np.array([0.0, 0, 1])))
    assert abs(k + 1.0) < 1e-6


def test_degenerate_plane():
    X = np.array([1.0, 1, 0, 0])
    with pytest.raises(ValueError):
        ambient_sectional(minkowski(4), np.zeros(4), (X, 2 * X))
    with pytest.raises(ValueError):
        ambient_sectional(minkowski(4), np.zeros(4), (X, np.array([0.0, 0, 1, 0])))


def test_riemann_antisymmetry(rng):
    st = model()
    R = riemann_at(st, random_points(st, 3, rng))
    assert np.max(np.abs(R + np.swapaxes(R, 2, 3))) < 1e-12


@pytest.mark.parametrize("kind,c", [("euclidean", 0.0), ("sphere", 0.6), ("hyperbolic", -0.9)])
def test_sectional_lemma_on_random_spacelike_planes(kind, c, rng):
    st = model("cosh(0.8*t) + 0.3", kind, 3, c)
    for _ in range(6):
        p = random_points(st, 1, rng)[0]
        g = metric_at(st, p)
        # spacelike plane: small time components
        X = np.concatenate([[rng.uniform(-0.5, 0.5)], rng.normal(size=3)])
        Y = np.concatenate([[rng.uniform(-0.5, 0.5)], rng.normal(size=3)])
        P = np.stack([X, Y])
        gram = P @ g @ P.T
        assert np.all(np.linalg.eigvalsh(gram) > 0)
        f = warp_eval(st.warping, p[0])[0]
        T = np.zeros(4)
        T[0] = f
        Ttan = np.linalg.solve(gram, P @ g @ T) @ P
        Tn = T - Ttan
        u = -Tn @ g @ Tn
        assert abs(ambient_sectional(st, p, (X, Y)) - sectional_closed_form(st, p[0], u)) < 1e-6
