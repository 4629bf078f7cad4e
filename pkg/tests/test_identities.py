import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from grwsurf.gallery import instantiate
from grwsurf.identities import (
    THEOREMS,
    NotStationaryError,
    PreconditionError,
    ResidualReport,
    check_gauss_equation,
    check_gradient_identities,
    check_laplacian_u,
    check_lemma_dlog,
    check_sectional_lemma,
    hypothesis_report,
    proof_witness_thm1,
    proof_witness_thm2,
    residual,
    run_checks,
)
from grwsurf.surface import Immersion, Rect

SURFACES = ("graph_w", "enneper_l4", "slice", "hyperbolic_slice")
ORIGIN = np.zeros((1, 2))


@pytest.fixture(scope="module")
def gallery():
    return {name: instantiate(name) for name in SURFACES}


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0, 10, allow_nan=False), min_size=1, max_size=20),
       st.floats(1e-9, 5, allow_nan=False))
def test_pass_iff_within_tolerance(vals, tol):
    res = np.array(vals)
    rep = ResidualReport.build("x", res, np.zeros((len(vals), 2)), tol)
    assert rep.passed == (rep.max_abs_residual <= tol)
    assert rep.max_abs_residual == res.max()
    assert rep.to_dict()["pass"] == rep.passed


def test_residual_scaling():
    assert residual(1.0, 1.5) == 0.5
    # beyond magnitude 10 the residual is relative to a tenth of the larger side
    assert residual(100.0, 101.0) == pytest.approx(1 / 10.1)


@pytest.mark.parametrize("name", SURFACES)
def test_identity_suite_default_grids(gallery, name):
    inst = gallery[name]
    for rep in run_checks(inst.immersion, inst.grid, tol=1e-5):
        assert rep.passed, rep.to_dict()


def test_gradient_tight_tolerances(gallery):
    assert check_gradient_identities(gallery["graph_w"].immersion, gallery["graph_w"].grid, 1e-8).passed
    assert check_gradient_identities(gallery["enneper_l4"].immersion, gallery["enneper_l4"].grid, 1e-7).passed
    rep = check_gradient_identities(gallery["slice"].immersion, gallery["slice"].grid)
    assert rep.max_abs_residual <= 1e-15


def test_laplacian_origin(gallery):
    rep = check_laplacian_u(gallery["graph_w"].immersion, ORIGIN, 1e-12)
    assert rep.passed
    assert check_laplacian_u(gallery["enneper_l4"].immersion, gallery["enneper_l4"].grid, 1e-6).passed


def test_nonstationary_rejected():
    im = instantiate("slice", {"warping": "cosh(t)", "t0": 0.5}).immersion
    with pytest.raises(NotStationaryError, match=r"at \("):
        check_laplacian_u(im, np.array([[0.0, 0.0], [0.3, 0.1]]))
    with pytest.raises(NotStationaryError):
        check_gauss_equation(im, ORIGIN)


def test_lemma23_hyperbolic_slice(gallery):
    rep = check_lemma_dlog(gallery["hyperbolic_slice"].immersion, gallery["hyperbolic_slice"].grid, "lemma23")
    assert rep.passed and rep.max_abs_residual <= 1e-12
    assert check_lemma_dlog(gallery["graph_w"].immersion, gallery["graph_w"].grid, "lemma23").passed
    with pytest.raises(ValueError):
        check_lemma_dlog(gallery["graph_w"].immersion, ORIGIN, "lemma99")


def test_eqk(gallery):
    rep = check_lemma_dlog(gallery["slice"].immersion, gallery["slice"].grid, "eqK")
    assert rep.passed and rep.details["equality_implies_totally_geodesic"]
    with pytest.raises(PreconditionError):
        check_lemma_dlog(gallery["graph_w"].immersion, gallery["graph_w"].grid, "eqK")
    (failed,) = run_checks(gallery["graph_w"].immersion, gallery["graph_w"].grid, ["eqK"])
    assert not failed.passed and "error" in failed.details


def test_sectional_examples(gallery):
    pts = np.array([[0.0, 0.0], [0.5, -1.0]])
    assert check_sectional_lemma(gallery["graph_w"].immersion, pts).max_abs_residual < 1e-9
    im = instantiate("slice", {"warping": "cosh(t)", "t0": 0.0}).immersion
    rep = check_sectional_lemma(im, pts, 1e-6)
    assert rep.passed
    hs = gallery["hyperbolic_slice"]
    assert check_sectional_lemma(hs.immersion, hs.grid, 1e-6).passed


def test_sectional_curved_nonstationary():
    # the sectional formula does not need stationarity
    from grwsurf.ambient import FiberModel, GRWSpacetime, WarpingFunction
    st_ = GRWSpacetime(WarpingFunction("exp(0.5*t)"), FiberModel("hyperbolic", 3, -0.5))
    im = Immersion(st_, ("0.1*x + 0.2*y^2", "x", "y", "0.1*x*y"), Rect(-1, 1, -1, 1))
    pts = np.stack(np.meshgrid(np.linspace(-1, 1, 4), np.linspace(-1, 1, 4)), -1).reshape(-1, 2)
    assert check_sectional_lemma(im, pts, 1e-6).passed


def test_gauss_expanded_form_diagnostic(gallery):
    rep = check_gauss_equation(gallery["enneper_l4"].immersion, gallery["enneper_l4"].grid)
    assert rep.passed
    assert rep.details["expanded_K_corrected_residual"] <= 1e-9
    # the printed variant is reported, never asserted
    assert rep.details["expanded_K_printed_residual"] > 1e-3


def test_thm1_witness_examples(gallery):
    sl = gallery["slice"]
    for a in (0.05, 0.5, 1.0):
        rep = proof_witness_thm1(sl.immersion, sl.grid, a)
        assert rep.passed and rep.details["theta_min_where_bound_holds"] == 1.0
    g = gallery["graph_w"].immersion
    assert proof_witness_thm1(g, ORIGIN, 0.5).details["theta_min_where_bound_holds"] == pytest.approx(1.0)
    rep = proof_witness_thm1(g, np.array([[1.0, 0.0]]), 0.05)
    # u = 5, theta = 1 + 8 - 10 * 1.05 / 6 * 4
    assert rep.details["bound_samples"] == 1
    assert rep.details["theta_min_where_bound_holds"] == pytest.approx(2.0)
    with pytest.raises(ValueError):
        proof_witness_thm1(g, ORIGIN, 0.0)


def test_thm2_witness_examples(gallery):
    g = gallery["graph_w"]
    rep = proof_witness_thm2(g.immersion, g.grid, 0.1)
    assert rep.passed and rep.details["sign_condition"] == "verified"
    e = gallery["enneper_l4"]
    rep = proof_witness_thm2(e.immersion, e.grid, 1.0)
    assert rep.passed and rep.details["sign_condition"] == "vacuous"
    rep = proof_witness_thm2(gallery["slice"].immersion, gallery["slice"].grid, 0.5)
    assert rep.max_abs_residual == 0.0
    with pytest.raises(ValueError):
        proof_witness_thm2(g.immersion, ORIGIN, -1.0)


@pytest.mark.parametrize("tid", THEOREMS)
@pytest.mark.parametrize("name", SURFACES)
def test_every_hypothesis_gets_a_verdict(gallery, name, tid):
    rep = hypothesis_report(gallery[name].immersion, gallery[name].grid, tid)
    assert rep.hypotheses
    for h in rep.hypotheses:
        assert h["verdict"] and isinstance(h["holds"], bool)
    assert "max_sigma" in rep.conclusion


def test_hypothesis_flags(gallery):
    g = hypothesis_report(gallery["graph_w"].immersion, gallery["graph_w"].grid, "Thm4.1")
    assert g.verdict("(Kgeqzero)")["holds"] and not g.verdict("(subquadratic)")["holds"]
    assert "(subquadratic) fails globally" in g.flags
    assert g.conclusion["max_sigma"] > 0.1
    e = hypothesis_report(gallery["enneper_l4"].immersion, gallery["enneper_l4"].grid, "Thm4.1")
    assert not e.verdict("(Kgeqzero)")["holds"] and e.verdict("(subquadratic)")["holds"]
    assert any("(Kgeqzero) cannot be dropped, although (subquadratic) is satisfied" in f for f in e.flags)
    assert e.C_fit <= 2.0
    s = hypothesis_report(gallery["slice"].immersion, gallery["slice"].grid, "Thm4.1")
    assert all(h["holds"] for h in s.hypotheses)
    assert s.conclusion["max_sigma"] == 0.0
    with pytest.raises(ValueError):
        hypothesis_report(gallery["slice"].immersion, ORIGIN, "Thm9.9")
