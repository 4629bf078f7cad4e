"""Residual and sign checks of the curvature identities over sample grids.

Every check evaluates both sides of an identity through independent paths
(jets of the immersion on one side, extrinsic frame data on the other) and
returns a :class:`ResidualReport`.  :func:`hypothesis_report` samples the
hypotheses of the uniqueness theorems and records verdicts without ever
failing.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Union

import numpy as np

from .grids import Grid
from .jets import jet_pow
from .surface import ExtrinsicReport, Immersion, extrinsic_report

__all__ = [
    "ResidualReport",
    "HypothesisReport",
    "PreconditionError",
    "NotStationaryError",
    "residual",
    "check_gradient_identities",
    "check_laplacian_u",
    "check_lemma_dlog",
    "check_sectional_lemma",
    "check_gauss_equation",
    "proof_witness_thm1",
    "proof_witness_thm2",
    "hypothesis_report",
    "run_checks",
    "CHECKS",
    "THEOREMS",
]

DEFAULT_TOL = 1e-6
STATIONARY_TOL = 1e-7
CONSTANT_U_TOL = 1e-7
SIGN_TOL = 1e-9
GROWTH_RATIO = 1.25


class PreconditionError(ValueError):
    """A sampled precondition of a check does not hold."""


class NotStationaryError(PreconditionError):
    pass


@dataclass
class ResidualReport:
    identity_id: str
    samples: int
    max_abs_residual: float
    worst_point: List[float]
    tolerance: float
    passed: bool
    details: Dict[str, object] = field(default_factory=dict)

    @classmethod
    def build(cls, identity_id: str, res, points, tolerance: float,
              details: Optional[dict] = None, extra_ok: bool = True) -> "ResidualReport":
        res = np.asarray(res, dtype=float)
        if res.size == 0:
            worst, value = [], 0.0
        else:
            i = int(np.argmax(res))
            worst = [float(v) for v in np.asarray(points)[i]]
            value = float(res[i])
        return cls(identity_id, int(res.size), value, worst, float(tolerance),
                   bool(value <= tolerance and extra_ok), dict(details or {}))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pass"] = d.pop("passed")
        return d


def residual(a, b) -> np.ndarray:
    """``|a - b|``, made relative once the magnitudes exceed 10."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    scale = np.maximum(1.0, np.maximum(np.abs(a), np.abs(b)) / 10.0)
    return np.abs(a - b) / scale


GridLike = Union[Grid, np.ndarray, Sequence]


def _points(grid: GridLike) -> np.ndarray:
    if isinstance(grid, Grid):
        return grid.points()
    return np.atleast_2d(np.asarray(grid, dtype=float))


def _report(im: Immersion, grid: GridLike, rep: Optional[ExtrinsicReport]) -> ExtrinsicReport:
    return rep if rep is not None else extrinsic_report(im, _points(grid))


def _require_stationary(rep: ExtrinsicReport, what: str, tol: float = STATIONARY_TOL) -> None:
    i = int(np.argmax(rep.H_norm))
    if rep.H_norm[i] > tol:
        x, y = rep.p[i]
        raise NotStationaryError(
            f"{what} needs a stationary surface; |H| = {rep.H_norm[i]:.3g} at ({x:g}, {y:g})")


# ------------------------------------------------------------------ checks
def check_gradient_identities(im: Immersion, grid: GridLike, tol: float = DEFAULT_TOL,
                              rep: Optional[ExtrinsicReport] = None) -> ResidualReport:
    """``|grad u|^2 = 4<A^2 T^T, T^T>``, its stationary form, and ``|grad tau|^2``.

    The stationary form ``|grad u|^2 = 2 tr(A^2)|T^T|^2`` is only evaluated at
    samples where ``|H|`` is below the stationarity threshold.
    """
    rep = _report(im, grid, rep)
    t = rep.T_tan_E
    At = np.einsum("nij,nj->ni", rep.A_time, t)
    rhs_a = 4.0 * np.einsum("ni,ni->n", At, At)
    r_a = residual(rep.grad_u_sq, rhs_a)
    stationary = rep.H_norm <= STATIONARY_TOL
    r_b = np.where(stationary,
                   residual(rep.grad_u_sq, 2.0 * rep.tr_A2_time * rep.T_tan_sq), 0.0)
    f2 = rep.f ** 2
    r_c = residual(rep.grad_tau_sq, (rep.u - f2) / f2)
    res = np.maximum(np.maximum(r_a, r_b), r_c)
    details = {
        "grad_u": float(r_a.max()),
        "grad_u_stationary": float(r_b.max()),
        "grad_tau": float(r_c.max()),
        "stationary_samples": int(stationary.sum()),
    }
    return ResidualReport.build("gradient_identities", res, rep.p, tol, details)


def check_laplacian_u(im: Immersion, grid: GridLike, tol: float = DEFAULT_TOL,
                      rep: Optional[ExtrinsicReport] = None) -> ResidualReport:
    """``Delta u = 2(K - f''/f)|T^T|^2 + 2 tr(A_{T^N}^2)`` on a stationary surface."""
    rep = _report(im, grid, rep)
    _require_stationary(rep, "laplacian_u")
    rhs = 2.0 * (rep.K_intrinsic - rep.f2 / rep.f) * rep.T_tan_sq + 2.0 * rep.tr_A2_time
    res = residual(rep.lap_u, rhs)
    return ResidualReport.build("laplacian_u", res, rep.p, tol)


def _lemma21_rhs(rep: ExtrinsicReport) -> np.ndarray:
    d = rep.K_intrinsic - rep.f2 / rep.f
    return 2.0 * d - (2.0 * rep.f ** 2 / rep.u ** 2) * (d * rep.u - rep.tr_A2_time)


def _lemma23_rhs(rep: ExtrinsicReport) -> np.ndarray:
    bound = (rep.f1 ** 2 + rep.K_M) / rep.f ** 2
    return (2.0 * (rep.K_intrinsic - bound)
            + (rep.f ** 2 / rep.u ** 2) * (rep.tr_A2_time + rep.u * rep.sum_tr_A2_space))


def check_lemma_dlog(im: Immersion, grid: GridLike, variant: str = "lemma21",
                     tol: float = DEFAULT_TOL,
                     rep: Optional[ExtrinsicReport] = None) -> ResidualReport:
    """Residual of the ``Delta log u`` formulas, or the constant-``u`` inequality.

    ``variant`` is ``"lemma21"``, ``"lemma23"`` or ``"eqK"``.  The ``eqK``
    variant needs ``u`` constant on the grid; it checks
    ``K - (f'^2 + K_M)/f^2 <= tol`` and records whether equality comes with
    vanishing shape operators.
    """
    rep = _report(im, grid, rep)
    _require_stationary(rep, f"lemma_dlog[{variant}]")
    if variant == "lemma21":
        return ResidualReport.build("lemma21", residual(rep.lap_log_u, _lemma21_rhs(rep)),
                                    rep.p, tol)
    if variant == "lemma23":
        return ResidualReport.build("lemma23", residual(rep.lap_log_u, _lemma23_rhs(rep)),
                                    rep.p, tol)
    if variant != "eqK":
        raise ValueError(f"unknown variant {variant!r}")
    gnorm = np.sqrt(rep.grad_u_sq)
    i = int(np.argmax(gnorm))
    if gnorm[i] > CONSTANT_U_TOL:
        x, y = rep.p[i]
        raise PreconditionError(f"eqK needs u constant; |grad u| = {gnorm[i]:.3g} at ({x:g}, {y:g})")
    gap = rep.K_intrinsic - (rep.f1 ** 2 + rep.K_M) / rep.f ** 2
    excess = np.maximum(gap, 0.0)
    equality = np.abs(gap) <= tol
    shape = rep.sigma_norm
    consistent = bool(np.all(shape[equality] <= tol)) and bool(np.all(
        np.abs(gap[shape <= tol]) <= tol))
    details = {
        "max_gap": float(gap.max()),
        "equality_samples": int(equality.sum()),
        "equality_implies_totally_geodesic": consistent,
        "max_sigma_on_equality": float(shape[equality].max()) if equality.any() else 0.0,
    }
    return ResidualReport.build("eqK", excess, rep.p, tol, details, extra_ok=consistent)


def check_sectional_lemma(im: Immersion, grid: GridLike, tol: float = DEFAULT_TOL,
                          rep: Optional[ExtrinsicReport] = None) -> ResidualReport:
    """Closed-form sectional curvature of the tangent plane vs the curvature tensor."""
    rep = _report(im, grid, rep)
    return ResidualReport.build("sectional_lemma", residual(rep.Kbar, rep.Kbar_lemma),
                                rep.p, tol)


def check_gauss_equation(im: Immersion, grid: GridLike, tol: float = DEFAULT_TOL,
                         rep: Optional[ExtrinsicReport] = None) -> ResidualReport:
    """``2K = 2Kbar - sum tr(A_xi_i^2) + tr(A_{T^N}^2)/u`` with ``K`` from the metric alone."""
    rep = _report(im, grid, rep)
    _require_stationary(rep, "gauss_equation")
    rhs = 2.0 * rep.Kbar - rep.sum_tr_A2_space + rep.tr_A2_time / rep.u
    return ResidualReport.build("gauss_equation", residual(2.0 * rep.K_intrinsic, rhs),
                                rep.p, tol, details=_ks_diagnostics(rep))


def _ks_diagnostics(rep: ExtrinsicReport) -> dict:
    """Residuals of the expanded curvature formula, printed and corrected forms.

    Informational only. The printed form carries ``f'`` for ``f'^2``, the
    spacelike traces in the ``1/(2u)`` slot and a stray ``-f''/f``.
    """
    f, f1, f2 = rep.f, rep.f1, rep.f2
    ddlog = f2 / f - (f1 / f) ** 2
    g = rep.grad_tau_sq
    base = (f1 ** 2 + rep.K_M) / f ** 2 + (rep.K_M / f ** 2 - ddlog) * g
    corrected = base + rep.tr_A2_time / (2 * rep.u) - 0.5 * rep.sum_tr_A2_space
    printed = (base + rep.sum_tr_A2_space / (2 * rep.u) - 0.5 * rep.sum_tr_A2_space - f2 / f)
    return {
        "expanded_K_corrected_residual": float(np.max(residual(rep.K_intrinsic, corrected))),
        "expanded_K_printed_residual": float(np.max(residual(rep.K_intrinsic, printed))),
    }


# ------------------------------------------------------------ proof witnesses
def _alpha_fraction(alpha: float) -> Fraction:
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha!r}")
    return Fraction(alpha).limit_denominator(10**6)


def proof_witness_thm1(im: Immersion, grid: GridLike, alpha: float,
                       tol: float = DEFAULT_TOL, theta_tol: float = 1e-8,
                       rep: Optional[ExtrinsicReport] = None) -> ResidualReport:
    """Superharmonicity witness built on ``h(t) = (1 + t)^(-alpha)``.

    Checks ``theta >= 0`` wherever ``u <= (2a+1)/(2a) f^2 + 1/(2a)`` and
    compares the closed expression for ``Delta h(u)`` with the Laplacian of
    the jet of ``h(u)``.
    """
    a = _alpha_fraction(alpha)
    rep = _report(im, grid, rep)
    _require_stationary(rep, "proof_witness_thm1")
    al = float(a)
    u, f2, tr = rep.u, rep.f ** 2, rep.tr_A2_time
    ratio = -(al + 1.0) / (1.0 + u)  # h''/h'
    theta = f2 + 2.0 * (u - f2) + 2.0 * u * ratio * (u - f2)
    bound = u <= (2 * al + 1) / (2 * al) * f2 + 1.0 / (2 * al)
    hprime = -al * (1.0 + u) ** (-al - 1.0)
    psi_t = (2.0 * (rep.K_intrinsic - (rep.f1 ** 2 + rep.K_M) / rep.f ** 2)
             + (f2 / u) * rep.sum_tr_A2_space)
    closed = hprime * psi_t * u + hprime * tr / u * theta
    hu = jet_pow(1.0 + rep.jets.u, -a)
    direct = rep.jets.laplacian(hu)
    res = residual(direct, closed)
    theta_min = float(theta[bound].min()) if bound.any() else None
    sign_ok = theta_min is None or theta_min >= -theta_tol
    details = {
        "alpha": al,
        "theta_min_where_bound_holds": theta_min,
        "bound_samples": int(bound.sum()),
        "theta_sign_ok": bool(sign_ok),
        "superharmonic_samples": int(np.sum(direct <= tol)),
    }
    return ResidualReport.build(f"proof_witness_thm1[alpha={al:g}]", res, rep.p, tol,
                                details, extra_ok=sign_ok)


def proof_witness_thm2(im: Immersion, grid: GridLike, alpha: float,
                       tol: float = DEFAULT_TOL,
                       rep: Optional[ExtrinsicReport] = None) -> ResidualReport:
    """Subharmonicity witness built on ``v = -(1 + u)^(-alpha)``.

    Compares the jet gradient and Laplacian of ``v`` with their closed
    expressions and checks ``Delta v >= 0`` where ``u <= (a+1)/a f^2 + 1/a``
    and ``K >= f''/f``.  When no sample satisfies both conditions the
    details record ``"sign_condition": "vacuous"``.
    """
    a = _alpha_fraction(alpha)
    rep = _report(im, grid, rep)
    _require_stationary(rep, "proof_witness_thm2")
    al = float(a)
    u, f2, tr = rep.u, rep.f ** 2, rep.tr_A2_time
    v = -jet_pow(1.0 + rep.jets.u, -a)
    direct = rep.jets.laplacian(v)
    K = rep.K_intrinsic
    c = 2.0 * al / (1.0 + u) ** (al + 1.0)
    closed = (c * (K - rep.f2 / rep.f) * (u - f2)
              + c * tr * (1.0 - al * u + al * f2 + f2) / (1.0 + u))
    # gradient relation, compared slot by slot in parameter coordinates
    scale = al / (1.0 + u) ** (al + 1.0)
    r_grad = np.maximum(residual(v.g[0], scale * rep.jets.u.g[0]),
                        residual(v.g[1], scale * rep.jets.u.g[1]))
    res = np.maximum(residual(direct, closed), r_grad)
    mask = (u <= (al + 1.0) / al * f2 + 1.0 / al) & (K >= rep.f2 / rep.f - SIGN_TOL)
    if mask.any():
        worst = float(direct[mask].min())
        sign_ok = worst >= -tol
        state = "verified" if sign_ok else "violated"
    else:
        worst, sign_ok, state = None, True, "vacuous"
    details = {
        "alpha": al,
        "sign_condition": state,
        "qualifying_samples": int(mask.sum()),
        "min_lap_v_on_qualifying": worst,
        "grad_residual": float(r_grad.max()),
    }
    return ResidualReport.build(f"proof_witness_thm2[alpha={al:g}]", res, rep.p, tol,
                                details, extra_ok=sign_ok)


# ------------------------------------------------------------- hypotheses
THEOREMS = ("Thm4.1", "Cor4.2", "Cor4.3", "Thm4.5", "Cor4.6")

_HYPOTHESES = {
    "Thm4.1": ("stationary", "(Kgeqzero)", "(subquadratic)"),
    "Cor4.2": ("stationary", "(Kgeqzero)", "u bounded"),
    "Cor4.3": ("stationary", "static", "K >= K_M >= 0", "u bounded"),
    "Thm4.5": ("stationary", "(new4)", "(subquadratic)"),
    "Cor4.6": ("stationary", "(new4)", "u bounded"),
}


@dataclass
class HypothesisReport:
    theorem_id: str
    samples: int
    hypotheses: List[dict]
    conclusion: dict
    C_fit: Optional[float]
    flags: List[str]

    def verdict(self, name: str) -> dict:
        for h in self.hypotheses:
            if h["name"] == name:
                return h
        raise KeyError(name)

    def to_dict(self) -> dict:
        return asdict(self)


def _sampled(name, margin, pts, tol=SIGN_TOL, note=""):
    margin = np.asarray(margin, dtype=float)
    i = int(np.argmin(margin))
    holds = bool(margin[i] >= -tol)
    return {
        "name": name,
        "holds": holds,
        "verdict": "holds everywhere" if holds else f"fails at ({pts[i][0]:g}, {pts[i][1]:g})",
        "margin": float(margin[i]),
        "worst_point": [float(v) for v in pts[i]],
        "note": note,
    }


def _growth(values, pts, reducer):
    """Compare a statistic on the full sample with the half-radius sub-sample."""
    c = pts.mean(axis=0)
    d = np.hypot(pts[:, 0] - c[0], pts[:, 1] - c[1])
    inner = d <= 0.5 * d.max() + 1e-12
    full = float(reducer(values))
    half = float(reducer(values[inner])) if inner.any() else full
    return full, half


def hypothesis_report(im: Immersion, grid: GridLike, theorem_id: str,
                      rep: Optional[ExtrinsicReport] = None) -> HypothesisReport:
    """Sample the hypotheses of one uniqueness theorem on ``grid``.

    Growth-type hypotheses are judged by comparing the half-radius
    sub-sample with the full sample: a fitted constant (or ``sup u``) that
    grows by more than 25% is flagged as failing globally.  Verdicts are
    evidence over the sample, not proofs.
    """
    if theorem_id not in _HYPOTHESES:
        raise ValueError(f"unknown theorem id {theorem_id!r}; known: {', '.join(THEOREMS)}")
    rep = _report(im, grid, rep)
    pts = rep.p
    f2 = rep.f ** 2
    K = rep.K_intrinsic
    bound = (rep.f1 ** 2 + rep.K_M) / f2
    out = []
    flags = []
    C_values = rep.u / (f2 + 1.0)
    C_full, C_half = _growth(C_values, pts, np.max)
    u_full, u_half = _growth(rep.u, pts, np.max)
    for name in _HYPOTHESES[theorem_id]:
        if name == "stationary":
            out.append(_sampled(name, STATIONARY_TOL - rep.H_norm, pts, tol=0.0,
                                note="|H| below threshold"))
        elif name == "(Kgeqzero)":
            margin = np.minimum(K - bound, bound)
            out.append(_sampled(name, margin, pts,
                                note="K >= (f'^2 + K_M)/f^2 >= 0"))
        elif name == "(new4)":
            out.append(_sampled(name, K - np.maximum(rep.f2 / rep.f, 0.0), pts,
                                note="K >= max(f''/f, 0)"))
        elif name == "K >= K_M >= 0":
            out.append(_sampled(name, np.minimum(K - rep.K_M, rep.K_M + 0 * K), pts))
        elif name == "static":
            holds = bool(im.spacetime.is_static)
            out.append({"name": name, "holds": holds,
                        "verdict": "holds everywhere" if holds else "warping function is not 1",
                        "margin": 0.0, "worst_point": [], "note": "f == 1"})
        elif name == "(subquadratic)":
            grows = C_full > GROWTH_RATIO * C_half
            out.append({
                "name": name, "holds": not grows,
                "verdict": ("fails globally: fitted C grows with the sampled radius" if grows
                            else f"holds with C = {C_full:.6g}"),
                "margin": C_full - C_half, "worst_point": [],
                "note": f"C(half radius) = {C_half:.6g}, C(full) = {C_full:.6g}",
            })
        elif name == "u bounded":
            grows = u_full > GROWTH_RATIO * u_half
            out.append({
                "name": name, "holds": not grows,
                "verdict": ("fails: sup u grows with the sampled radius" if grows
                            else f"holds with sup u = {u_full:.6g}"),
                "margin": u_full - u_half, "worst_point": [],
                "note": f"sup u(half radius) = {u_half:.6g}, sup u(full) = {u_full:.6g}",
            })
    max_sigma = float(rep.sigma_norm.max())
    tg = max_sigma <= DEFAULT_TOL
    conclusion = {"max_sigma": max_sigma, "totally_geodesic": tg}
    if theorem_id in ("Thm4.5", "Cor4.6"):
        gap = K - bound
        conclusion["max_K_minus_bound"] = float(gap.max())
        conclusion["K_le_bound"] = bool(gap.max() <= SIGN_TOL)
    # weaker variants: K >= bound together with K >= 0, or with parabolicity
    if theorem_id in ("Thm4.1", "Cor4.2"):
        conclusion["variant_K_ge_bound_and_K_ge_0"] = bool(
            np.all(K - bound >= -SIGN_TOL) and np.all(K >= -SIGN_TOL))
        conclusion["variant_parabolic"] = "deferred to capacity scan"
    failing = [h["name"] for h in out if not h["holds"]]
    holding = [h["name"] for h in out if h["holds"] and h["name"] != "stationary"]
    for h in out:
        if not h["holds"]:
            flags.append(f"{h['name']} fails" + (" globally" if h["name"] == "(subquadratic)" else ""))
    if not tg and len(failing) == 1:
        msg = f"assumption {failing[0]} cannot be dropped"
        if holding:
            msg += ", although " + " and ".join(holding) + " " + (
                "is" if len(holding) == 1 else "are") + " satisfied"
        flags.append(msg)
    if not failing:
        flags.append("all hypotheses hold on the sample")
    C_fit = C_full if np.isfinite(C_full) else None
    return HypothesisReport(theorem_id, len(pts), out, conclusion, C_fit, flags)


# ---------------------------------------------------------------- dispatch
CHECKS = ("gradient", "laplacian", "lemma21", "lemma23", "eqK", "sectional", "gauss",
          "thm1", "thm2")
DEFAULT_CHECKS = ("gradient", "laplacian", "lemma21", "lemma23", "sectional", "gauss")


def run_checks(im: Immersion, grid: GridLike, checks: Sequence[str] = DEFAULT_CHECKS,
               tol: float = DEFAULT_TOL, alphas: Sequence[float] = (0.05, 0.5, 1.0)
               ) -> List[ResidualReport]:
    """Run several checks on one shared evaluation of the grid.

    A check whose precondition fails yields a failed report carrying the
    error message instead of raising.
    """
    rep = extrinsic_report(im, _points(grid))
    out = []
    for name in checks:
        try:
            if name == "gradient":
                out.append(check_gradient_identities(im, grid, tol, rep))
            elif name == "laplacian":
                out.append(check_laplacian_u(im, grid, tol, rep))
            elif name in ("lemma21", "lemma23", "eqK"):
                out.append(check_lemma_dlog(im, grid, name, tol, rep))
            elif name == "sectional":
                out.append(check_sectional_lemma(im, grid, tol, rep))
            elif name == "gauss":
                out.append(check_gauss_equation(im, grid, tol, rep))
            elif name == "thm1":
                out.extend(proof_witness_thm1(im, grid, a, tol, rep=rep) for a in alphas)
            elif name == "thm2":
                out.extend(proof_witness_thm2(im, grid, a, tol, rep=rep) for a in alphas)
            else:
                raise ValueError(f"unknown check {name!r}; known: {', '.join(CHECKS)}")
        except PreconditionError as exc:
            out.append(ResidualReport(name, len(rep), float("inf"), [], tol, False,
                                      {"error": str(exc)}))
    return out
