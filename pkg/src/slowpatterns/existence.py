"""Existence conditions for standing/traveling fronts and pulses.

Front speeds solve the quadratic  c0 mu1~ + c0^2 M2cc + M2 = 0; pulse speeds
come from C_hom(mu2~) with the existence inequality c0^2 M2cc + M2 > 0.  The
log(eps) pulse geometry (half-length, gap, hyperplane offset) is evaluated from
the coefficient table, and leading-order pattern profiles are assembled from
the heteroclinic plus its first-order orbit correction.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from ._num import fd_derivative
from .errors import RegimeError, SolverError
from .melnikov import CoefficientEngine, MelnikovReport
from .reduced_flow import Profile

__all__ = [
    "FrontBranchSet",
    "PulseBranchSet",
    "PulseGeometry",
    "PatternProfile",
    "front_speeds",
    "pulse_speeds",
    "pulse_geometry",
    "assemble_pattern",
    "front_diagram_rows",
    "pulse_diagram_rows",
]

_DEGENERACY_RTOL = 1e-12


@dataclass(frozen=True)
class FrontBranchSet:
    """Traveling-front speeds at one scaled parameter offset mu1~."""

    mu1_tilde: float
    speeds: tuple[float, ...]
    classification: str            # transcritical | no-bifurcation | saddle-node
    mu_sn_plus: float | None = None
    mu_sn_minus: float | None = None
    c_at_sn_plus: float | None = None
    c_at_sn_minus: float | None = None
    residuals: tuple[float, ...] = ()


def _front_classification(M2: float, M2cc: float, scale: float) -> str:
    if abs(M2) <= 1e-10 * scale:
        return "transcritical"
    if M2 * M2cc < 0:
        return "no-bifurcation"
    return "saddle-node"


def front_speeds(rep: MelnikovReport, mu1_tilde: float) -> FrontBranchSet:
    """Real roots of the front-speed quadratic with the bifurcation classification."""
    M2, M2cc = rep.M2, rep.M2cc
    grad_norm = float(np.linalg.norm(list(rep.grad_M_star.values()))) if rep.grad_M_star else 1.0
    if grad_norm == 0.0:
        raise RegimeError("degenerate gradient of M*; the scaled offset mu1~ is undefined")
    scale = max(abs(M2), abs(M2cc), rep.norm_qsq)
    if abs(M2cc) <= _DEGENERACY_RTOL * scale:
        raise RegimeError("M2cc = 0 is degenerate; no front classification available")
    cls = _front_classification(M2, M2cc, scale)

    disc = mu1_tilde**2 - 4.0 * M2cc * M2
    speeds: list[float] = []
    if disc >= 0:
        r = np.sqrt(disc)
        speeds = [(-mu1_tilde + r) / (2 * M2cc), (-mu1_tilde - r) / (2 * M2cc)]
    # Newton polish per root on the quadratic (pins the 1e-12 residual bound)
    out = []
    resid = []
    for c in speeds:
        for _ in range(3):
            f = c * mu1_tilde + c * c * M2cc + M2
            fp = mu1_tilde + 2 * c * M2cc
            if fp != 0 and abs(f) > 0:
                c -= f / fp
        out.append(float(c))
        resid.append(abs(c * mu1_tilde + c * c * M2cc + M2))
    kw = {}
    if cls == "saddle-node":
        s = 2.0 * np.sqrt(M2 * M2cc)
        kw = {
            "mu_sn_plus": s,
            "mu_sn_minus": -s,
            "c_at_sn_plus": -s / (2 * M2cc),
            "c_at_sn_minus": s / (2 * M2cc),
        }
    return FrontBranchSet(mu1_tilde=float(mu1_tilde), speeds=tuple(out),
                          classification=cls, residuals=tuple(resid), **kw)


@dataclass(frozen=True)
class PulseBranchSet:
    """Stationary/traveling pulse branches at one scaled offset mu2~."""

    mu2_tilde: float
    case_label: str                # (i) | (ii) | (iii) | (iv)
    stationary_exists: bool
    C_hom: float
    traveling_speeds: tuple[float, ...]
    mu_hom_TW: float
    c0_het_cycle: float | None     # split-up speed for cases (ii)/(iii)
    existence_value: float         # c0^2 M2cc + M2 at the traveling speed


def pulse_case_label(M2: float, M2cc: float) -> str:
    if M2 > 0 and M2cc > 0:
        return "(i)"
    if M2 > 0 and M2cc < 0:
        return "(ii)"
    if M2 < 0 and M2cc > 0:
        return "(iii)"
    return "(iv)"


def pulse_speeds(rep: MelnikovReport, mu2_tilde: float) -> PulseBranchSet:
    """Corollary-2.4-style pulse branches: stationary always for M2 > 0, and the
    symmetric traveling pair c0 = +-sqrt(C_hom) where admissible."""
    M2, M2cc, G1cp = rep.M2, rep.M2cc, rep.G1c_plus
    al = rep.alpha_plus
    scale = max(abs(M2), abs(M2cc), rep.norm_qsq)
    if abs(M2cc) <= _DEGENERACY_RTOL * scale or abs(G1cp) <= _DEGENERACY_RTOL:
        raise RegimeError("degenerate M2cc or G1c_plus; pulse classification unavailable")
    label = pulse_case_label(M2, M2cc)
    sa = np.sqrt(al)
    C_hom = (2.0 * sa * mu2_tilde - G1cp * M2) / (G1cp * M2cc)
    mu_TW = G1cp * M2 / (2.0 * sa)
    speeds: tuple[float, ...] = ()
    existence = np.nan
    if label != "(iv)" and C_hom > 0:
        existence = C_hom * M2cc + M2
        if existence > 0:
            c = float(np.sqrt(C_hom))
            speeds = (c, -c)
    c_hc = float(np.sqrt(-M2 / M2cc)) if M2 * M2cc < 0 else None
    return PulseBranchSet(
        mu2_tilde=float(mu2_tilde),
        case_label=label,
        stationary_exists=bool(M2 > 0),
        C_hom=float(C_hom),
        traveling_speeds=speeds,
        mu_hom_TW=float(mu_TW),
        c0_het_cycle=c_hc,
        existence_value=float(existence),
    )


@dataclass(frozen=True)
class PulseGeometry:
    """The |log eps| geometry of a nearly heteroclinic pulse."""

    eps: float
    c0: float
    mu2_tilde: float
    X_h: float
    Y0: float
    Y1_tilde: float
    v_at_Xh: float
    gap_W_h: float
    mu2_gap_zero: float            # hyperplane offset where the gap closes

    def X_h_of(self, c0: float, eps: float) -> float:
        """Half-length including the first-order Y correction for signed c0."""
        Y = self.Y0 + eps * c0 * self.Y1_tilde * abs(np.log(eps))
        return float(np.log(self._beta_plus * Y / eps) / np.sqrt(self._alpha_plus))

    # stashed for X_h_of; set in pulse_geometry
    _beta_plus: float = 0.0
    _alpha_plus: float = 0.0


def pulse_geometry(rep: MelnikovReport, c0: float, eps: float,
                   mu2_tilde: float) -> PulseGeometry:
    """X_h, Y0, Y1~, the turning value, and the manifold gap at (c0, eps, mu2~)."""
    if not (0 < eps < 1):
        raise RegimeError(f"eps = {eps} outside (0, 1)")
    M2, M2cc = rep.M2, rep.M2cc
    al, be = rep.alpha_plus, rep.beta_plus
    G1cp = rep.G1c_plus
    D = M2 + c0 * c0 * M2cc
    if D <= 0:
        raise RegimeError(
            f"existence inequality violated: M2 + c0^2 M2cc = {D:.6g} <= 0"
        )
    sa = np.sqrt(al)
    leps = abs(np.log(eps))
    X_h = leps / sa + np.log(be * np.sqrt(2.0 * al) / np.sqrt(D)) / sa
    Y0 = np.sqrt(2.0 * al) / np.sqrt(D)
    Y1t = -0.5 * np.sqrt(2.0) * (mu2_tilde * sa + 0.5 * G1cp * D) / D**1.5
    v_at = rep.V_plus - np.sqrt(2.0 * D) / sa * eps
    gap = (c0 * np.sqrt(2.0) * (mu2_tilde * sa - 0.5 * G1cp * D) / (al * np.sqrt(D))
           * eps * eps * leps)
    mu2_zero = G1cp * D / (2.0 * sa)
    g = PulseGeometry(eps=float(eps), c0=float(c0), mu2_tilde=float(mu2_tilde),
                      X_h=float(X_h), Y0=float(Y0), Y1_tilde=float(Y1t),
                      v_at_Xh=float(v_at), gap_W_h=float(gap),
                      mu2_gap_zero=float(mu2_zero),
                      _beta_plus=float(be), _alpha_plus=float(al))
    return g


@dataclass
class PatternProfile:
    """Leading-order (U, V) pattern at finite eps."""

    X: np.ndarray
    U: np.ndarray
    V: np.ndarray
    kind: str              # "front" | "pulse"
    eps: float
    c: float
    order: int
    boundary_error: float = np.nan

    def to_rows(self) -> np.ndarray:
        return np.column_stack([self.X, self.U, self.V])


def _front_v(eng: CoefficientEngine, c0: float, eps: float, order: int) -> np.ndarray:
    v = eng.profile.v.copy()
    if order >= 1 and c0 != 0.0:
        tv1, _ = eng.first_order_orbit()
        v = v + eps * c0 * tv1
    return v


def _u_from_manifold(eng: CoefficientEngine, v: np.ndarray, q: np.ndarray, c0: float,
                     eps: float, order: int) -> np.ndarray:
    br = eng.profile.potential.branch
    mdl = br.model
    tau = eng.tau
    u = br.f_at(v)
    if order >= 1:
        Fu = np.asarray(mdl.partial("F", 1, 0, u, v))
        Fv = np.asarray(mdl.partial("F", 0, 1, u, v))
        ft1 = (-Fv / Fu) / Fu
        u = u - eps * c0 * tau * q * ft1
        if order >= 2:
            Fuu = np.asarray(mdl.partial("F", 2, 0, u, v))
            Fuv = np.asarray(mdl.partial("F", 1, 1, u, v))
            Fvv = np.asarray(mdl.partial("F", 0, 2, u, v))
            Gq = np.asarray(mdl.partial("G", 0, 0, br.f_at(v), v))
            fp_ = -Fv / Fu
            fpp = -(Fuu * fp_**2 + 2 * Fuv * fp_ + Fvv) / Fu
            ft1p = fpp / Fu - fp_ * (Fuu * fp_ + Fuv) / Fu**2
            F2cc = (0.5 * q**2 * ft1**2 * Fuu - q**2 * ft1p + ft1 * Gq) / Fu
            F2 = (q**2 * fpp - fp_ * Gq) / Fu
            u = u - eps**2 * (c0**2 * tau**2 * F2cc + F2)
    return u


def assemble_pattern(eng: CoefficientEngine, kind: str, c: float, eps: float,
                     order: int = 1, rep: MelnikovReport | None = None,
                     mu2_tilde: float = 0.0) -> PatternProfile:
    """Leading-order pattern (U_s, V_s) at finite eps.

    Fronts live on the profile grid; pulses are built by reflection-gluing of
    the heteroclinic at the half-lengths X_h(c), X_h(-c).
    """
    pr = eng.profile
    X = pr.X
    h = pr.h
    pot = pr.potential
    if kind == "front":
        v = _front_v(eng, c, eps, order)
        q = fd_derivative(v, h)
        u = _u_from_manifold(eng, v, q, c, eps, order)
        b_err = max(abs(v[0] - pot.V_minus), abs(v[-1] - pot.V_plus))
        return PatternProfile(X=X.copy(), U=u, V=v, kind="front", eps=eps, c=float(c),
                              order=order, boundary_error=float(b_err))
    if kind != "pulse":
        raise SolverError(f"unknown pattern kind {kind!r}")

    al, be = pr.alpha_plus, pr.beta_plus
    if rep is None:
        # stationary assembly needs only M2 (> 0); the c0^2 M2cc term drops out
        if c != 0.0:
            raise SolverError("traveling pulse assembly needs the coefficient report")
        D = eng.M2
        if D <= 0:
            raise SolverError(f"no pulse homoclinic to V_minus: M2 = {D:.6g} <= 0")
        Xh_p = Xh_m = float(np.log(be * np.sqrt(2 * al) / np.sqrt(D) / eps) / np.sqrt(al))
    else:
        D = rep.M2 + c * c * rep.M2cc
        geo_p = pulse_geometry(rep, c, eps, mu2_tilde)
        Xh_p = geo_p.X_h_of(c, eps)
        Xh_m = geo_p.X_h_of(-c, eps)
    tv1, _ = eng.first_order_orbit()
    v_of = CubicSpline(X, pr.v)
    t_of = CubicSpline(X, tv1)
    # the second-order growing mode near the turning point; its zero-slope
    # point defines X_h, so including it makes the gluing C^1 at the maximum
    grow = -D / (2 * al * be)

    L = pr.X_max - max(Xh_p, Xh_m) - 2.0 * h
    n2 = int(L / h)
    Xp = np.linspace(-n2 * h, n2 * h, 2 * n2 + 1)
    neg = Xp <= 0
    v = np.empty_like(Xp)
    v[neg] = (v_of(Xp[neg] + Xh_p) + eps * c * t_of(Xp[neg] + Xh_p) * (order >= 1)
              + eps**2 * grow * np.exp(np.sqrt(al) * (Xp[neg] + Xh_p)))
    v[~neg] = (v_of(-Xp[~neg] + Xh_m) - eps * c * t_of(-Xp[~neg] + Xh_m) * (order >= 1)
               + eps**2 * grow * np.exp(np.sqrt(al) * (-Xp[~neg] + Xh_m)))
    q = fd_derivative(v, h)
    glue_mismatch = float(abs(v[n2 - 1] - 2 * v[n2] + v[n2 + 1]) / h)  # C1 defect scale
    if glue_mismatch > 10.0 * eps:
        raise SolverError(f"pulse gluing mismatch {glue_mismatch:.3e} beyond tolerance")
    u = _u_from_manifold(eng, v, q, c, eps, order)
    b_err = max(abs(v[0] - pot.V_minus), abs(v[-1] - pot.V_minus))
    return PatternProfile(X=Xp, U=u, V=v, kind="pulse", eps=eps, c=float(c), order=order,
                          boundary_error=float(b_err))


# ---------------------------------------------------------------------------
# diagram tables


def front_diagram_rows(rep: MelnikovReport, mu1_values: np.ndarray,
                       stability_tag=None) -> list[tuple]:
    """Dense (mu1~, branch_id, c0, case, tag) rows for the front diagram."""
    rows = []
    for mu1 in np.asarray(mu1_values, dtype=float):
        fb = front_speeds(rep, float(mu1))
        for k, c in enumerate(fb.speeds):
            tag = stability_tag(c, mu1) if stability_tag is not None else ""
            rows.append((float(mu1), k, float(c), fb.classification, tag))
    return rows


def pulse_diagram_rows(rep: MelnikovReport, mu2_values: np.ndarray,
                       stability_tag=None) -> list[tuple]:
    """Dense (mu2~, branch_id, c0, case, tag) rows for the pulse diagram."""
    rows = []
    for mu2 in np.asarray(mu2_values, dtype=float):
        pb = pulse_speeds(rep, float(mu2))
        if pb.stationary_exists:
            tag = stability_tag(0.0, mu2) if stability_tag is not None else ""
            rows.append((float(mu2), 0, 0.0, pb.case_label, tag))
        for k, c in enumerate(pb.traveling_speeds, start=1):
            tag = stability_tag(c, mu2) if stability_tag is not None else ""
            rows.append((float(mu2), k, float(c), pb.case_label, tag))
    return rows
