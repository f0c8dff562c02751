"""Melnikov-type coefficients of the existence and stability theory.

Everything is evaluated along the equal-well heteroclinic profile.  The
first-order orbit correction solves  L* tv1 = -q G1c(v),  and the second-order
existence/spectral coefficients follow from quadratures of the expansion
right-hand sides.  Three internal identities serve as consistency anchors and
are exposed for testing:

    N2cl  = 2 M2cc,        N2cc = -sqrt(alpha+) M2cc,
    N2    = -sqrt(alpha+) M2,   and  N1c = 0 at the M* root.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq

from ._num import fd_derivative, integrate
from .errors import LevelSetError, RegimeError, SolverError, WellBalanceError
from .linear_ops import FundamentalPair, fundamental_pair, solve_inhomogeneous
from .manifold import Branch, find_branches
from .model import ModelInstance
from .reduced_flow import (
    EQUAL_WELL_RTOL,
    Potential,
    Profile,
    build_potential,
    heteroclinic_profile,
)

__all__ = [
    "CoefficientEngine",
    "MelnikovReport",
    "PersistenceResult",
    "engine_for",
    "persistence_integral",
    "m_star",
    "first_order_orbit",
    "second_order_coeffs",
    "spectral_coeffs",
    "find_mu_t_star",
    "grad_m_star",
]

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(200)


@dataclass
class Numerics:
    """Pipeline controls shared by branch, potential and profile construction."""

    v_margin: float = 0.35
    u_margin: float = 1.0
    n_v: int = 2001
    n_half: int = 4096
    X_max: float | None = None

    def key(self):
        return (self.v_margin, self.u_margin, self.n_v, self.n_half, self.X_max)


class CoefficientEngine:
    """All coefficient quadratures along one heteroclinic profile."""

    def __init__(self, profile: Profile, tau: float | None = None):
        if profile.kind != "heteroclinic":
            raise SolverError("coefficient engine requires a heteroclinic profile")
        self.profile = profile
        self.tau = profile.tau if tau is None else float(tau)
        self.fp = fundamental_pair(profile)
        self._fields: dict[str, np.ndarray] = {}
        self._cache: dict[str, object] = {}
        self._build_fields()

    # -- grid fields ------------------------------------------------------

    def _build_fields(self) -> None:
        pr = self.profile
        br = pr.potential.branch
        mdl = br.model
        v = pr.v
        u = br.f_at(v)
        P = {}
        for which in ("F", "G"):
            for i, j in ((0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2),
                         (3, 0), (2, 1), (1, 2), (0, 3)):
                P[f"{which}{'u' * i}{'v' * j}"] = np.asarray(mdl.partial(which, i, j, u, v))
        f = self._fields
        tau = self.tau
        q = pr.q
        Fu, Fv = P["Fu"], P["Fv"]
        Fuu, Fuv, Fvv = P["Fuu"], P["Fuv"], P["Fvv"]
        Gu, Gv = P["Gu"], P["Gv"]
        Guu, Guv, Gvv = P["Guu"], P["Guv"], P["Gvv"]
        g = P["G"]
        fp_ = -Fv / Fu
        fpp = -(Fuu * fp_**2 + 2 * Fuv * fp_ + Fvv) / Fu
        ft1 = fp_ / Fu
        ft1p = fpp / Fu - fp_ * (Fuu * fp_ + Fuv) / Fu**2
        f.update(P)
        f["u"] = u
        f["fp"] = fp_
        f["fpp"] = fpp
        f["ft1"] = ft1
        f["ft1p"] = ft1p
        f["g"] = g
        f["qX"] = -g                     # v_a,XX
        f["G1c"] = 1.0 - tau * ft1 * Gu
        f["G1c_v"] = -tau * (ft1p * Gu + ft1 * (Guu * fp_ + Guv))
        f["F2cc"] = (0.5 * q**2 * ft1**2 * Fuu - q**2 * ft1p + ft1 * g) / Fu
        f["F2"] = (q**2 * fpp - fp_ * g) / Fu
        f["G2cc"] = -f["F2cc"] * Gu + 0.5 * q**2 * ft1**2 * Guu
        f["G2"] = -f["F2"] * Gu
        f["Gamma"] = fp_**2 * Guu + 2 * fp_ * Guv + Gvv + fpp * Gu

    def __getitem__(self, name: str) -> np.ndarray:
        return self._fields[name]

    @property
    def X(self) -> np.ndarray:
        return self.profile.X

    @property
    def q(self) -> np.ndarray:
        return self.profile.q

    def _int(self, y: np.ndarray) -> float:
        return integrate(y, self.X)

    # -- first order ------------------------------------------------------

    @property
    def norm_qsq(self) -> float:
        if "norm_qsq" not in self._cache:
            self._cache["norm_qsq"] = self._int(self.q**2)
        return self._cache["norm_qsq"]

    @property
    def m_star(self) -> float:
        if "m_star" not in self._cache:
            self._cache["m_star"] = self._int(self["G1c"] * self.q**2)
        return self._cache["m_star"]

    @property
    def G1c_plus(self) -> float:
        """Limit of G1c along the profile at the right saddle."""
        pr = self.profile
        br = pr.potential.branch
        Vp = pr.potential.V_plus
        u, fp_, _ = br.derivatives_at(Vp)
        Fu = br.model.partial("F", 1, 0, u, Vp)
        Gu = br.model.partial("G", 1, 0, u, Vp)
        return float(1.0 - self.tau * fp_ * Gu / Fu)

    def first_order_orbit(self):
        """(tv1, ut1) with tv1 the decaying-left solution of L* tv1 = -q G1c."""
        if "tv1" not in self._cache:
            sol = solve_inhomogeneous(self.fp, -self.q * self["G1c"], remove_growth=True)
            self._cache["tv1_sol"] = sol
            self._cache["tv1"] = sol.v
            self._cache["tv1X"] = sol.vX
            self._cache["ut1"] = self["fp"] * sol.v - self.tau * self.q * self["ft1"]
        return self._cache["tv1"], self._cache["ut1"]

    # -- second order existence coefficients ------------------------------

    @property
    def M2(self) -> float:
        if "M2" not in self._cache:
            self._cache["M2"] = self._int(self["G2"] * self.q)
        return self._cache["M2"]

    def _require_near_root(self, what: str, tol: float = 1e-6) -> None:
        scale = max(self.norm_qsq, 1e-300)
        if abs(self.m_star) > tol * scale:
            raise RegimeError(
                f"{what} diverges away from the M* root (|M*| = {abs(self.m_star):.3e}); "
                "evaluate at (or FD-close to) mu_t*"
            )

    def second_order_coeffs(self) -> tuple[float, float]:
        """(M2cc, M2); M2cc only converges at the M* root."""
        if "M2cc" not in self._cache:
            self._require_near_root("M2cc")
            tv1, _ = self.first_order_orbit()
            tv1X = self._cache["tv1X"]
            integrand = (self["G1c_v"] * self.q * tv1 + self["G1c"] * tv1X
                         + 0.5 * self["Gamma"] * tv1**2 + self.tau**2 * self["G2cc"])
            self._cache["M2cc"] = self._int(integrand * self.q)
        return self._cache["M2cc"], self.M2

    # -- spectral coefficients --------------------------------------------

    def _hJ1c(self) -> np.ndarray:
        if "hJ1c" not in self._cache:
            tv1, ut1 = self.first_order_orbit()
            f = self._fields
            q = self.q
            Fs_uu = ut1 * f["Fuu"] + tv1 * f["Fuv"]
            Fs_vv = ut1 * f["Fuv"] + tv1 * f["Fvv"]
            Gs_uu = ut1 * f["Guu"] + tv1 * f["Guv"]
            Gs_vv = ut1 * f["Guv"] + tv1 * f["Gvv"]
            fqaX = f["fpp"] * q**2 + f["fp"] * f["qX"]
            self._cache["Fs_uu"], self._cache["Fs_vv"] = Fs_uu, Fs_vv
            self._cache["Gs_uu"], self._cache["Gs_vv"] = Gs_uu, Gs_vv
            self._cache["fqaX"] = fqaX
            self._cache["hJ1c"] = (
                (self.tau * f["Gu"] * fqaX / f["Fu"] - f["qX"])
                + ((Fs_uu * f["fp"] + Fs_vv) * f["Gu"]
                   - (Gs_uu * f["fp"] + Gs_vv) * f["Fu"]) / f["Fu"] * q
            )
        return self._cache["hJ1c"]

    @property
    def N1c(self) -> float:
        if "N1c" not in self._cache:
            self._cache["N1c"] = self._int(self._hJ1c() * self.q)
        return self._cache["N1c"]

    def spectral_coeffs(self) -> "SpectralCoefficients":
        if "spectral" in self._cache:
            return self._cache["spectral"]
        self._require_near_root("the N2-family")
        f = self._fields
        q = self.q
        tau = self.tau
        tv1, ut1 = self.first_order_orbit()
        tv1X = self._cache["tv1X"]
        hJ1c = self._hJ1c()
        Fs_uu, Fs_vv = self._cache["Fs_uu"], self._cache["Fs_vv"]
        Gs_uu, Gs_vv = self._cache["Gs_uu"], self._cache["Gs_vv"]
        fqaX = self._cache["fqaX"]
        h = self.profile.h

        sol_hv1c = solve_inhomogeneous(self.fp, hJ1c, remove_growth=True)
        hv1c, hv1cX = sol_hv1c.v, sol_hv1c.vX
        hu1l = -f["fp"] * tv1 + tau * f["fp"] * q / f["Fu"]
        hu1c = f["fp"] * hv1c - (tau * fqaX + (Fs_uu * f["fp"] + Fs_vv) * q) / f["Fu"]

        hJ2ll = f["G1c"] * tv1 + tau**2 * f["Gu"] * f["fp"] * q / f["Fu"] ** 2
        N2ll = self._int(hJ2ll * q)

        hu1lX = fd_derivative(hu1l, h)
        hu1cX = fd_derivative(hu1c, h)
        hI2cl = (tau * (hu1lX - hu1c) + Fs_uu * hu1l - Fs_vv * tv1) / f["Fu"]
        hJ2cl = f["Gu"] * hI2cl + hv1c + tv1X - Gs_uu * hu1l + Gs_vv * tv1
        N2cl = self._int(hJ2cl * q)

        # second-order orbit corrections, split by powers of c
        rhs2cc = -(f["G1c_v"] * q * tv1 + f["G1c"] * tv1X + 0.5 * f["Gamma"] * tv1**2) \
            - tau**2 * f["G2cc"]
        tv2cc = solve_inhomogeneous(self.fp, rhs2cc).v
        tv2 = solve_inhomogeneous(self.fp, -f["G2"]).v
        ut2cc = (f["fp"] * tv2cc + 0.5 * f["fpp"] * tv1**2
                 - tau * (q * f["ft1p"] * tv1 + f["ft1"] * tv1X) - tau**2 * f["F2cc"])
        ut2 = f["fp"] * tv2 - f["F2"]

        Fs_uuu = 0.5 * ut1**2 * f["Fuuu"] + ut1 * tv1 * f["Fuuv"] + 0.5 * tv1**2 * f["Fuvv"]
        Fs_vvv = 0.5 * ut1**2 * f["Fuuv"] + ut1 * tv1 * f["Fuvv"] + 0.5 * tv1**2 * f["Fvvv"]
        Gs_uuu = 0.5 * ut1**2 * f["Guuu"] + ut1 * tv1 * f["Guuv"] + 0.5 * tv1**2 * f["Guvv"]
        Gs_vvv = 0.5 * ut1**2 * f["Guuv"] + ut1 * tv1 * f["Guvv"] + 0.5 * tv1**2 * f["Gvvv"]

        hI2cc = (tau * hu1cX + Fs_uu * hu1c + Fs_vv * hv1c
                 + ((ut2cc * f["Fuu"] + tv2cc * f["Fuv"] + Fs_uuu) * f["fp"]
                    + (ut2cc * f["Fuv"] + tv2cc * f["Fvv"] + Fs_vvv)) * q) / f["Fu"]
        hJ2cc = (f["Gu"] * hI2cc - hv1cX - Gs_uu * hu1c - Gs_vv * hv1c
                 - ((ut2cc * f["Guu"] + tv2cc * f["Guv"] + Gs_uuu) * f["fp"]
                    + (ut2cc * f["Guv"] + tv2cc * f["Gvv"] + Gs_vvv)) * q)
        N2cc = self._int(hJ2cc * q)

        fqaXX = fd_derivative(fqaX, h)
        hI2 = (fqaXX + ((ut2 * f["Fuu"] + tv2 * f["Fuv"]) * f["fp"]
                        + (ut2 * f["Fuv"] + tv2 * f["Fvv"])) * q) / f["Fu"]
        hJ2 = f["Gu"] * hI2 - ((ut2 * f["Guu"] + tv2 * f["Guv"]) * f["fp"]
                               + (ut2 * f["Guv"] + tv2 * f["Gvv"])) * q
        N2 = self._int(hJ2 * q)

        out = SpectralCoefficients(N1c=self.N1c, N2ll=N2ll, N2cl=N2cl, N2cc=N2cc, N2=N2)
        self._cache["spectral"] = out
        self._cache["hv1c"] = hv1c
        return out

    # -- consistency anchors ----------------------------------------------

    def selfadjoint_reduction_residual(self) -> float:
        """Remark-3.4-style identity: int G1c q hv1c = -int hJ1c tv1."""
        self.spectral_coeffs()
        tv1, _ = self.first_order_orbit()
        lhs = self._int(self["G1c"] * self.q * self._cache["hv1c"])
        rhs = -self._int(self._hJ1c() * tv1)
        return abs(lhs - rhs)

    def identity_residuals(self) -> dict[str, float]:
        """Relative residuals of the cross-identities between the coefficient families."""
        sc = self.spectral_coeffs()
        M2cc, M2 = self.second_order_coeffs()
        sa = np.sqrt(self.profile.alpha_plus)
        return {
            "N2cl_vs_2M2cc": abs(sc.N2cl - 2 * M2cc) / max(abs(2 * M2cc), 1e-300),
            "N2cc_vs_M2cc": abs(sc.N2cc + sa * M2cc) / max(abs(sa * M2cc), 1e-300),
            "N2_vs_M2": abs(sc.N2 + sa * M2) / max(abs(sa * M2), 1e-300),
            "N1c_at_root": abs(sc.N1c),
        }


@dataclass(frozen=True)
class SpectralCoefficients:
    N1c: float
    N2ll: float
    N2cl: float
    N2cc: float
    N2: float


# ---------------------------------------------------------------------------
# pipeline helpers


def _scan_window(m: ModelInstance, num: Numerics) -> tuple[tuple[float, float], tuple[float, float]]:
    """Heuristic (v, u) scan windows; widened relative to unit-scale models."""
    v_lo, v_hi = -1.0 - num.v_margin, 1.0 + num.v_margin
    return (v_lo, v_hi), (-1.0 - num.u_margin, 1.0 + num.u_margin)


def hyperbolic_branch(m: ModelInstance, num: Numerics | None = None,
                      v_range: tuple[float, float] | None = None,
                      u_window: tuple[float, float] | None = None) -> Branch:
    num = num or Numerics()
    vr, uw = _scan_window(m, num)
    v_range = v_range or vr
    u_window = u_window or uw
    branches = find_branches(m, v_range, u_window, n_v=num.n_v)
    for b in branches:
        if b.is_normally_hyperbolic:
            return b
    raise SolverError("no normally hyperbolic branch found in the scan window")


def engine_for(m: ModelInstance, num: Numerics | None = None,
               v_range: tuple[float, float] | None = None,
               u_window: tuple[float, float] | None = None) -> CoefficientEngine:
    """branch -> potential -> heteroclinic profile -> coefficient engine."""
    num = num or Numerics()
    b = hyperbolic_branch(m, num, v_range, u_window)
    pot = build_potential(b)
    pr = heteroclinic_profile(pot, X_max=num.X_max, n_half=num.n_half)
    return CoefficientEngine(pr)


# ---------------------------------------------------------------------------
# spec-level operations


def m_star(pr: Profile, tau: float | None = None) -> tuple[float, float]:
    """(M*, ||v_a,X||^2) for a heteroclinic profile."""
    eng = CoefficientEngine(pr, tau=tau)
    return eng.m_star, eng.norm_qsq


def first_order_orbit(pr: Profile, tau: float | None = None):
    eng = CoefficientEngine(pr, tau=tau)
    return eng.first_order_orbit()


def second_order_coeffs(pr: Profile, tau: float | None = None) -> tuple[float, float]:
    return CoefficientEngine(pr, tau=tau).second_order_coeffs()


def spectral_coeffs(pr: Profile, tau: float | None = None) -> SpectralCoefficients:
    return CoefficientEngine(pr, tau=tau).spectral_coeffs()


@dataclass(frozen=True)
class PersistenceResult:
    H0: float
    m_part: float          # the Melnikov quadrature of the persistence condition
    period: float          # T(H0); infinite on the homoclinic level
    A: float
    B: float


def persistence_integral(p: Potential, b: Branch, H0: float, tau: float) -> PersistenceResult:
    """Turning points and the persistence quadrature on the level set {H0}.

    At H0 = 0 this is the homoclinic persistence integral M_hom (with the
    level set from the deeper V_plus well, i.e. H0_plus > 0 assumed there).
    """
    p.require_double_well()
    if not (p.H0_center < H0 <= 0.0 or abs(H0) < 1e-14):
        raise LevelSetError(f"H0 = {H0:.6g} outside (H0_center, 0] = ({p.H0_center:.6g}, 0]")

    def G1c_of(v):
        v = np.atleast_1d(v)
        u = b.f_at(v)
        mdl = b.model
        Fu = np.asarray(mdl.partial("F", 1, 0, u, v))
        Fv = np.asarray(mdl.partial("F", 0, 1, u, v))
        Gu = np.asarray(mdl.partial("G", 1, 0, u, v))
        fp_ = -Fv / Fu
        return 1.0 - tau * (fp_ / Fu) * Gu

    def q2_of(v):
        return 2.0 * H0 + 2.0 * np.asarray(p.W0(v))

    homoclinic_level = abs(H0) < 1e-14
    if homoclinic_level:
        # homoclinic level through (V_minus, 0); B solves W0 = 0 in (V_c, V_+)
        A = p.V_minus
        lo = p.V_center + 1e-12
        hi = p.V_plus - 1e-12
        if p.W0(lo) * p.W0(hi) > 0:
            raise LevelSetError("homoclinic level: W0 has no zero in (V_center, V_plus)")
        B = float(brentq(lambda vv: float(p.W0(vv)), lo, hi, xtol=1e-15))
    else:
        target = -H0
        A = float(brentq(lambda vv: float(p.W0(vv)) - target, p.V_minus, p.V_center,
                         xtol=1e-15))
        B = float(brentq(lambda vv: float(p.W0(vv)) - target,
                         p.V_center, p.V_plus - 1e-14, xtol=1e-15))

    # cos-substitution absorbs the sqrt turning points:
    # v = mid - half cos(theta), q^2 = (v-A)(B-v) psi(v) with psi > 0 smooth
    mid, half = 0.5 * (A + B), 0.5 * (B - A)
    theta = 0.5 * (_GL_NODES + 1.0) * np.pi
    wts = 0.5 * np.pi * _GL_WEIGHTS
    vv = mid - half * np.cos(theta)
    q2 = np.maximum(q2_of(vv), 0.0)
    denom = (vv - A) * (B - vv)
    psi = q2 / np.where(denom > 0, denom, 1.0)
    sin_t = np.sin(theta)
    # m_part = int_A^B G1c sqrt(q2) dv = int G1c sqrt(psi) half^2 sin^2 dtheta
    m_part = float(np.sum(wts * G1c_of(vv) * np.sqrt(psi) * half**2 * sin_t**2))
    if homoclinic_level:
        period = np.inf  # the level set reaches the saddle (double zero at A)
    else:
        # T = 2 int_A^B dv/q = 2 int dtheta / sqrt(psi)
        period = float(2.0 * np.sum(wts / np.sqrt(np.maximum(psi, 1e-300))))
    return PersistenceResult(H0=float(H0), m_part=m_part, period=period, A=A, B=B)


def find_mu_t_star(
    m: ModelInstance,
    path: tuple[str, float, float],
    num: Numerics | None = None,
    n_scan: int = 13,
    tol: float = 1e-10,
) -> ModelInstance:
    """Root of M* along a one-parameter path (name, lo, hi); returns the rooted model.

    The path parameter may be any named parameter or "tau".  Raises when M*
    does not change sign along the scanned path.
    """
    name, lo, hi = path
    num = num or Numerics()

    def model_at(t: float) -> ModelInstance:
        if name == "tau":
            params = m.params.with_updates(tau=t)
        else:
            params = m.params.with_updates(**{name: t})
        return ModelInstance(m.F_expr, m.G_expr, params, name=m.name)

    def mstar_at(t: float) -> float:
        return engine_for(model_at(t), num).m_star

    ts = np.linspace(lo, hi, n_scan)
    vals = [mstar_at(t) for t in ts]
    bracket = None
    for k in range(n_scan - 1):
        if vals[k] == 0.0:
            bracket = (ts[k], ts[k])
            break
        if vals[k] * vals[k + 1] < 0:
            bracket = (ts[k], ts[k + 1])
            break
    if bracket is None:
        raise SolverError(
            f"M* does not change sign along {name} in [{lo}, {hi}] "
            f"(endpoint values {vals[0]:.3e}, {vals[-1]:.3e})"
        )
    if bracket[0] == bracket[1]:
        root = bracket[0]
    else:
        root = brentq(mstar_at, bracket[0], bracket[1], xtol=1e-14, rtol=8.9e-16)
    rooted = model_at(float(root))
    resid = engine_for(rooted, num).m_star
    if abs(resid) > tol:
        raise SolverError(f"|M*| = {abs(resid):.3e} at the located root exceeds {tol}")
    return rooted


def _balanced_model(m: ModelInstance, balance_param: str | None,
                    num: Numerics) -> ModelInstance:
    """One Newton correction on H0_plus = 0 along ``balance_param`` (if needed)."""
    b = hyperbolic_branch(m, num)
    pot = build_potential(b)
    W_scale = max(float(np.max(np.abs(pot.W0(np.linspace(pot.V_minus, pot.V_plus, 50))))), 1e-300)
    if abs(pot.H0_plus) <= EQUAL_WELL_RTOL * W_scale:
        return m
    if balance_param is None:
        raise WellBalanceError(
            "perturbed parameters break the equal-well property and no balance "
            "parameter was designated; gradient direction rejected"
        )
    t0 = m.params[balance_param]
    dt = 1e-6 * (1.0 + abs(t0))

    def H0p(t):
        mm = ModelInstance(m.F_expr, m.G_expr, m.params.with_updates(**{balance_param: t}),
                           name=m.name)
        return build_potential(hyperbolic_branch(mm, num)).H0_plus

    slope = (H0p(t0 + dt) - H0p(t0 - dt)) / (2 * dt)
    if slope == 0:
        raise WellBalanceError("balance parameter does not move the well imbalance")
    t1 = t0 - pot.H0_plus / slope
    out = ModelInstance(m.F_expr, m.G_expr, m.params.with_updates(**{balance_param: t1}),
                        name=m.name)
    pot1 = build_potential(hyperbolic_branch(out, num))
    if abs(pot1.H0_plus) > 1e3 * EQUAL_WELL_RTOL * W_scale:
        raise WellBalanceError(
            f"equal-well correction insufficient (H0_plus = {pot1.H0_plus:.3e}); "
            "gradient direction rejected"
        )
    return out


def _fd_gradient(m: ModelInstance, wrt: Sequence[str], value_of: Callable[[ModelInstance], float],
                 num: Numerics, h_rel: float = 1e-5,
                 balance_param: str | None = None) -> dict[str, float]:
    grad: dict[str, float] = {}
    for name in wrt:
        t0 = m.params.tau if name == "tau" else m.params[name]
        dt = h_rel * (1.0 + abs(t0))
        vals = []
        for t in (t0 + dt, t0 - dt):
            params = m.params.with_updates(tau=t) if name == "tau" \
                else m.params.with_updates(**{name: t})
            mm = ModelInstance(m.F_expr, m.G_expr, params, name=m.name)
            mm = _balanced_model(mm, balance_param, num)
            vals.append(value_of(mm))
        grad[name] = (vals[0] - vals[1]) / (2 * dt)
    return grad


def grad_m_star(m: ModelInstance, wrt: Sequence[str], num: Numerics | None = None,
                h_rel: float = 1e-5, balance_param: str | None = None) -> dict[str, float]:
    """Central-difference gradient of M* over named parameters (profile recomputed)."""
    num = num or Numerics()
    return _fd_gradient(m, wrt, lambda mm: engine_for(mm, num).m_star, num,
                        h_rel=h_rel, balance_param=balance_param)


def grad_n1c(m: ModelInstance, wrt: Sequence[str], num: Numerics | None = None,
             h_rel: float = 1e-5, balance_param: str | None = None) -> dict[str, float]:
    """Central-difference gradient of N1c over named parameters."""
    num = num or Numerics()
    return _fd_gradient(m, wrt, lambda mm: engine_for(mm, num).N1c, num,
                        h_rel=h_rel, balance_param=balance_param)


# ---------------------------------------------------------------------------
# report


@dataclass
class MelnikovReport:
    """The full coefficient table at one parameter point."""

    model_name: str
    params: dict[str, float]
    tau: float
    M_star: float
    norm_qsq: float
    M2cc: float
    M2: float
    N1c: float
    N2ll: float
    N2cl: float
    N2cc: float
    N2: float
    G1c_plus: float
    V_minus: float
    V_center: float
    V_plus: float
    W0_center: float
    alpha_minus: float
    alpha_plus: float
    beta_minus: float
    beta_plus: float
    gamma_plus: float
    grad_M_star: dict[str, float] = field(default_factory=dict)
    grad_N1c: dict[str, float] = field(default_factory=dict)
    M_hom: float | None = None
    persistence_table: list[dict] = field(default_factory=list)
    identity_residuals: dict[str, float] = field(default_factory=dict)
    grid: dict[str, float] = field(default_factory=dict)

    @property
    def N_r(self) -> float:
        """N2cl^2 / N2ll (the reduced quotient of the small-eigenvalue theory)."""
        return self.N2cl**2 / self.N2ll

    def N_c(self, c0_sq: float) -> float:
        """-(c0^2 N2cc + N2) = sqrt(alpha+) (c0^2 M2cc + M2) at leading order."""
        return -(c0_sq * self.N2cc + self.N2)

    def to_dict(self) -> dict:
        d = {
            "schema": "slowpatterns.melnikov_report.v1",
            "model": self.model_name,
            "params": dict(sorted(self.params.items())),
            "tau": self.tau,
            "coefficients": {
                "M_star": self.M_star,
                "norm_qsq": self.norm_qsq,
                "M2cc": self.M2cc,
                "M2": self.M2,
                "N1c": self.N1c,
                "N2ll": self.N2ll,
                "N2cl": self.N2cl,
                "N2cc": self.N2cc,
                "N2": self.N2,
                "G1c_plus": self.G1c_plus,
                "N_r": self.N_r,
            },
            "critical_points": {
                "V_minus": self.V_minus,
                "V_center": self.V_center,
                "V_plus": self.V_plus,
                "W0_center": self.W0_center,
            },
            "tails": {
                "alpha_minus": self.alpha_minus,
                "alpha_plus": self.alpha_plus,
                "beta_minus": self.beta_minus,
                "beta_plus": self.beta_plus,
                "gamma_plus": self.gamma_plus,
            },
            "grad_M_star": dict(sorted(self.grad_M_star.items())),
            "grad_N1c": dict(sorted(self.grad_N1c.items())),
            "M_hom": self.M_hom,
            "persistence_table": self.persistence_table,
            "identity_residuals": dict(sorted(self.identity_residuals.items())),
            "grid": dict(sorted(self.grid.items())),
        }
        return d


def full_report(m: ModelInstance, num: Numerics | None = None,
                wrt: Sequence[str] | None = None,
                balance_param: str | None = None,
                with_identities: bool = True) -> MelnikovReport:
    """Build the complete coefficient table at the given parameter point."""
    num = num or Numerics()
    eng = engine_for(m, num)
    pr = eng.profile
    sc = eng.spectral_coeffs()
    M2cc, M2 = eng.second_order_coeffs()
    wrt = list(wrt) if wrt is not None else list(m.params.names)
    gM = grad_m_star(m, wrt, num, balance_param=balance_param)
    gN = grad_n1c(m, wrt, num, balance_param=balance_param)
    rep = MelnikovReport(
        model_name=m.name,
        params=dict(m.params.values),
        tau=m.params.tau,
        M_star=eng.m_star,
        norm_qsq=eng.norm_qsq,
        M2cc=M2cc,
        M2=M2,
        N1c=sc.N1c,
        N2ll=sc.N2ll,
        N2cl=sc.N2cl,
        N2cc=sc.N2cc,
        N2=sc.N2,
        G1c_plus=eng.G1c_plus,
        V_minus=pr.potential.V_minus,
        V_center=pr.potential.V_center,
        V_plus=pr.potential.V_plus,
        W0_center=pr.potential.W0_center,
        alpha_minus=pr.alpha_minus,
        alpha_plus=pr.alpha_plus,
        beta_minus=pr.beta_minus,
        beta_plus=pr.beta_plus,
        gamma_plus=pr.gamma_plus,
        grad_M_star=gM,
        grad_N1c=gN,
        identity_residuals=eng.identity_residuals() if with_identities else {},
        grid={"n_nodes": len(pr.X), "X_max": pr.X_max, "h": pr.h},
    )
    return rep
