"""Essential spectrum, the rho-family of Sturm-Liouville operators, O(1) eigenvalue
counting, asymptotic small eigenvalues (1D, interface, stripe), and theorem-level
stability classification.

O(1) eigenvalues of the nonlinear eigenvalue problem are intersections
lambda_j(rho) = rho/tau of the eigencurves of  L_rho = d^2/dX^2 + f'G_u + G_v
- rho f'G_u/(rho - F_u)  (all coefficients along the base profile) with the
line rho/tau; the small eigenvalues come from the Melnikov coefficient table.
"""
from __future__ import annotations

import cmath
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.optimize import brentq

from ._num import integrate
from .errors import RegimeError, SolverError
from .melnikov import MelnikovReport
from .model import ModelInstance
from .reduced_flow import Profile

__all__ = [
    "EssentialSpectrumReport",
    "EigencurveFamily",
    "O1Report",
    "SmallEigenvalueSet",
    "TransverseEigenvalues",
    "StabilityVerdict",
    "background_stability",
    "eigencurves",
    "o1_eigenvalues",
    "small_eigenvalues",
    "transverse_eigenvalues",
    "classify",
]


# ---------------------------------------------------------------------------
# essential spectrum


@dataclass(frozen=True)
class BackgroundState:
    U: float
    V: float
    Fu: float
    Fv: float
    Gu: float
    Gv: float
    is_saddle: bool
    is_stable: bool
    sigma_ess_at_zero: float
    sigma_ess_at_infinity: float

    def sigma_ess_edge(self, rho):
        """Boundary of the essential spectrum of L_rho for this state."""
        rho = np.asarray(rho, dtype=float)
        det = self.Fu * self.Gv - self.Fv * self.Gu
        return det / self.Fu + (self.Fv * self.Gu / self.Fu) * rho / (rho - self.Fu)


@dataclass(frozen=True)
class EssentialSpectrumReport:
    tau: float
    states: tuple[BackgroundState, ...]

    @property
    def all_saddle(self) -> bool:
        return all(s.is_saddle for s in self.states)

    @property
    def all_stable(self) -> bool:
        return all(s.is_stable for s in self.states)

    def edge(self, rho):
        """Worst-case (largest) essential-spectrum edge over the background states."""
        vals = np.stack([s.sigma_ess_edge(rho) for s in self.states])
        return np.max(vals, axis=0)


def background_stability(m: ModelInstance, state: tuple[float, float], tau: float | None = None,
                         root_tol: float = 1e-8) -> EssentialSpectrumReport:
    """Saddle/stability checks and the essential-spectrum edge for one background state."""
    tau = m.params.tau if tau is None else float(tau)
    U, V = state
    Fval = m.partial("F", 0, 0, U, V)
    Gval = m.partial("G", 0, 0, U, V)
    if abs(Fval) > root_tol or abs(Gval) > root_tol:
        raise SolverError(
            f"({U:.6g}, {V:.6g}) is not a root of F = G = 0 "
            f"(F = {Fval:.3e}, G = {Gval:.3e})"
        )
    Fu = m.partial("F", 1, 0, U, V)
    Fv = m.partial("F", 0, 1, U, V)
    Gu = m.partial("G", 1, 0, U, V)
    Gv = m.partial("G", 0, 1, U, V)
    det = Fu * Gv - Fv * Gu
    st = BackgroundState(
        U=float(U), V=float(V), Fu=float(Fu), Fv=float(Fv), Gu=float(Gu), Gv=float(Gv),
        is_saddle=bool(Fu < 0 and det > 0),
        is_stable=bool(Fu < 0 and det > 0 and Fu + tau * Gv < 0),
        sigma_ess_at_zero=float(det / Fu),
        sigma_ess_at_infinity=float(Gv),
    )
    return EssentialSpectrumReport(tau=tau, states=(st,))


def background_states_of(pr: Profile) -> tuple[tuple[float, float], ...]:
    """(U, V) background states the profile limits on (one for homoclinic, two for fronts)."""
    pot = pr.potential
    br = pot.branch
    if pr.kind == "homoclinic":
        return ((float(br.f_at(pot.V_minus)), pot.V_minus),)
    return ((float(br.f_at(pot.V_minus)), pot.V_minus),
            (float(br.f_at(pot.V_plus)), pot.V_plus))


# ---------------------------------------------------------------------------
# the rho-family of Sturm-Liouville operators


@dataclass
class _OperatorData:
    X: np.ndarray
    h: float
    pot0: np.ndarray         # f' G_u + G_v along the profile
    fpGu: np.ndarray         # f' G_u
    Fu: np.ndarray
    FvGu_over: np.ndarray    # F_v G_u (for lambda'(rho))


def _operator_data(pr: Profile) -> _OperatorData:
    br = pr.potential.branch
    mdl = br.model
    v = pr.v
    u = br.f_at(v)
    Fu = np.asarray(mdl.partial("F", 1, 0, u, v))
    Fv = np.asarray(mdl.partial("F", 0, 1, u, v))
    Gu = np.asarray(mdl.partial("G", 1, 0, u, v))
    Gv = np.asarray(mdl.partial("G", 0, 1, u, v))
    fp = -Fv / Fu
    return _OperatorData(X=pr.X, h=pr.h, pot0=fp * Gu + Gv, fpGu=fp * Gu, Fu=Fu,
                         FvGu_over=Fv * Gu)


def _solve_rho(data: _OperatorData, rho: float, lam_min: float, lam_max: float,
               want_vectors: bool):
    w = data.pot0 - rho * data.fpGu / (rho - data.Fu)
    n = len(data.X)
    d = -2.0 / data.h**2 + w[1:-1]
    e = np.full(n - 3, 1.0 / data.h**2)
    if lam_max <= lam_min:
        return (np.empty(0), None)
    try:
        if want_vectors:
            vals, vecs = eigh_tridiagonal(d, e, select="v", select_range=(lam_min, lam_max))
        else:
            vals = eigh_tridiagonal(d, e, select="v", select_range=(lam_min, lam_max),
                                    eigvals_only=True)
            vecs = None
    except Exception as exc:  # pragma: no cover - LAPACK failure surface
        raise SolverError(f"tridiagonal eigensolve failed at rho = {rho}: {exc}")
    order = np.argsort(vals)[::-1]
    vals = vals[order]
    if vecs is not None:
        vecs = vecs[:, order]
    return vals, vecs


@dataclass
class EigencurveFamily:
    """Eigenvalue branches lambda_j(rho) of L_rho above the essential-spectrum edge."""

    profile: Profile
    tau: float
    rho_grid: np.ndarray
    curves: np.ndarray                 # (n_curves, n_rho) with NaN where absent
    parities: list[str]
    lambda_prime: np.ndarray           # via the eigenfunction formula, same shape
    edge_values: np.ndarray
    margin: float
    ess_report: EssentialSpectrumReport
    appearance_markers: list[dict] = field(default_factory=list)
    large_rho: dict = field(default_factory=dict)
    _data: _OperatorData = None

    @property
    def n_curves(self) -> int:
        return self.curves.shape[0]

    def lambda_at(self, rho: float, j: int) -> float:
        """Re-solve the eigenproblem at an arbitrary rho and return branch j (from top)."""
        lam_min = float(self.ess_report.edge(rho)) + self.margin
        lam_cap = float(np.max(self._data.pot0)) + 1.0
        vals, _ = _solve_rho(self._data, rho, lam_min, lam_cap, want_vectors=False)
        if j >= len(vals):
            return np.nan
        return float(vals[j])

    def eigenfunction_at(self, rho: float, j: int):
        lam_min = float(self.ess_report.edge(rho)) + self.margin
        lam_cap = float(np.max(self._data.pot0)) + 1.0
        vals, vecs = _solve_rho(self._data, rho, lam_min, lam_cap, want_vectors=True)
        if j >= len(vals):
            raise SolverError(f"branch {j} absent at rho = {rho}")
        full = np.zeros(len(self._data.X))
        full[1:-1] = vecs[:, j]
        full /= np.sqrt(integrate(full**2, self._data.X))
        return float(vals[j]), full

    def lambda_prime_at(self, rho: float, j: int) -> float:
        """lambda_j'(rho) from the eigenfunction quadrature (the paper's evolution law)."""
        lam, vec = self.eigenfunction_at(rho, j)
        d = self._data
        integrand = d.FvGu_over / (rho - d.Fu) ** 2 * vec**2
        return float(-integrate(integrand, d.X))

    def secant_slopes(self) -> np.ndarray:
        """Centered secant slopes of each tracked curve (NaN at ends/absences)."""
        out = np.full_like(self.curves, np.nan)
        dr = np.gradient(self.rho_grid)
        for j in range(self.n_curves):
            c = self.curves[j]
            out[j, 1:-1] = (c[2:] - c[:-2]) / (self.rho_grid[2:] - self.rho_grid[:-2])
        return out


def eigencurves(pr: Profile, tau: float | None = None, rho_max: float = 20.0,
                n_rho: int = 41, margin: float | None = None) -> EigencurveFamily:
    """Track the ordered eigenvalue branches of L_rho over rho in [0, rho_max]."""
    tau = pr.tau if tau is None else float(tau)
    data = _operator_data(pr)
    states = background_states_of(pr)
    mdl = pr.potential.branch.model
    reports = [background_stability(mdl, s, tau) for s in states]
    ess = EssentialSpectrumReport(tau=tau, states=tuple(r.states[0] for r in reports))
    if not ess.all_stable:
        raise SolverError("background state(s) fail the saddle/stability conditions")
    if margin is None:
        margin = 10.0 * data.h**2
    rho_grid = np.linspace(0.0, rho_max, n_rho)
    lam_cap = float(np.max(data.pot0)) + 1.0
    per_rho: list[np.ndarray] = []
    vec0 = None
    for k, rho in enumerate(rho_grid):
        lam_min = float(ess.edge(rho)) + margin
        want = k == 0
        vals, vecs = _solve_rho(data, rho, lam_min, lam_cap, want_vectors=want)
        if want:
            vec0 = vecs
        per_rho.append(vals)
    n_curves = max(len(v) for v in per_rho)
    curves = np.full((n_curves, n_rho), np.nan)
    for k, vals in enumerate(per_rho):
        curves[: len(vals), k] = vals
    markers = []
    for k in range(n_rho - 1):
        a, b = len(per_rho[k]), len(per_rho[k + 1])
        if b < a:
            markers.append({"kind": "disappears", "rho_interval": (float(rho_grid[k]),
                                                                   float(rho_grid[k + 1])),
                            "branch": a - 1})
        elif b > a:
            markers.append({"kind": "appears", "rho_interval": (float(rho_grid[k]),
                                                                float(rho_grid[k + 1])),
                            "branch": b - 1})
    parities = []
    if vec0 is not None:
        for j in range(vec0.shape[1]):
            w = vec0[:, j]
            sym = float(np.dot(w, w[::-1]) / np.dot(w, w))
            parities.append("even" if sym > 0.5 else ("odd" if sym < -0.5 else "none"))
    # lambda'(rho) at the grid nodes via the eigenfunction quadrature
    fam = EigencurveFamily(profile=pr, tau=tau, rho_grid=rho_grid, curves=curves,
                           parities=parities, lambda_prime=np.full_like(curves, np.nan),
                           edge_values=np.asarray(ess.edge(rho_grid)), margin=margin,
                           ess_report=ess, appearance_markers=markers, _data=data)
    for k, rho in enumerate(rho_grid):
        for j in range(len(per_rho[k])):
            try:
                fam.lambda_prime[j, k] = fam.lambda_prime_at(float(rho), j)
            except SolverError:
                pass
    # large-rho diagnostics ("locally kicked" reduction when G_v is constant along v0)
    br = pr.potential.branch
    u = br.f_at(pr.v)
    Gv = np.asarray(mdl.partial("G", 0, 1, u, pr.v))
    Q = -data.fpGu * data.Fu          # the 1/rho coefficient of L_rho at large rho
    Q_inf = 0.5 * (Q[0] + Q[-1])
    fam.large_rho = {
        "Gv_variation": float(np.max(Gv) - np.min(Gv)),
        "degenerate": bool(np.max(Gv) - np.min(Gv) < 1e-10 * (1 + np.max(np.abs(Gv)))),
        "alpha_const": float(np.mean(Gv)),
        "Q_inf": float(Q_inf),
        "Q_R": float(integrate(Q - Q_inf, pr.X)),
        "predicted_sigma_pt": "single eigenvalue alpha + Q_inf/rho + (Q_R/2rho)^2"
        if integrate(Q - Q_inf, pr.X) > 0 else "empty point spectrum at large rho",
    }
    return fam


# ---------------------------------------------------------------------------
# O(1) eigenvalues


@dataclass
class O1Report:
    tau: float
    intersections: list[dict]
    n_unstable: int
    tangency_warnings: list[dict]
    rho_max: float
    rho_max_sufficient: bool
    cor31_i_holds: bool | None = None
    cor31_ii_holds: bool | None = None
    lambda1_prime_at_zero: float | None = None


def o1_eigenvalues(fam: EigencurveFamily, tau: float | None = None,
                   branch=None, v0_max: float | None = None,
                   M_hom: float | None = None) -> O1Report:
    """All intersections lambda_j(rho) = rho/tau for rho > 0, with theorem flags."""
    tau = fam.tau if tau is None else float(tau)
    rho = fam.rho_grid
    intersections = []
    tangencies = []
    rho_floor = max(1e-6, rho[1] * 0.5)
    for j in range(fam.n_curves):
        s = fam.curves[j] - rho / tau
        valid = ~np.isnan(s)
        idx = np.flatnonzero(valid)
        for k in range(len(idx) - 1):
            a, b = idx[k], idx[k + 1]
            if b != a + 1:
                continue
            if rho[b] <= rho_floor:
                continue
            if s[a] == 0.0 and rho[a] > rho_floor:
                intersections.append({"rho": float(rho[a]), "lambda": float(rho[a] / tau),
                                      "branch": j})
            elif s[a] * s[b] < 0:
                lo = max(rho[a], rho_floor)
                fun = lambda r, jj=j: fam.lambda_at(r, jj) - r / tau
                try:
                    r_star = brentq(fun, lo, rho[b], xtol=1e-10)
                    intersections.append({"rho": float(r_star), "lambda": float(r_star / tau),
                                          "branch": j})
                except ValueError:
                    pass
        # tangency proximity: local minimum of |s| without sign change
        sv = np.where(valid, s, np.nan)
        for k in range(1, len(rho) - 1):
            if np.isnan(sv[k - 1]) or np.isnan(sv[k]) or np.isnan(sv[k + 1]):
                continue
            if abs(sv[k]) < abs(sv[k - 1]) and abs(sv[k]) < abs(sv[k + 1]) \
                    and sv[k - 1] * sv[k + 1] > 0 and abs(sv[k]) < 0.05:
                # discriminant of the local quadratic fit
                c2 = (sv[k + 1] - 2 * sv[k] + sv[k - 1]) / 2
                c1 = (sv[k + 1] - sv[k - 1]) / 2
                disc = c1 * c1 - 4 * c2 * sv[k]
                tangencies.append({"rho": float(rho[k]), "gap": float(sv[k]),
                                   "branch": j, "fit_discriminant": float(disc),
                                   "note": "near-tangency: complex-pair birth possible"})
    # is rho_max beyond the last possible intersection?
    ok = True
    top = fam.curves[0]
    valid = ~np.isnan(top)
    if valid[-1]:
        if top[-1] > rho[-1] / tau:
            ok = False
        else:
            slopes = fam.secant_slopes()[0]
            if not np.isnan(slopes[-2]) and slopes[-2] > 1.0 / tau and \
                    (rho[-1] / tau - top[-1]) < 2.0:
                ok = False
    report = O1Report(tau=tau, intersections=intersections,
                      n_unstable=len(intersections), tangency_warnings=tangencies,
                      rho_max=float(rho[-1]), rho_max_sufficient=ok)
    # Corollary-style flags
    pr = fam.profile
    if branch is None:
        branch = pr.potential.branch
    v_hi = v0_max if v0_max is not None else (pr.v0_max or pr.potential.V_plus)
    vs = np.linspace(pr.potential.V_minus, v_hi, 801)
    us = branch.f_at(vs)
    mdl = branch.model
    Fv = np.asarray(mdl.partial("F", 0, 1, us, vs))
    Gu = np.asarray(mdl.partial("G", 1, 0, us, vs))
    Fu = np.asarray(mdl.partial("F", 1, 0, us, vs))
    kappa = float(-np.max(Fu))
    report.cor31_i_holds = bool(np.all(Fv * Gu >= -kappa**2 / tau - 1e-12))
    if pr.kind == "homoclinic":
        try:
            report.lambda1_prime_at_zero = fam.lambda_prime_at(0.0, 1)
            report.cor31_ii_holds = bool(report.lambda1_prime_at_zero > 1.0 / tau)
        except SolverError:
            pass
        if M_hom is not None:
            report.cor31_ii_holds = bool(M_hom < 0) if report.cor31_ii_holds is None \
                else report.cor31_ii_holds
    return report


# ---------------------------------------------------------------------------
# asymptotically small eigenvalues


@dataclass
class SmallEigenvalueSet:
    """Kind-tagged set of asymptotically small eigenvalues and regime data."""

    kind: str
    eps: float
    eigenvalues: dict[str, complex]
    regime: dict = field(default_factory=dict)
    thresholds: dict = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)


def _abcd(rep: MelnikovReport, c: float, lam: complex, N_c: float):
    """The next-order coefficient functions at (c, lambda)."""
    N2cl, N2ll = rep.N2cl, rep.N2ll
    G1cp = rep.G1c_plus
    sa = np.sqrt(rep.alpha_plus)
    N_r = rep.N_r

    def N(z):
        return c * c * N_r - z * N_c

    denom_theta = c * N2cl + lam * N2ll
    if denom_theta == 0:
        raise RegimeError("theta0 undefined: c N2cl + lambda N2ll = 0")
    theta0 = -(c * N2cl - lam * N2ll) / denom_theta
    D = c * N2cl * N(3 + theta0) + lam * N2ll * N(2 + 2 * theta0)
    if D == 0:
        raise RegimeError("degenerate D(c, lambda) = 0 in the next-order 2x2 system")
    A = 2 * c * (c * lam * N2cl + N(1 - theta0)) / D
    B = G1cp * (c * lam * N2cl - N(1)) / (2 * sa)
    C = lam * (1 + theta0) * (c * lam * N2cl + N(2)) * G1cp * N_c / (rep.alpha_plus * D)
    return A, B, C, D, theta0


def small_eigenvalues(rep: MelnikovReport, kind: str, eps: float,
                      mu1_tilde: float | None = None,
                      mu2_tilde: float | None = None,
                      mu_N: float | None = None,
                      c0: float | None = None,
                      expect: str | None = None) -> SmallEigenvalueSet:
    """Kind-tagged asymptotically small eigenvalues from the coefficient table.

    Kinds: "stationary_pulse" (M* = O(1)), "front", "traveling_pulse",
    "standing_pulse" (the c0 = 0 specialization near the M* root).
    """
    sa = np.sqrt(rep.alpha_plus)
    leps = abs(np.log(eps))
    out = SmallEigenvalueSet(kind=kind, eps=eps, eigenvalues={"translational": 0.0})

    if kind == "stationary_pulse":
        if rep.M_star == 0:
            raise RegimeError("stationary-pulse formula needs M* != 0")
        if rep.M2 <= 0:
            raise RegimeError("stationary pulse exists only for M2 > 0")
        out.eigenvalues["even"] = eps**2 * 2.0 * sa * rep.M2 / rep.M_star
        return out

    if kind == "front":
        if mu1_tilde is None or c0 is None:
            raise RegimeError("front eigenvalues need (mu1_tilde, c0)")
        resid = c0 * mu1_tilde + c0**2 * rep.M2cc + rep.M2
        scale = max(abs(rep.M2), abs(rep.M2cc), 1e-300)
        if abs(resid) > 1e-6 * scale * (1 + c0**2 + abs(mu1_tilde)):
            raise RegimeError(f"(mu1~, c0) violates the front-speed quadratic "
                              f"(residual {resid:.3e})")
        lam2 = eps * (mu1_tilde + c0 * rep.N2cl) / rep.N2ll
        out.eigenvalues["second"] = lam2
        disc = mu1_tilde**2 - 4 * rep.M2cc * rep.M2
        out.regime["sqrt_form"] = float(np.sqrt(max(disc, 0.0)) / rep.N2ll * eps)
        return out

    if kind in ("traveling_pulse", "standing_pulse"):
        if mu2_tilde is None:
            raise RegimeError(f"{kind} needs mu2_tilde")
        c = 0.0 if kind == "standing_pulse" else c0
        if c is None:
            raise RegimeError("traveling_pulse needs c0")
        N_c = rep.N_c(c * c)
        if N_c <= 0:
            raise RegimeError(f"existence requires N_c(c0^2) > 0, got {N_c:.6g}")
        lam1h_sq = (c * c * rep.N2cl**2 - 2 * N_c * rep.N2ll) / rep.N2ll**2
        lam1h = cmath.sqrt(lam1h_sq)
        is_imag = lam1h_sq < 0
        out.regime["lambda_1h_squared"] = float(lam1h_sq)
        out.regime["character"] = "imaginary" if is_imag else "real"
        if expect is not None and expect != out.regime["character"]:
            raise RegimeError(
                f"requested the {expect} regime but the coefficient table gives "
                f"{out.regime['character']} leading small eigenvalues here"
            )
        # regime table: admissible c0-ranges for the imaginary character
        N_r = rep.N_r
        thresh = 2 * sa * rep.M2cc
        out.regime["N_r"] = float(N_r)
        out.regime["N_r_vs_2sqrtalpha_M2cc"] = "below" if N_r < thresh else "above"
        if N_r > thresh and rep.M2 > 0:
            c0m_sq = 2 * sa * rep.M2 / (N_r - thresh)
            out.thresholds["c0_merge"] = float(np.sqrt(c0m_sq))
            out.thresholds["mu2_merge"] = float(rep.G1c_plus * rep.M2 * N_r
                                                / (2 * sa * (N_r - thresh)))
        elif N_r < thresh and rep.M2 < 0 and rep.M2cc > 0:
            c0m_sq = 2 * sa * rep.M2 / (N_r - thresh)
            if c0m_sq > 0:
                out.thresholds["c0_merge"] = float(np.sqrt(c0m_sq))
                out.thresholds["mu2_merge"] = float(rep.G1c_plus * rep.M2 * N_r
                                                    / (2 * sa * (N_r - thresh)))
        mu_TW = rep.G1c_plus * rep.M2 / (2 * sa)
        out.thresholds["mu2_TW"] = float(mu_TW)

        if kind == "standing_pulse":
            if rep.M2 <= 0:
                raise RegimeError("standing pulse near the M* root needs M2 > 0")
            lead = eps * cmath.sqrt(-2 * sa * rep.M2 / rep.N2ll)
            re2 = eps**2 * rep.G1c_plus / (rep.alpha_plus * rep.N2ll) * leps
            out.eigenvalues["pair_plus"] = lead + re2
            out.eigenvalues["pair_minus"] = -lead + re2
            out.eigenvalues["mode_12"] = eps**2 * mu2_tilde / rep.N2ll * leps
            out.notes.append("mode_12 magnitude is the |mu2~| >> 1 standing form")
            return out

        # traveling pulse
        lam_plus = eps * lam1h
        lam_minus = -eps * lam1h
        mu_N_val = 0.0 if mu_N is None else mu_N
        corr_p = corr_m = 0.0
        try:
            Ap, Bp, Cp, Dp, _ = _abcd(rep, c, lam1h, N_c)
            Am, Bm, Cm, Dm, _ = _abcd(rep, c, -lam1h, N_c)
            corr_p = eps**2 * (Ap * (mu_N_val - Bp) + Cp) * leps
            corr_m = eps**2 * (Am * (mu_N_val - Bm) + Cm) * leps
            if is_imag:
                ReA = (Ap * (mu_N_val - Bp) + Cp).real
                denomA = Ap.real
                if abs(denomA) > 1e-300:
                    out.thresholds["mu_N_Hopf"] = float((Ap * Bp - Cp).real / Ap.real)
        except RegimeError as exc:
            out.notes.append(str(exc))
        out.eigenvalues["pair_plus"] = lam_plus + corr_p
        out.eigenvalues["pair_minus"] = lam_minus + corr_m
        # lambda^{1,2}: sign information only (regimes per the available formulas)
        sign = None
        source = "needs-direct-numerics"
        if abs(mu2_tilde - mu_TW) < 0.2 * max(abs(mu_TW), 1.0):
            sign = float(np.sign((mu_TW - mu2_tilde) * rep.N2ll))
            source = "near-TW sign rule"
        out.regime["mode_12_sign"] = sign
        out.regime["mode_12_source"] = source
        return out

    raise RegimeError(f"unknown small-eigenvalue kind {kind!r}")


# ---------------------------------------------------------------------------
# transverse (2D) eigenvalues


@dataclass
class TransverseEigenvalues:
    kind: str
    eps: float
    L: float
    eigenvalues: tuple[complex, ...]
    positive_root_window: float | None = None   # stripe: L2^2 < 2 N_c / ||q||^2
    factorization_check: tuple[float, float] | None = None


def transverse_eigenvalues(rep: MelnikovReport, kind: str, L: float, eps: float,
                           mu1_tilde: float | None = None,
                           c0: float = 0.0) -> TransverseEigenvalues:
    """Transverse small eigenvalues for interfaces (L = sqrt(eps) L1 or eps L2)
    and stripes (L = eps L2)."""
    nq = rep.norm_qsq
    if kind == "stationary_interface":
        L1 = L / np.sqrt(eps)
        lam = -eps * nq * L1**2 / rep.M_star
        return TransverseEigenvalues(kind=kind, eps=eps, L=L, eigenvalues=(lam,))
    if kind == "traveling_interface":
        if mu1_tilde is None:
            raise RegimeError("traveling interface needs mu1_tilde")
        L2 = L / eps
        a = rep.N2ll
        b = -(mu1_tilde + c0 * rep.N2cl)
        cq = -nq * L2**2
        disc = cmath.sqrt(b * b - 4 * a * cq)
        roots = ((-b + disc) / (2 * a), (-b - disc) / (2 * a))
        return TransverseEigenvalues(kind=kind, eps=eps, L=L,
                                     eigenvalues=tuple(eps * r for r in roots))
    if kind == "stripe":
        L2 = L / eps
        N_c = rep.N_c(c0 * c0)
        a4 = rep.N2ll**2
        a2 = 2 * N_c * rep.N2ll - c0**2 * rep.N2cl**2 - 2 * rep.N2ll * nq * L2**2
        a0 = -(2 * N_c * nq * L2**2 - nq**2 * L2**4)
        disc = cmath.sqrt(a2 * a2 - 4 * a4 * a0)
        Lam1 = (-a2 + disc) / (2 * a4)
        Lam2 = (-a2 - disc) / (2 * a4)
        roots = []
        for Lam in (Lam1, Lam2):
            r = cmath.sqrt(Lam)
            roots.extend([eps * r, -eps * r])
        fact = None
        if c0 == 0.0:
            fact = (float(nq * L2**2 / rep.N2ll),
                    float((nq * L2**2 - 2 * np.sqrt(rep.alpha_plus) * rep.M2) / rep.N2ll))
        return TransverseEigenvalues(kind=kind, eps=eps, L=L, eigenvalues=tuple(roots),
                                     positive_root_window=float(2 * N_c / nq),
                                     factorization_check=fact)
    raise RegimeError(f"unknown transverse kind {kind!r}")


# ---------------------------------------------------------------------------
# theorem-level classification


@dataclass
class Condition:
    name: str
    value: object
    satisfied: bool | None
    citation: str


@dataclass
class StabilityVerdict:
    kind: str
    verdict: str                      # "stable" | "unstable" | "inconclusive"
    conditions: list[Condition]
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "verdict": self.verdict,
            "conditions": [
                {"name": c.name, "value": repr(c.value), "satisfied": c.satisfied,
                 "citation": c.citation}
                for c in self.conditions
            ],
            "details": {k: repr(v) for k, v in sorted(self.details.items())},
        }


def _slope_conditions(fam: EigencurveFamily | None, tau: float, at_root: bool,
                      conds: list[Condition], slope_tol: float = 1e-3) -> bool | None:
    """Eigencurve slope hypotheses: top slope at 0 (=1/tau at the M* root), all <= 1/tau."""
    if fam is None:
        conds.append(Condition("eigencurve slopes", None, None,
                               "slope conditions not evaluated (no eigencurve family)"))
        return None
    ok = True
    try:
        s0 = fam.lambda_prime_at(0.0, 0)
    except SolverError:
        conds.append(Condition("top-curve slope at rho=0", None, None, "slope data missing"))
        return None
    if at_root:
        hit = abs(s0 - 1.0 / tau) <= slope_tol * (1 + 1 / tau)
        conds.append(Condition("(lambda*_0)'(0) = 1/tau at the M* root", s0, hit,
                               "traveling-case slope hypothesis"))
        ok = ok and hit
    else:
        hit = s0 <= 1.0 / tau + slope_tol
        conds.append(Condition("(lambda*_0)'(0) <= 1/tau", s0, hit, "slope hypothesis"))
        ok = ok and hit
    sl = fam.lambda_prime
    below = bool(np.all(np.where(np.isnan(sl), -np.inf, sl) <= 1.0 / tau + slope_tol))
    conds.append(Condition("all (lambda*_j)'(rho) <= 1/tau on the scanned window",
                           float(np.nanmax(sl)) if np.any(~np.isnan(sl)) else None,
                           below, "slope hypothesis"))
    return ok and below


def classify(kind: str, rep: MelnikovReport | None = None,
             ess: EssentialSpectrumReport | None = None,
             fam: EigencurveFamily | None = None,
             o1: O1Report | None = None,
             small: SmallEigenvalueSet | None = None,
             mu1_tilde: float | None = None,
             mu2_tilde: float | None = None,
             mu_N: float | None = None,
             c0: float | None = None) -> StabilityVerdict:
    """Assemble the theorem logic for one pattern kind, citing every condition used."""
    conds: list[Condition] = []
    details: dict = {}
    tau = rep.tau if rep is not None else (ess.tau if ess is not None else 1.0)

    if ess is not None:
        conds.append(Condition("background saddle conditions", ess.all_saddle,
                               ess.all_saddle, "essential-spectrum hypothesis (saddle)"))
        conds.append(Condition("background stability conditions", ess.all_stable,
                               ess.all_stable, "essential-spectrum hypothesis (stable)"))
        if not (ess.all_saddle and ess.all_stable):
            return StabilityVerdict(kind, "unstable", conds,
                                    {"reason": "essential spectrum enters the right half-plane"})

    if kind == "regular_pulse":
        n = o1.n_unstable if o1 is not None else None
        conds.append(Condition("unequal wells: >= 1 intersection with rho/tau", n,
                               None if n is None else n >= 1,
                               "instability of persisting pulses"))
        return StabilityVerdict(kind, "unstable", conds,
                                {"n_unstable_O1": n})

    if kind == "standing_front":
        ms = rep.M_star
        if ms < 0:
            conds.append(Condition("M* < 0", ms, True, "standing front instability"))
            return StabilityVerdict(kind, "unstable", conds, {"M_star": ms})
        conds.append(Condition("M* > 0", ms, ms > 0, "standing front hypothesis"))
        ok = _slope_conditions(fam, tau, at_root=False, conds=conds)
        if o1 is not None:
            conds.append(Condition("no O(1) intersections", o1.n_unstable,
                                   o1.n_unstable == 0, "O(1) spectrum count"))
            if o1.n_unstable > 0:
                return StabilityVerdict(kind, "unstable", conds, {})
        if ok:
            return StabilityVerdict(kind, "stable", conds, {})
        return StabilityVerdict(kind, "inconclusive", conds,
                                {"failing": "eigencurve slope hypothesis"})

    if kind == "stationary_pulse":
        ms = rep.M_star
        if ms > 0 and rep.M2 > 0:
            lam2 = 2 * np.sqrt(rep.alpha_plus) * rep.M2 / ms
            conds.append(Condition("even small eigenvalue 2 sqrt(a+) M2 / M* > 0", lam2,
                                   True, "stationary pulse instability"))
            return StabilityVerdict(kind, "unstable", conds, {"lambda2_over_eps2": lam2})
        conds.append(Condition("M* < 0 forces O(1) unstable spectrum", ms, ms < 0,
                               "stationary pulse instability (O(1) branch)"))
        return StabilityVerdict(kind, "unstable", conds, {})

    if kind == "traveling_front":
        lam2 = small.eigenvalues.get("second") if small is not None else None
        if lam2 is None:
            return StabilityVerdict(kind, "inconclusive", conds,
                                    {"reason": "no small-eigenvalue data"})
        neg = (lam2.real if isinstance(lam2, complex) else lam2) < 0
        conds.append(Condition("second small eigenvalue < 0", lam2, neg,
                               "traveling front criterion"))
        ok = _slope_conditions(fam, tau, at_root=True, conds=conds)
        if not neg:
            return StabilityVerdict(kind, "unstable", conds, {})
        if ok is False:
            return StabilityVerdict(kind, "inconclusive", conds,
                                    {"failing": "eigencurve slope hypothesis"})
        return StabilityVerdict(kind, "stable" if ok else "inconclusive", conds, {})

    if kind == "standing_pulse_near_root":
        n2 = rep.N2ll
        g1 = rep.G1c_plus
        if n2 < 0 or g1 > 0:
            conds.append(Condition("N2ll < 0 or G1c+ > 0", (n2, g1), True,
                                   "standing pulse instability (near root)"))
            return StabilityVerdict(kind, "unstable", conds, {})
        mu2 = mu2_tilde if mu2_tilde is not None else 0.0
        hit = n2 > 0 and g1 < 0 and mu2 < 0
        conds.append(Condition("N2ll > 0 and G1c+ < 0 and mu2~ < 0",
                               (n2, g1, mu2), hit, "standing pulse stability (near root)"))
        ok = _slope_conditions(fam, tau, at_root=True, conds=conds)
        if hit and ok:
            return StabilityVerdict(kind, "stable", conds, {})
        if hit and ok is None:
            return StabilityVerdict(kind, "stable", conds,
                                    {"caveat": "slope hypothesis not evaluated"})
        return StabilityVerdict(kind, "inconclusive" if hit else "unstable", conds, {})

    if kind == "traveling_pulse":
        n2 = rep.N2ll
        if n2 < 0:
            conds.append(Condition("N2ll < 0", n2, True, "traveling pulse instability"))
            return StabilityVerdict(kind, "unstable", conds, {})
        if small is None:
            return StabilityVerdict(kind, "inconclusive", conds,
                                    {"reason": "no small-eigenvalue data"})
        if small.regime.get("character") == "real":
            conds.append(Condition("leading pair real (one positive)", None, True,
                                   "traveling pulse instability (real pair)"))
            return StabilityVerdict(kind, "unstable", conds, {})
        rp = small.eigenvalues.get("pair_plus")
        rm = small.eigenvalues.get("pair_minus")
        re_ok = rp is not None and rp.real < 0 and rm.real < 0
        conds.append(Condition("Re of the imaginary pair < 0 (Hopf side)", (rp, rm),
                               re_ok, "traveling pulse criterion (pair)"))
        sgn = small.regime.get("mode_12_sign")
        src = small.regime.get("mode_12_source")
        conds.append(Condition(f"third small mode sign ({src})", sgn,
                               None if sgn is None else sgn < 0,
                               "traveling pulse criterion (third mode)"))
        ok = _slope_conditions(fam, tau, at_root=True, conds=conds)
        if re_ok and sgn is not None and sgn < 0 and ok:
            return StabilityVerdict(kind, "stable", conds, {})
        if not re_ok:
            return StabilityVerdict(kind, "unstable", conds, {})
        return StabilityVerdict(kind, "inconclusive", conds,
                                {"reason": "third-mode sign outside analytic regimes"
                                 if sgn is None else "slope hypothesis unresolved"})

    if kind == "stationary_interface":
        ms = rep.M_star
        conds.append(Condition("1D-stable and M* > 0 => transverse eigenvalue < 0",
                               ms, ms > 0, "stationary interface stability"))
        return StabilityVerdict(kind, "stable" if ms > 0 else "unstable", conds, {})

    if kind == "traveling_interface":
        n2 = rep.N2ll
        conds.append(Condition("N2ll < 0 required for interface stability", n2, n2 < 0,
                               "traveling interface criterion"))
        return StabilityVerdict(kind, "stable" if n2 < 0 else "unstable", conds, {})

    if kind == "stripe":
        conds.append(Condition("homoclinic stripe window L2^2 < 2 N_c / ||q||^2 has a "
                               "positive real root", None, True, "stripe instability"))
        return StabilityVerdict(kind, "unstable", conds, {})

    raise SolverError(f"unknown classification kind {kind!r}")
