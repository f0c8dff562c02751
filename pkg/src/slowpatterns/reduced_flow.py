"""Double-well potential of the reduced slow flow and its heteroclinic/homoclinic profiles.

Profiles are built by exploiting integrability: X(v) follows from quadrature on
the Hamiltonian level set, the result is inverted onto a uniform X grid and
polished by a 4th-order collocation Newton pass on v_XX = W0'(v).  Beyond a
switch point the saddle tails are represented by their two-term analytic
expansion, which keeps 1/q^2-type integrands free of cancellation noise.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline, PPoly
from scipy.linalg import solve_banded
from scipy.optimize import brentq

from ._num import fd_derivative, fit_saddle_beta
from .errors import ClassificationError, TailFitError, WellBalanceError
from .manifold import Branch

__all__ = [
    "Potential",
    "Profile",
    "build_potential",
    "heteroclinic_profile",
    "homoclinic_profile",
    "tail_constants",
]

EQUAL_WELL_RTOL = 1e-10
_GAUSS_NODES, _GAUSS_WEIGHTS = np.polynomial.legendre.leggauss(8)


@dataclass
class CriticalPoint:
    v: float
    kind: str          # "saddle" | "center" | "degenerate"
    g_prime: float


@dataclass
class Potential:
    """W0(v) = -int_{V-}^v G(f(w), w) dw with critical-point classification."""

    branch: Branch
    critical_points: list[CriticalPoint]
    is_double_well: bool
    classification: str
    V_minus: float = np.nan
    V_center: float = np.nan
    V_plus: float = np.nan
    H0_plus: float = np.nan
    H0_center: float = np.nan
    _W0_spline: CubicSpline | None = field(default=None, repr=False)
    _well_left: PPoly | None = field(default=None, repr=False)
    _well_right: PPoly | None = field(default=None, repr=False)

    def require_double_well(self) -> None:
        if not self.is_double_well:
            raise ClassificationError(f"reduced flow is not double well: {self.classification}")

    def _build_saddle_anchored_wells(self, n_seg: int = 1600) -> None:
        """Per-saddle antiderivatives of g in the deviation coordinate.

        W0(v) (left well) and W0(v) - W0(V_plus) (right well) accumulate from
        the adjacent saddle, which keeps them machine-accurate *relative to
        their small local values* -- a single global antiderivative loses that
        to cancellation near the far saddle.
        """
        b = self.branch
        for side in ("left", "right"):
            if side == "left":
                dev = np.linspace(0.0, self.V_center - self.V_minus, n_seg)
                vv = self.V_minus + dev
                sgn = +1.0
                ends = (self.V_minus, self.V_center)
            else:
                dev = np.linspace(0.0, self.V_plus - self.V_center, n_seg)
                vv = self.V_plus - dev
                sgn = -1.0
                ends = (self.V_plus, self.V_center)
            g_seg = np.asarray(b.model.partial("G", 0, 0, b.f_at(vv), vv))
            # clamped ends with exact chain-rule slopes: the saddle-end slope
            # controls the quadratic term of the well near its minimum
            d0 = sgn * self.g_prime(ends[0])
            d1 = sgn * self.g_prime(ends[1])
            anti = CubicSpline(dev, g_seg, bc_type=((1, d0), (1, d1))).antiderivative()
            if side == "left":
                # W0(V_minus + s) = -int_0^s g(V_minus + t) dt; keep the exact
                # piecewise polynomial (re-fitting would reintroduce end bias)
                self._well_left = PPoly(-anti.c, anti.x)
            else:
                # W0(V_plus - s) - W0(V_plus) = int_0^s g(V_plus - t) dt
                self._well_right = PPoly(anti.c, anti.x)

    def q_heteroclinic(self, v):
        """Machine-smooth q = sqrt(2 W0(v)) on the equal-well heteroclinic level set."""
        v = np.asarray(v, dtype=float)
        out = np.empty_like(v)
        left = v <= self.V_center
        out[left] = np.maximum(self._well_left(v[left] - self.V_minus), 0.0)
        out[~left] = np.maximum(self._well_right(self.V_plus - v[~left]), 0.0)
        return np.sqrt(2.0 * out)

    def W0(self, v):
        """Potential values (vectorized); normalized so W0(V_minus) = 0."""
        return self._W0_spline(v)

    def g(self, v):
        """Reduced-flow nonlinearity G(f(v), v) = -W0'(v)."""
        return self.branch.g_at(v)

    def g_prime(self, v: float) -> float:
        b = self.branch
        m = b.model
        u, fp, _ = b.derivatives_at(v)
        Gu = m.partial("G", 1, 0, u, v)
        Gv = m.partial("G", 0, 1, u, v)
        return Gu * fp + Gv

    def alpha_at(self, v_crit: float) -> float:
        """W0'' = -d/dv G(f(v), v) at a critical point."""
        return -self.g_prime(v_crit)

    def gamma_at(self, v_crit: float) -> float:
        """Second v-derivative of G(f(v), v) (the refined-tail coefficient)."""
        b = self.branch
        m = b.model
        u, fp, fpp = b.derivatives_at(v_crit)
        Guu = m.partial("G", 2, 0, u, v_crit)
        Guv = m.partial("G", 1, 1, u, v_crit)
        Gvv = m.partial("G", 0, 2, u, v_crit)
        Gu = m.partial("G", 1, 0, u, v_crit)
        return Gvv + 2 * fp * Guv + fp**2 * Guu + fpp * Gu

    @property
    def W0_center(self) -> float:
        return float(self.W0(self.V_center))

    def q_on_level(self, v, H0: float = 0.0, anchor: float | None = None):
        """q = sqrt(2 H0 + 2 W0(v)) (clipped at 0).

        ``anchor``: a saddle value whose computed well depth is subtracted, so
        that q vanishes exactly there despite quadrature round-off in W0.
        """
        W = self.W0(v)
        if anchor is not None:
            W = W - self.W0(anchor)
        return np.sqrt(np.maximum(2.0 * H0 + 2.0 * W, 0.0))


def build_potential(b: Branch, n_grid: int | None = None) -> Potential:
    """Locate and classify critical points of the reduced flow and build W0."""
    vs = b.v_grid if n_grid is None else np.linspace(b.v_grid[0], b.v_grid[-1], n_grid)
    g_vals = np.asarray(b.model.partial("G", 0, 0, b.f_at(vs), vs))

    roots: list[float] = []
    sign = np.sign(g_vals)
    for k in range(len(vs) - 1):
        if sign[k] == 0.0:
            roots.append(float(vs[k]))
        elif sign[k] * sign[k + 1] < 0:
            roots.append(float(brentq(lambda v: float(b.g_at(v)), vs[k], vs[k + 1],
                                      xtol=1e-14, rtol=8.9e-16)))
    if len(vs) and sign[-1] == 0.0:
        roots.append(float(vs[-1]))

    g_scale = float(np.max(np.abs(g_vals))) or 1.0
    v_scale = float(vs[-1] - vs[0])
    pot = Potential(branch=b, critical_points=[], is_double_well=False, classification="")
    pts: list[CriticalPoint] = []
    for r in roots:
        gp = pot.g_prime(r)
        if abs(gp) < 1e-8 * g_scale / v_scale:
            kind = "degenerate"
        else:
            kind = "saddle" if gp < 0 else "center"
        pts.append(CriticalPoint(v=r, kind=kind, g_prime=float(gp)))
    pot.critical_points = pts

    kinds = [p.kind for p in pts]
    if len(pts) < 3:
        is_dw, msg = False, f"found {len(pts)} critical point(s), need saddle-center-saddle"
    elif "degenerate" in kinds[:3]:
        is_dw, msg = False, "degenerate (non-simple) critical point present"
    elif kinds[:3] != ["saddle", "center", "saddle"]:
        is_dw, msg = False, f"critical points are {kinds}, need saddle-center-saddle"
    elif len(pts) > 3:
        is_dw = True
        msg = f"{len(pts)} critical points; using the leftmost saddle-center-saddle triple"
    else:
        is_dw, msg = True, "double well"
    pot.is_double_well = is_dw
    pot.classification = msg

    # antiderivative of -g anchored at the leftmost saddle (or leftmost root)
    saddles = [p.v for p in pts if p.kind == "saddle"]
    anchor = saddles[0] if saddles else (pts[0].v if pts else float(vs[0]))
    g_spline = CubicSpline(vs, g_vals)
    G_anti = g_spline.antiderivative()
    offset = G_anti(anchor)
    pot._W0_spline = CubicSpline(vs, -(G_anti(vs) - offset))
    if is_dw:
        pot.V_minus, pot.V_center, pot.V_plus = (p.v for p in pts[:3])
        pot.H0_plus = float(-pot.W0(pot.V_plus))
        pot.H0_center = float(-pot.W0(pot.V_center))
        pot._build_saddle_anchored_wells()
    return pot


# ---------------------------------------------------------------------------
# tail model and profiles


@dataclass
class TailModel:
    """Two-term saddle tail: deviation(s) = beta E + a2 E^2, E = exp(-sqrt(alpha) s).

    ``s`` is the outward coordinate (distance toward the saddle end) and
    ``sign`` = +1 when the profile approaches the saddle from above (v > V_sad).
    """

    V_saddle: float
    alpha: float
    gamma: float
    beta: float
    sign: float

    @property
    def a2(self) -> float:
        return -self.sign * self.gamma * self.beta**2 / (6.0 * self.alpha)

    @property
    def c2(self) -> float:
        """a2 / beta^2, the fit-shape constant."""
        return -self.sign * self.gamma / (6.0 * self.alpha)

    def deviation(self, s):
        E = np.exp(-np.sqrt(self.alpha) * s)
        return self.beta * E + self.a2 * E * E

    def deviation_s(self, s):
        r = np.sqrt(self.alpha)
        E = np.exp(-r * s)
        return -r * self.beta * E - 2.0 * r * self.a2 * E * E

    def v_of(self, s):
        return self.V_saddle + self.sign * self.deviation(s)


@dataclass
class Profile:
    """Discretized bounded orbit of the reduced slow flow on a uniform X grid."""

    X: np.ndarray
    v: np.ndarray
    q: np.ndarray
    kind: str                     # "heteroclinic" | "homoclinic"
    potential: Potential
    H0: float
    alpha_minus: float
    alpha_plus: float
    gamma_minus: float
    gamma_plus: float
    beta_minus: float
    beta_plus: float | None
    v0_max: float | None
    i_switch_left: int            # analytic tail used for indices <= this
    i_switch_right: int           # analytic tail used for indices >= this
    residual_max: float
    hamiltonian_drift: float
    tail_left: TailModel | None = None
    tail_right: TailModel | None = None

    @property
    def h(self) -> float:
        return float(self.X[1] - self.X[0])

    @property
    def i0(self) -> int:
        return len(self.X) // 2

    @property
    def X_max(self) -> float:
        return float(self.X[-1])

    @property
    def tau(self) -> float:
        return self.potential.branch.model.params.tau

    def g_prime_along(self) -> np.ndarray:
        """d/dv [G(f(v), v)] along the profile (the L* potential term)."""
        b = self.potential.branch
        m = b.model
        u = b.f_at(self.v)
        Fu = np.asarray(m.partial("F", 1, 0, u, self.v))
        Fv = np.asarray(m.partial("F", 0, 1, u, self.v))
        Gu = np.asarray(m.partial("G", 1, 0, u, self.v))
        Gv = np.asarray(m.partial("G", 0, 1, u, self.v))
        return Gu * (-Fv / Fu) + Gv

    def to_rows(self) -> np.ndarray:
        return np.column_stack([self.X, self.v, self.q])


def _cumulative_gauss(dfun, t_grid: np.ndarray) -> np.ndarray:
    """Cumulative integral of ``dfun`` over the panels of ``t_grid`` (Gauss-Legendre 8)."""
    out = np.zeros_like(t_grid)
    a = t_grid[:-1]
    b = t_grid[1:]
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    acc = np.zeros(len(a))
    for xi, wi in zip(_GAUSS_NODES, _GAUSS_WEIGHTS):
        acc += wi * dfun(mid + half * xi)
    out[1:] = np.cumsum(acc * half)
    return out


def _newton_polish(X, v, g_exact, gp_exact, fixed_mask, max_iter=16, tol=5e-13,
                   even_at_left=False):
    """Collocation Newton for v_XX + g(v) = 0, 4th-order interior / 2nd-order edge rows.

    Rows where ``fixed_mask`` is True are Dirichlet (kept at the input values).
    With ``even_at_left`` the domain is a half line [0, X_max] and rows 0 and 1
    use the even-symmetric ghost extension v[-k] = v[k].
    Returns the polished v and the final residual (over non-fixed rows).
    """
    n = len(X)
    h = float(X[1] - X[0])
    c = 1.0 / (12.0 * h * h)
    d = 1.0 / (h * h)
    v = v.copy()
    res = np.inf

    def residual(vv, gg):
        R = np.zeros(n)
        R[2:-2] = (-vv[:-4] + 16 * vv[1:-3] - 30 * vv[2:-2] + 16 * vv[3:-1] - vv[4:]) * c + gg[2:-2]
        R[-2] = (vv[-3] - 2 * vv[-2] + vv[-1]) * d + gg[-2]
        if even_at_left:
            R[0] = (-30 * vv[0] + 32 * vv[1] - 2 * vv[2]) * c + gg[0]
            R[1] = (16 * vv[0] - 31 * vv[1] + 16 * vv[2] - vv[3]) * c + gg[1]
        else:
            R[1] = (vv[0] - 2 * vv[1] + vv[2]) * d + gg[1]
        R[fixed_mask] = 0.0
        return R

    for _ in range(max_iter):
        g = np.asarray(g_exact(v))
        R = residual(v, g)
        res = float(np.max(np.abs(R)))
        if res < tol:
            break
        gp = np.asarray(gp_exact(v))
        ab = np.zeros((5, n))
        # interior 5-point rows i in [2, n-3]: A[i, i+k] for k = -2..2
        ab[0, 4:n] = -c
        ab[1, 3:n - 1] = 16 * c
        ab[2, 2:n - 2] = -30 * c + gp[2:n - 2]
        ab[3, 1:n - 3] = 16 * c
        ab[4, 0:n - 4] = -c
        if even_at_left:
            ab[2, 0] = -30 * c + gp[0]
            ab[1, 1] = 32 * c
            ab[0, 2] = -2 * c
            ab[3, 0] = 16 * c
            ab[2, 1] = -31 * c + gp[1]
            ab[1, 2] = 16 * c
            ab[0, 3] = -c
        else:
            ab[1, 2] = d
            ab[2, 1] = -2 * d + gp[1]
            ab[3, 0] = d
            ab[0, 3] = 0.0
        ab[1, n - 1] = d
        ab[2, n - 2] = -2 * d + gp[n - 2]
        ab[3, n - 3] = d
        ab[4, n - 4] = 0.0
        for j in np.flatnonzero(fixed_mask):
            for col in range(max(0, j - 2), min(n, j + 3)):
                ab[2 + j - col, col] = 0.0
            ab[2, j] = 1.0
        dv = solve_banded((2, 2), ab, -R)
        v = v + dv
        if np.max(np.abs(dv)) < 1e-14 * (1.0 + np.max(np.abs(v))):
            g = np.asarray(g_exact(v))
            res = float(np.max(np.abs(residual(v, g))))
            break
    return v, res


def _make_g_callables(branch: Branch):
    m = branch.model

    def g_exact(vv):
        return np.asarray(m.partial("G", 0, 0, branch.f_at(vv), vv))

    def gp_exact(vv):
        u = branch.f_at(vv)
        Fu = np.asarray(m.partial("F", 1, 0, u, vv))
        Fv = np.asarray(m.partial("F", 0, 1, u, vv))
        Gu = np.asarray(m.partial("G", 1, 0, u, vv))
        Gv = np.asarray(m.partial("G", 0, 1, u, vv))
        return Gu * (-Fv / Fu) + Gv

    return g_exact, gp_exact


def _fit_beta_window(s, dev, alpha, c2, d_sw):
    mask = (dev > 10 * d_sw) & (dev < 1e3 * d_sw)
    if np.count_nonzero(mask) < 8:
        mask = (dev > d_sw) & (dev < 1e5 * d_sw)
    if np.count_nonzero(mask) < 4:
        raise TailFitError("tail-fit window is empty; X_max too small for the switch point")
    beta, _ = fit_saddle_beta(np.asarray(s)[mask], np.asarray(dev)[mask], np.sqrt(alpha), c2,
                              free_cubic=True)
    return beta


def heteroclinic_profile(
    p: Potential,
    X_max: float | None = None,
    n_half: int = 4096,
    delta_switch_rel: float = 1e-6,
) -> Profile:
    """Increasing heteroclinic orbit v(X) from V_minus to V_plus with v(0) = V_center."""
    p.require_double_well()
    W_scale = max(float(np.max(np.abs(p.W0(np.linspace(p.V_minus, p.V_plus, 200))))), 1e-300)
    if abs(p.H0_plus) > EQUAL_WELL_RTOL * W_scale:
        raise WellBalanceError(
            f"wells are not of equal depth: H0_plus = {p.H0_plus:.3e} "
            f"(tolerance {EQUAL_WELL_RTOL * W_scale:.3e}); use homoclinic_profile"
        )
    a_m = p.alpha_at(p.V_minus)
    a_p = p.alpha_at(p.V_plus)
    g_m = p.gamma_at(p.V_minus)
    g_p = p.gamma_at(p.V_plus)
    if X_max is None:
        X_max = 30.0 / np.sqrt(min(a_m, a_p))
    X = np.linspace(-X_max, X_max, 2 * n_half + 1)
    h = X[1] - X[0]
    scale_v = p.V_plus - p.V_minus
    d_sw = delta_switch_rel * scale_v

    def sample_side(V_sad, alpha):
        """Outward quadrature from the center toward one saddle; returns (X>=0, v).

        Sampling stops at deviation ~ d_sw/100; beyond that the analytic tail
        model takes over (the spline noise floor of W0 is reached there).
        """
        span = abs(V_sad - p.V_center)
        sgn = np.sign(V_sad - p.V_center)

        def dXdt(t):
            vv = V_sad - sgn * span * np.exp(-t)
            qq = np.asarray(p.q_on_level(vv, 0.0, anchor=V_sad))
            qq = np.maximum(qq, 1e-150)
            return span * np.exp(-t) / qq

        T = float(np.log(span / (d_sw * 1e-2)))
        t_grid = np.linspace(0.0, T, 4001)
        Xc = _cumulative_gauss(dXdt, t_grid)
        vc = V_sad - sgn * span * np.exp(-t_grid)
        return Xc, vc

    Xr, vr = sample_side(p.V_plus, a_p)
    Xl, vl = sample_side(p.V_minus, a_m)

    spline_r = CubicSpline(Xr, vr)
    spline_l = CubicSpline(Xl, vl)
    v = np.empty_like(X)
    pos = X >= 0
    v[pos] = spline_r(np.minimum(X[pos], Xr[-1]))
    v[~pos] = spline_l(np.minimum(-X[~pos], Xl[-1]))

    tail_r = TailModel(V_saddle=p.V_plus, alpha=a_p, gamma=g_p, beta=1.0, sign=-1.0)
    tail_l = TailModel(V_saddle=p.V_minus, alpha=a_m, gamma=g_m, beta=1.0, sign=+1.0)
    tail_r.beta = _fit_beta_window(Xr, p.V_plus - vr, a_p, tail_r.c2, d_sw)
    tail_l.beta = _fit_beta_window(Xl, vl - p.V_minus, a_m, tail_l.c2, d_sw)

    # tail zones are only activated when they sit in the asymptotic regime
    # (deviation below the switch threshold well inside the grid); on short
    # domains the collocation data are used all the way to the boundary
    i_sw_r = int(np.searchsorted(X, np.log(tail_r.beta / d_sw) / np.sqrt(a_p)))
    i_sw_l = int(np.searchsorted(X, -np.log(tail_l.beta / d_sw) / np.sqrt(a_m))) - 1
    if i_sw_r > len(X) - 10:
        i_sw_r = len(X)
    if i_sw_l < 9:
        i_sw_l = -1
    if i_sw_r < len(X):
        v[i_sw_r:] = tail_r.v_of(X[i_sw_r:])
    if i_sw_l >= 0:
        v[: i_sw_l + 1] = tail_l.v_of(-X[: i_sw_l + 1])

    g_exact, gp_exact = _make_g_callables(p.branch)
    neg = X <= 0
    i0 = len(X) // 2

    # The truncated two-point BVP is exponentially ill-conditioned along the
    # translation mode, so the phase is pinned inside the solve: v(0) = V_center
    # replaces the collocation row at the center node (the translate family
    # makes the combined system consistent up to the scheme order).
    fixed = np.zeros(len(X), dtype=bool)
    fixed[0] = fixed[-1] = fixed[i0] = True
    for _ in range(2):
        v[i0] = p.V_center
        v, _ = _newton_polish(X, v, g_exact, gp_exact, fixed)
        tail_r.beta = _fit_beta_window(X[pos], (p.V_plus - v)[pos], a_p, tail_r.c2, d_sw)
        tail_l.beta = _fit_beta_window(-X[neg], (v - p.V_minus)[neg], a_m, tail_l.c2, d_sw)
        if i_sw_r < len(X):
            v[i_sw_r:] = tail_r.v_of(X[i_sw_r:])
        if i_sw_l >= 0:
            v[: i_sw_l + 1] = tail_l.v_of(-X[: i_sw_l + 1])

    # q: Hamiltonian level-set values in the core (machine-smooth, see
    # Potential.q_heteroclinic), analytic tail derivative beyond the switch
    q = p.q_heteroclinic(v)
    if i_sw_r < len(X):
        jr = i_sw_r - 3
        q[jr:] = -tail_r.deviation_s(X[jr:])            # v = V+ - dev(X)
    if i_sw_l >= 0:
        jl = i_sw_l + 3
        q[: jl + 1] = -tail_l.deviation_s(-X[: jl + 1])  # v = V- + dev(-X)

    g_vals = np.asarray(g_exact(v))
    hh = float(h)
    R = (-v[:-4] + 16 * v[1:-3] - 30 * v[2:-2] + 16 * v[3:-1] - v[4:]) / (12 * hh * hh) + g_vals[2:-2]
    res = float(np.max(np.abs(R)))
    # drift diagnostic stays honest: FD slope of the collocation data vs W0
    q_fd = fd_derivative(v, h)
    core = slice(max(i_sw_l, 0) + 4, min(i_sw_r, len(X)) - 4)
    drift = float(np.max(np.abs(0.5 * q_fd[core] ** 2 - p.W0(v[core]))))
    return Profile(
        X=X, v=v, q=q, kind="heteroclinic", potential=p, H0=0.0,
        alpha_minus=a_m, alpha_plus=a_p, gamma_minus=g_m, gamma_plus=g_p,
        beta_minus=tail_l.beta, beta_plus=tail_r.beta, v0_max=None,
        i_switch_left=i_sw_l, i_switch_right=i_sw_r,
        residual_max=res, hamiltonian_drift=drift,
        tail_left=tail_l, tail_right=tail_r,
    )


def homoclinic_profile(
    p: Potential,
    X_max: float | None = None,
    n_half: int = 4096,
    delta_switch_rel: float = 1e-6,
) -> Profile:
    """Orbit homoclinic to (V_minus, 0) on {H0 = 0}, even about its maximum at X = 0."""
    p.require_double_well()
    W_scale = max(float(np.max(np.abs(p.W0(np.linspace(p.V_minus, p.V_plus, 200))))), 1e-300)
    if p.H0_plus <= EQUAL_WELL_RTOL * W_scale:
        raise WellBalanceError(
            f"H0_plus = {p.H0_plus:.3e} is not positive beyond tolerance; "
            "wells are (nearly) equal -- use heteroclinic_profile"
        )
    a_m = p.alpha_at(p.V_minus)
    g_m = p.gamma_at(p.V_minus)
    a_p = p.alpha_at(p.V_plus)
    g_p = p.gamma_at(p.V_plus)
    if X_max is None:
        X_max = 30.0 / np.sqrt(a_m)

    lo = p.V_center + 1e-12 * (p.V_plus - p.V_center)
    hi = p.V_plus - 1e-12 * (p.V_plus - p.V_center)
    if p.W0(lo) * p.W0(hi) > 0:
        raise WellBalanceError("no real turning point: W0 does not change sign in (V_c, V_+)")
    v0max = float(brentq(lambda vv: float(p.W0(vv)), lo, hi, xtol=1e-15, rtol=8.9e-16))
    span = v0max - p.V_minus

    def dXds(s):
        t = s * s
        vv = p.V_minus + span * np.exp(-t)
        qq = p.q_on_level(vv, 0.0)
        # s -> 0 limit: 2 s span e^{-t} / sqrt(2 |W0'(v0max)| span t) -> sqrt(2 span / |W0'|)
        gp0 = abs(float(p.g(v0max)))
        lim = np.sqrt(2.0 * span / gp0)
        out = np.where(qq > 1e-150, 2.0 * s * span * np.exp(-t) / np.where(qq > 0, qq, 1.0), lim)
        return out

    S = np.sqrt(np.sqrt(a_m) * X_max + 12.0)
    s_grid = np.linspace(0.0, S, 4001)
    Xc = _cumulative_gauss(dXds, s_grid)
    vc = p.V_minus + span * np.exp(-s_grid**2)

    Xh = np.linspace(0.0, X_max, n_half + 1)
    h = Xh[1] - Xh[0]
    vh = CubicSpline(Xc, vc)(np.minimum(Xh, Xc[-1]))

    d_sw = delta_switch_rel * (p.V_plus - p.V_minus)
    tail = TailModel(V_saddle=p.V_minus, alpha=a_m, gamma=g_m, beta=1.0, sign=+1.0)
    tail.beta = _fit_beta_window(Xc, vc - p.V_minus, a_m, tail.c2, d_sw)
    i_sw = int(np.searchsorted(Xh, np.log(tail.beta / d_sw) / np.sqrt(a_m)))
    if i_sw > n_half - 10:
        i_sw = n_half + 1
    if i_sw <= n_half:
        vh[i_sw:] = tail.v_of(Xh[i_sw:])

    # half-line even-symmetric solve: evenness excludes the translation mode,
    # so no phase pinning is required and every row is a genuine ODE row
    g_exact, gp_exact = _make_g_callables(p.branch)
    fixed_h = np.zeros(len(Xh), dtype=bool)
    fixed_h[-1] = True
    vhalf = vh.copy()
    for _ in range(2):
        vhalf, _ = _newton_polish(Xh, vhalf, g_exact, gp_exact, fixed_h, even_at_left=True)
        tail.beta = _fit_beta_window(Xh, vhalf - p.V_minus, a_m, tail.c2, d_sw)
        if i_sw <= n_half:
            vhalf[i_sw:] = tail.v_of(Xh[i_sw:])
    Xfull = np.concatenate([-Xh[::-1], Xh[1:]])
    vfull = np.concatenate([vhalf[::-1], vhalf[1:]])
    n_mid = len(Xfull) // 2

    qfull = fd_derivative(vfull, h)
    if i_sw <= n_half:
        js = max(i_sw - 3, 1)
        q_tail = tail.deviation_s(Xh[js:])     # v = V- + dev(X): q = dev_s < 0 on the right
        qfull[n_mid + js:] = q_tail
        qfull[: n_mid - js + 1] = -q_tail[::-1]
    qfull[n_mid] = 0.0

    g_vals = np.asarray(g_exact(vfull))
    R = (-vfull[:-4] + 16 * vfull[1:-3] - 30 * vfull[2:-2] + 16 * vfull[3:-1] - vfull[4:]) \
        / (12 * h * h) + g_vals[2:-2]
    res = float(np.max(np.abs(R)))
    drift = float(np.max(np.abs(0.5 * qfull**2 - p.W0(vfull))))
    isl = n_mid - i_sw if i_sw <= n_half else -1
    isr = n_mid + i_sw if i_sw <= n_half else len(Xfull)
    return Profile(
        X=Xfull, v=vfull, q=qfull, kind="homoclinic", potential=p, H0=0.0,
        alpha_minus=a_m, alpha_plus=a_p, gamma_minus=g_m, gamma_plus=g_p,
        beta_minus=tail.beta, beta_plus=None, v0_max=v0max,
        i_switch_left=isl, i_switch_right=isr,
        residual_max=res, hamiltonian_drift=drift,
        tail_left=tail, tail_right=tail,
    )


@dataclass(frozen=True)
class TailConstants:
    alpha_minus: float
    alpha_plus: float
    beta_minus: float
    beta_plus: float | None
    gamma_plus: float
    fit_residual_one_term: float
    fit_residual_two_term: float


def tail_constants(pr: Profile, quality_gate: float = 1e-3) -> TailConstants:
    """(alpha_pm, beta_pm, gamma_plus) with beta refitted from the stored profile tail.

    The two-term refinement must reduce the one-term fit residual by at least
    an order of magnitude; a fit worse than the quality gate raises TailFitError.
    """
    p = pr.potential
    if pr.kind == "heteroclinic":
        tail = pr.tail_right
        dev = p.V_plus - pr.v
    else:
        tail = pr.tail_right
        dev = pr.v - p.V_minus
    scale = abs(p.V_plus - p.V_minus)
    mask = (pr.X > 0) & (dev > 1e-6 * scale) & (dev < 1e-3 * scale)
    if np.count_nonzero(mask) < 6:
        raise TailFitError("not enough tail nodes in the fit window; increase X_max")
    sw = pr.X[mask]
    dw = dev[mask]
    E = np.exp(-np.sqrt(tail.alpha) * sw)
    beta1 = float(np.dot(E, dw) / np.dot(E, E))
    r1 = float(np.sqrt(np.mean((dw - beta1 * E) ** 2)) / np.sqrt(np.mean(dw**2)))
    _, r2 = fit_saddle_beta(sw, dw, np.sqrt(tail.alpha), tail.c2)
    beta2, _ = fit_saddle_beta(sw, dw, np.sqrt(tail.alpha), tail.c2, free_cubic=True)
    if r2 > quality_gate:
        raise TailFitError(f"two-term tail fit residual {r2:.2e} exceeds the quality gate")
    if pr.kind == "heteroclinic":
        return TailConstants(pr.alpha_minus, pr.alpha_plus, pr.beta_minus, beta2,
                             pr.gamma_plus, r1, r2)
    return TailConstants(pr.alpha_minus, pr.alpha_plus, beta2, None, pr.gamma_plus, r1, r2)
