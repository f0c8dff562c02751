"""Slow-manifold branches u = f(v), normal hyperbolicity, and slow-flow coefficients."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from ._num import integrate
from .errors import BranchError, LevelSetError, NormalHyperbolicityError
from .model import ModelInstance

__all__ = [
    "Branch",
    "SlowFlowCoefficients",
    "find_branches",
    "check_normal_hyperbolicity",
    "slow_flow_coeffs",
    "w2_correction",
]


@dataclass
class Branch:
    """One connected root branch of F(u, v) = 0 sampled on a v-grid."""

    model: ModelInstance
    v_grid: np.ndarray
    f_values: np.ndarray
    f_prime: np.ndarray
    f_double_prime: np.ndarray
    Fu_values: np.ndarray
    branch_index: int = 0
    fold_markers: list[dict] = field(default_factory=list)

    @property
    def is_normally_hyperbolic(self) -> bool:
        return bool(np.all(self.Fu_values < 0.0))

    @property
    def hyperbolicity_margin(self) -> float:
        """kappa with F_u < -kappa on the grid (negative when not hyperbolic)."""
        return float(-np.max(self.Fu_values))

    def f_at(self, v, newton_steps: int = 25):
        """Root of F(., v) on this branch: interpolated guess polished by Newton."""
        v_arr = np.atleast_1d(np.asarray(v, dtype=float))
        u = np.interp(v_arr, self.v_grid, self.f_values)
        m = self.model
        for _ in range(newton_steps):
            Fv = np.asarray(m.partial("F", 0, 0, u, v_arr))
            Fu = np.asarray(m.partial("F", 1, 0, u, v_arr))
            step = Fv / Fu
            u = u - step
            if np.max(np.abs(step)) < 1e-14 * (1.0 + np.max(np.abs(u))):
                break
        return u if np.ndim(v) else float(u[0])

    def derivatives_at(self, v):
        """(f, f', f'') by implicit differentiation of F(f(v), v) = 0."""
        u = self.f_at(v)
        m = self.model
        Fu = m.partial("F", 1, 0, u, v)
        Fv = m.partial("F", 0, 1, u, v)
        Fuu = m.partial("F", 2, 0, u, v)
        Fuv = m.partial("F", 1, 1, u, v)
        Fvv = m.partial("F", 0, 2, u, v)
        fp = -Fv / Fu
        fpp = -(Fuu * fp**2 + 2 * Fuv * fp + Fvv) / Fu
        return u, fp, fpp

    def g_at(self, v):
        """Reduced-flow right-hand side G(f(v), v)."""
        return self.model.partial("G", 0, 0, self.f_at(v), v)

    def to_rows(self):
        """CSV export rows (v, f, f', F_u margin)."""
        return np.column_stack([self.v_grid, self.f_values, self.f_prime, self.Fu_values])


def _roots_in_window(m: ModelInstance, v: float, u_window: tuple[float, float], n_scan: int):
    lo, hi = u_window
    us = np.linspace(lo, hi, n_scan + 1)
    Fs = np.asarray(m.partial("F", 0, 0, us, np.full_like(us, v), check_domain=False))
    roots: list[float] = []
    for k in range(n_scan):
        a, b = Fs[k], Fs[k + 1]
        if not (np.isfinite(a) and np.isfinite(b)):
            continue
        if a == 0.0:
            roots.append(float(us[k]))
        elif a * b < 0:
            roots.append(float(brentq(lambda u: m.partial("F", 0, 0, u, v), us[k], us[k + 1],
                                      xtol=1e-14, rtol=8.9e-16)))
    if np.isfinite(Fs[-1]) and Fs[-1] == 0.0:
        roots.append(float(us[-1]))
    # deduplicate near-identical roots
    roots.sort()
    out: list[float] = []
    for r in roots:
        if not out or abs(r - out[-1]) > (hi - lo) * 1e-12 + 1e-13:
            out.append(r)
    return out


def find_branches(
    m: ModelInstance,
    v_range: tuple[float, float],
    u_window: tuple[float, float],
    n_v: int = 2001,
    n_u_scan: int = 400,
) -> list[Branch]:
    """All root branches of F(., v) = 0 inside ``u_window``, linked by continuation.

    Branches are ordered f^1 <= f^2 <= ... where they coexist; a branch that
    loses its root between two v-nodes is truncated with a fold marker.
    """
    v_grid = np.linspace(v_range[0], v_range[1], n_v)
    dv = v_grid[1] - v_grid[0]
    span = u_window[1] - u_window[0]

    active: list[dict] = []  # {vs: [...], us: [...], open: bool}
    finished: list[dict] = []
    for v in v_grid:
        roots = _roots_in_window(m, float(v), u_window, n_u_scan)
        taken = [False] * len(roots)
        for br in active:
            if not br["open"]:
                continue
            u_prev = br["us"][-1]
            slope = 0.0
            if len(br["us"]) >= 2:
                slope = (br["us"][-1] - br["us"][-2]) / dv
            u_pred = u_prev + slope * dv
            tol = 3.0 * (abs(slope) * dv + span / n_u_scan) + 1e-9
            best, best_d = -1, np.inf
            for k, r in enumerate(roots):
                if taken[k]:
                    continue
                d = abs(r - u_pred)
                if d < best_d:
                    best, best_d = k, d
            if best >= 0 and best_d <= tol:
                taken[best] = True
                br["vs"].append(float(v))
                br["us"].append(roots[best])
            else:
                br["open"] = False
                br["folds"].append({"v": float(v - dv), "reason": "root lost (fold)"})
                finished.append(br)
        active = [br for br in active if br["open"]]
        for k, r in enumerate(roots):
            if not taken[k]:
                active.append({"vs": [float(v)], "us": [r], "open": True, "folds": []})
    finished.extend(active)

    if not any(len(br["us"]) >= 2 for br in finished):
        raise BranchError("no roots of F(., v) = 0 found in the requested window")

    branches: list[Branch] = []
    for br in finished:
        if len(br["us"]) < 5:
            continue
        vs = np.array(br["vs"])
        us = np.array(br["us"])
        Fu = np.empty_like(vs)
        fp = np.empty_like(vs)
        fpp = np.empty_like(vs)
        mdl = m
        Fu[:] = np.asarray(mdl.partial("F", 1, 0, us, vs))
        Fv = np.asarray(mdl.partial("F", 0, 1, us, vs))
        Fuu = np.asarray(mdl.partial("F", 2, 0, us, vs))
        Fuv = np.asarray(mdl.partial("F", 1, 1, us, vs))
        Fvv = np.asarray(mdl.partial("F", 0, 2, us, vs))
        fp[:] = -Fv / Fu
        fpp[:] = -(Fuu * fp**2 + 2 * Fuv * fp + Fvv) / Fu
        branches.append(
            Branch(model=m, v_grid=vs, f_values=us, f_prime=fp, f_double_prime=fpp,
                   Fu_values=Fu, fold_markers=br["folds"])
        )

    # order by f-value where branches coexist (use the midpoint of the scan range)
    v_mid = 0.5 * (v_range[0] + v_range[1])

    def sort_key(b: Branch) -> float:
        if b.v_grid[0] <= v_mid <= b.v_grid[-1]:
            return float(np.interp(v_mid, b.v_grid, b.f_values))
        return float(np.mean(b.f_values))

    branches.sort(key=sort_key)
    for idx, b in enumerate(branches, start=1):
        b.branch_index = idx
    return branches


def check_normal_hyperbolicity(b: Branch, v_interval: tuple[float, float], n: int = 2001) -> float:
    """kappa > 0 with F_u(f(v), v) < -kappa on the interval; raises when violated."""
    lo, hi = v_interval
    if lo < b.v_grid[0] - 1e-12 or hi > b.v_grid[-1] + 1e-12:
        raise BranchError("branch does not cover the requested v-interval")
    vs = np.linspace(lo, hi, n)
    us = b.f_at(vs)
    Fu = np.asarray(b.model.partial("F", 1, 0, us, vs))
    worst = int(np.argmax(Fu))
    if Fu[worst] >= 0.0:
        raise NormalHyperbolicityError(
            f"normal hyperbolicity fails: F_u = {Fu[worst]:.6g} at v = {vs[worst]:.6g}",
            v_violation=float(vs[worst]),
        )
    return float(-Fu[worst])


@dataclass(frozen=True)
class SlowFlowCoefficients:
    """Slow-manifold expansion and slow-flow coefficients at one (v, q) point."""

    v: float
    q: float
    tau: float
    f_tilde1: float
    F2cc: float
    F2: float
    G1c: float
    G2cc: float
    G2: float
    f1: float | None = None
    f2: float | None = None
    p1: float | None = None
    p2: float | None = None


def slow_flow_coeffs(
    b: Branch,
    v: float,
    q: float,
    tau: float,
    c0: float | None = None,
    c1: float | None = None,
) -> SlowFlowCoefficients:
    """Evaluate every expansion coefficient of the slow manifold / slow flow at (v, q)."""
    m = b.model
    u, fp, fpp = b.derivatives_at(v)
    Fu = m.partial("F", 1, 0, u, v)
    if Fu >= 0.0:
        raise NormalHyperbolicityError(f"F_u = {Fu:.6g} >= 0 at v = {v:.6g}", v_violation=v)
    Fuu = m.partial("F", 2, 0, u, v)
    Gu = m.partial("G", 1, 0, u, v)
    Guu = m.partial("G", 2, 0, u, v)
    g = m.partial("G", 0, 0, u, v)
    ft1 = fp / Fu
    # d/dv of f_tilde1 along the branch
    Fuv = m.partial("F", 1, 1, u, v)
    ft1p = fpp / Fu - fp * (Fuu * fp + Fuv) / Fu**2
    q2 = q * q
    F2cc = (0.5 * q2 * ft1**2 * Fuu - q2 * ft1p + ft1 * g) / Fu
    F2 = (q2 * fpp - fp * g) / Fu
    G1c = 1.0 - tau * ft1 * Gu
    G2cc = -F2cc * Gu + 0.5 * q2 * ft1**2 * Guu
    G2 = -F2 * Gu
    f1 = f2 = p1 = p2 = None
    if c0 is not None:
        c1v = 0.0 if c1 is None else c1
        f1 = -c0 * tau * q * ft1
        f2 = -c1v * tau * q * ft1 - c0**2 * tau**2 * F2cc - F2
        p1 = q * fp
        p2 = -c0 * tau * (q2 * ft1p - ft1 * g)
    return SlowFlowCoefficients(v=float(v), q=float(q), tau=float(tau), f_tilde1=float(ft1),
                                F2cc=float(F2cc), F2=float(F2), G1c=float(G1c),
                                G2cc=float(G2cc), G2=float(G2), f1=f1, f2=f2, p1=p1, p2=p2)


def w2_correction(b: Branch, v: float, H0: float, tau: float | None = None,
                  potential=None, n_quad: int = 4000) -> float:
    """Second-order potential correction W2(v; H0) of the stationary slow flow.

    Uses q^2 = 2 H0 + 2 W0(v) on the level set; a negative q^2 beyond tolerance
    means the level set leaves the real domain and raises LevelSetError.
    """
    if potential is None:
        from .reduced_flow import build_potential

        potential = build_potential(b)
    tau_v = b.model.params.tau if tau is None else tau
    vm = potential.V_minus
    if abs(v - vm) < 1e-14:
        return 0.0
    vs = np.linspace(vm, v, n_quad + 1)
    q2 = 2.0 * H0 + 2.0 * potential.W0(vs)
    if np.min(q2) < -1e-10 * max(1.0, abs(H0)):
        raise LevelSetError(
            f"level set H0 = {H0:.6g} leaves the real domain (min q^2 = {np.min(q2):.3g})"
        )
    q2 = np.maximum(q2, 0.0)
    us = b.f_at(vs)
    m = b.model
    Fu = np.asarray(m.partial("F", 1, 0, us, vs))
    Fv = np.asarray(m.partial("F", 0, 1, us, vs))
    Fuu = np.asarray(m.partial("F", 2, 0, us, vs))
    Fuv = np.asarray(m.partial("F", 1, 1, us, vs))
    Fvv = np.asarray(m.partial("F", 0, 2, us, vs))
    Gu = np.asarray(m.partial("G", 1, 0, us, vs))
    g = np.asarray(m.partial("G", 0, 0, us, vs))
    fp = -Fv / Fu
    fpp = -(Fuu * fp**2 + 2 * Fuv * fp + Fvv) / Fu
    G2 = -((q2 * fpp - fp * g) / Fu) * Gu
    return float(-integrate(G2, vs))
