"""Melnikov coefficients: M*, first/second-order corrections, spectral table,
persistence integrals, root finding, and the internal consistency anchors."""
from __future__ import annotations

import numpy as np
import pytest
from scipy.integrate import quad

from slowpatterns.errors import RegimeError, SolverError, WellBalanceError
from slowpatterns.manifold import find_branches
from slowpatterns.melnikov import (
    Numerics,
    engine_for,
    find_mu_t_star,
    full_report,
    grad_m_star,
    persistence_integral,
)
from slowpatterns.model import ModelInstance, ParameterVector

from conftest import (
    EXT_F,
    EXT_G,
    EXT_PARAMS,
    EXT_TAU,
    FLEET_ROOTS,
    NUM,
    cached_engine,
    sinewell,
    sinewell_at_root,
    unequal_well_model,
)

S2 = np.sqrt(2.0)


def oracle_I1(mu1, mu2):
    """Quadrature oracle for the M* tilt integral along tanh(X/sqrt2)."""
    f = lambda X: np.cos(mu1 * np.tanh(X / S2) + mu2) * 0.5 / np.cosh(X / S2) ** 4
    val, _ = quad(f, -40, 40, epsabs=1e-13, epsrel=1e-13, limit=400)
    return val


def test_m_star_vertical_is_norm():
    eng = cached_engine(sinewell(0.0, 0.3, 0.7))
    assert eng.m_star == pytest.approx(2 * S2 / 3, rel=1e-9)
    assert eng.norm_qsq == pytest.approx(2 * S2 / 3, rel=1e-9)


def test_m_star_odd_tilt_cancels():
    # mu2 = pi/2: the cos term is odd along the profile and integrates to zero
    eng = cached_engine(sinewell(1.0, np.pi / 2, -1.7, tau=1.3))
    assert eng.m_star == pytest.approx(2 * S2 / 3, rel=1e-9)


def test_m_star_linear_in_mu3_oracle():
    I1 = oracle_I1(1.0, 0.0)
    mu3 = -0.8
    eng = cached_engine(sinewell(1.0, 0.0, mu3))
    assert eng.m_star == pytest.approx(2 * S2 / 3 + mu3 * I1, rel=1e-9)
    mu3_star = -(2 * S2 / 3) / I1
    eng_root = cached_engine(sinewell(1.0, 0.0, mu3_star))
    assert abs(eng_root.m_star) <= 1e-10


def test_find_mu_t_star_on_mu3_path():
    I1 = oracle_I1(1.0, 0.0)
    expected = -(2 * S2 / 3) / I1
    m0 = sinewell(1.0, 0.0, -1.0)
    rooted = find_mu_t_star(m0, ("mu3", expected - 0.05, expected + 0.05),
                            NUM, n_scan=3)
    assert rooted.params["mu3"] == pytest.approx(expected, abs=1e-8)


def test_find_mu_t_star_tau_path():
    I1 = oracle_I1(1.0, 0.0)
    mu3 = -0.9
    tau_star = -(2 * S2 / 3) / (mu3 * I1)
    m0 = sinewell(1.0, 0.0, mu3, tau=1.0)
    rooted = find_mu_t_star(m0, ("tau", tau_star - 0.05, tau_star + 0.05), NUM, n_scan=3)
    assert rooted.params.tau == pytest.approx(tau_star, abs=1e-8)


def test_find_mu_t_star_no_sign_change():
    m0 = sinewell(0.0, 0.3, 1.0)  # vertical: M* = ||q||^2 > 0 along any path
    with pytest.raises(SolverError, match="sign"):
        find_mu_t_star(m0, ("mu3", -1.0, 1.0), NUM, n_scan=3)


def test_fleet_roots_are_roots():
    for (mu1, mu2, tau), mu3 in FLEET_ROOTS.items():
        eng = cached_engine(sinewell(mu1, mu2, mu3, tau=tau))
        assert abs(eng.m_star) <= 1e-10, (mu1, mu2, tau)


def test_identities_at_root_fleet():
    """The paper-level anchors on every fleet model (acceptance criterion 3 core)."""
    for key in list(FLEET_ROOTS)[:2]:
        eng = cached_engine(sinewell_at_root(key))
        res = eng.identity_residuals()
        assert res["N2cl_vs_2M2cc"] <= 1e-6
        assert res["N2_vs_M2"] <= 1e-6
        assert res["N1c_at_root"] <= 1e-6 * eng.norm_qsq


def test_identities_extended_model():
    """Model with nonzero F_uu, F_uv, G_uu, G_uv and third partials everywhere."""
    pv = ParameterVector(EXT_PARAMS, tau=EXT_TAU)
    eng = cached_engine(ModelInstance(EXT_F, EXT_G, pv, name="sinewell_ext"))
    assert abs(eng.m_star) <= 1e-10
    res = eng.identity_residuals()
    assert res["N2cl_vs_2M2cc"] <= 1e-6
    assert res["N2cc_vs_M2cc"] <= 1e-6
    assert res["N2_vs_M2"] <= 1e-6
    assert res["N1c_at_root"] <= 1e-8
    assert eng.selfadjoint_reduction_residual() <= 1e-9


def test_first_order_orbit_properties(root_engine):
    eng = root_engine
    tv1, ut1 = eng.first_order_orbit()
    assert abs(tv1[eng.profile.i0]) <= 1e-12
    assert abs(tv1[0]) <= 1e-10
    # u-component relation ut1 = f' tv1 - tau q ft1
    k = eng.profile.i0 + 200
    assert ut1[k] == pytest.approx(
        eng["fp"][k] * tv1[k] - eng.tau * eng.q[k] * eng["ft1"][k], rel=1e-12)


def test_first_order_orbit_vertical_growth():
    eng = cached_engine(sinewell(0.0, 0.3, 0.7))
    sol = eng._cache.get("tv1_sol")
    if sol is None:
        eng.first_order_orbit()
        sol = eng._cache["tv1_sol"]
    # G1c = 1: M_h = -||q||^2 < 0
    assert sol.M_h == pytest.approx(-2 * S2 / 3, rel=1e-9)


def test_m2cc_guarded_away_from_root(offroot_engine):
    with pytest.raises(RegimeError):
        offroot_engine.second_order_coeffs()
    with pytest.raises(RegimeError):
        offroot_engine.spectral_coeffs()


def test_m2_vertical_is_zero():
    eng = cached_engine(sinewell(0.0, 0.3, 0.7))
    assert abs(eng.M2) <= 1e-12


def test_m2_quadrature_oracle(root_engine):
    """M2 = mu3 int [q^2 f'' - f'(v - v^3)] q dX for the sinusoidal manifold."""
    eng = root_engine
    mu1, mu2 = 1.0, 0.4
    mu3 = FLEET_ROOTS[(1.0, 0.4, 1.0)]

    def integrand(X):
        va = np.tanh(X / S2)
        qa = (1 - va**2) / S2
        th = mu1 * va + mu2
        fpp = -mu1**2 * np.sin(th)
        fp = mu1 * np.cos(th)
        return mu3 * (qa**2 * fpp - fp * (va - va**3)) * qa

    val, _ = quad(integrand, -40, 40, epsabs=1e-13, epsrel=1e-13, limit=400)
    assert eng.M2 == pytest.approx(val, rel=1e-8)


def test_persistence_integral_vertical_positive(uneq_potential):
    """f' = 0: the persistence quadrature is pure friction, so strictly positive."""
    m = sinewell(0.0, 0.3, 0.7)
    b = find_branches(m, (-1.5, 1.5), (-2.0, 2.0))[0]
    from slowpatterns.reduced_flow import build_potential

    pot = build_potential(b)
    for H0 in (-0.2, -0.05):
        res = persistence_integral(pot, b, H0, tau=0.7)
        assert res.m_part > 0
        assert np.isfinite(res.period) and res.period > 0


def test_persistence_center_limit():
    m = sinewell(0.0, 0.3, 0.7)
    b = find_branches(m, (-1.5, 1.5), (-2.0, 2.0))[0]
    from slowpatterns.reduced_flow import build_potential

    pot = build_potential(b)
    H0 = pot.H0_center * (1 - 1e-6)
    res = persistence_integral(pot, b, H0, tau=0.7)
    assert abs(res.A - pot.V_center) <= 1e-2
    assert abs(res.B - pot.V_center) <= 1e-2
    # small oscillations: T -> 2 pi / sqrt(-W0''(V_center)) with W0'' = -g'(V_c)
    T_lin = 2 * np.pi / np.sqrt(pot.g_prime(pot.V_center))
    assert res.period == pytest.approx(T_lin, rel=1e-3)


def test_m_hom_matches_x_quadrature(uneq_potential, uneq_profile):
    """M_hom via the v-quadrature equals int G1c q^2 dX along the homoclinic."""
    pot = uneq_potential
    b = pot.branch
    tau = 1.0
    res = persistence_integral(pot, b, 0.0, tau=tau)
    assert res.period == np.inf
    pr = uneq_profile
    u = b.f_at(pr.v)
    mdl = b.model
    Fu = np.asarray(mdl.partial("F", 1, 0, u, pr.v))
    Fv = np.asarray(mdl.partial("F", 0, 1, u, pr.v))
    Gu = np.asarray(mdl.partial("G", 1, 0, u, pr.v))
    G1c = 1.0 - tau * ((-Fv / Fu) / Fu) * Gu
    from slowpatterns._num import integrate

    direct = 0.5 * integrate(G1c * pr.q**2, pr.X)  # half line of the even orbit
    assert res.m_part == pytest.approx(direct, abs=1e-8)


def test_grad_m_star_richardson(root_engine):
    m = sinewell_at_root()
    g1 = grad_m_star(m, ["mu3"], NUM, h_rel=2e-5)
    g2 = grad_m_star(m, ["mu3"], NUM, h_rel=1e-5)
    assert g1["mu3"] == pytest.approx(g2["mu3"], rel=1e-5)
    # analytic slope: dM*/dmu3 = tau * I1 with the oracle integral
    I1 = oracle_I1(1.0, 0.4)
    assert g2["mu3"] == pytest.approx(I1, rel=1e-6)


def test_gradient_rejected_when_wells_unbalance():
    """Perturbing delta breaks equal wells; without a balance parameter it rejects."""
    m = unequal_well_model(delta=0.0)
    with pytest.raises(WellBalanceError):
        grad_m_star(m, ["delta"], NUM)


def test_full_report_fields(root_report):
    rep = root_report
    assert abs(rep.M_star) <= 1e-10
    assert rep.N_r == pytest.approx(rep.N2cl**2 / rep.N2ll, rel=1e-14)
    assert rep.N_c(0.0) == pytest.approx(np.sqrt(rep.alpha_plus) * rep.M2, rel=1e-6)
    d = rep.to_dict()
    assert d["schema"].startswith("slowpatterns.melnikov_report")
    assert "N2ll" in d["coefficients"]
    assert d["critical_points"]["V_plus"] == pytest.approx(1.0, abs=1e-12)
