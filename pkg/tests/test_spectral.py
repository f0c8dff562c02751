"""Essential spectrum, eigencurves, O(1) counting, small eigenvalues, classification."""
from __future__ import annotations

import numpy as np
import pytest

from slowpatterns.errors import RegimeError, SolverError
from slowpatterns.manifold import find_branches
from slowpatterns.model import ParameterVector, builtin
from slowpatterns.reduced_flow import build_potential, heteroclinic_profile
from slowpatterns.spectral import (
    background_stability,
    classify,
    eigencurves,
    o1_eigenvalues,
    small_eigenvalues,
    transverse_eigenvalues,
)

from conftest import cached_engine, sinewell, sinewell_at_root
from test_existence import synthetic_report

S2 = np.sqrt(2.0)


# -- essential spectrum -------------------------------------------------------

def test_background_sinewell_stable_state():
    m = sinewell(1.0, 0.0, 0.0)
    U = float(np.sin(1.0))
    rep = background_stability(m, (U, 1.0))
    st = rep.states[0]
    assert st.is_saddle and st.is_stable
    # F_u G_v - F_v G_u = (-1)(-2) - 0 = 2 > 0; F_u + tau G_v = -3 < 0
    assert st.Fu * st.Gv - st.Fv * st.Gu == pytest.approx(2.0, abs=1e-12)
    assert st.Fu + 1.0 * st.Gv == pytest.approx(-3.0, abs=1e-12)


def test_background_vertical_edge_constant():
    m = sinewell(0.0, 0.3, 0.7)
    U = float(np.sin(0.3))
    rep = background_stability(m, (U, -1.0))
    st = rep.states[0]
    rhos = np.linspace(0, 25, 11)
    assert np.max(np.abs(st.sigma_ess_edge(rhos) + 2.0)) <= 1e-12
    assert st.sigma_ess_at_infinity == pytest.approx(st.Gv, abs=1e-14)


def test_background_center_state_fails_saddle():
    m = sinewell(1.0, 0.0, 0.5)
    rep = background_stability(m, (0.0, 0.0))  # the center (V_c = 0)
    assert not rep.states[0].is_saddle


def test_background_requires_root():
    m = sinewell(1.0, 0.0, 0.5)
    with pytest.raises(SolverError):
        background_stability(m, (0.3, 0.9))


# -- eigencurves --------------------------------------------------------------

@pytest.fixture(scope="module")
def vertical_profile():
    m = sinewell(0.0, 0.3, 1.0)
    b = find_branches(m, (-1.5, 1.5), (-2.0, 2.0))[0]
    return heteroclinic_profile(build_potential(b), X_max=20.0, n_half=1000)  # h = 0.02


@pytest.fixture(scope="module")
def vertical_family(vertical_profile):
    return eigencurves(vertical_profile, rho_max=10.0, n_rho=21)


def test_poschl_teller_spectrum(vertical_family):
    fam = vertical_family
    h = fam.profile.h
    tol = 10 * h * h
    assert np.nanmax(np.abs(fam.curves[0])) <= tol
    assert np.nanmax(np.abs(fam.curves[1] + 1.5)) <= tol
    assert np.max(np.abs(fam.edge_values + 2.0)) <= 1e-10
    assert fam.parities[:2] == ["even", "odd"]


def test_vertical_curves_constant_in_rho(vertical_family):
    fam = vertical_family
    for j in range(fam.n_curves):
        c = fam.curves[j][~np.isnan(fam.curves[j])]
        assert np.max(c) - np.min(c) <= 1e-10
    assert np.nanmax(np.abs(fam.lambda_prime)) <= 1e-12


def test_translational_eigenfunction(vertical_family):
    lam, vec = vertical_family.eigenfunction_at(0.0, 0)
    pr = vertical_family.profile
    qa = pr.q / np.sqrt(np.trapezoid(pr.q**2, pr.X))
    cos = abs(np.trapezoid(vec * qa, pr.X))
    assert cos >= 1 - 1e-6


def test_slope_identity_formula_vs_secant(root_engine):
    """(lambda*_0)'(0) = (1/tau)(1 - M*/||q||^2), via the evolution law and secant."""
    eng = root_engine
    fam = eigencurves(eng.profile, rho_max=4.0, n_rho=9)
    pred = (1.0 / eng.tau) * (1.0 - eng.m_star / eng.norm_qsq)
    s_formula = fam.lambda_prime_at(0.0, 0)
    d = 1e-3
    s_secant = (fam.lambda_at(d, 0) - fam.lambda_at(-d, 0)) / (2 * d)
    assert abs(s_formula - pred) <= 1e-4
    assert abs(s_secant - pred) <= 1e-4


def test_lambda_prime_matches_secant_interior(root_engine):
    fam = eigencurves(root_engine.profile, rho_max=1.2, n_rho=25)
    sec = fam.secant_slopes()
    for k in (4, 12, 20):
        a, b = fam.lambda_prime[0, k], sec[0, k]
        assert abs(a - b) <= 1e-3 * max(1.0, abs(a))


def test_homoclinic_base_ordering(uneq_profile):
    fam = eigencurves(uneq_profile, rho_max=6.0, n_rho=13)
    assert fam.curves[0, 0] > 0          # lambda_0(0) > 0
    assert abs(fam.curves[1, 0]) <= 10 * fam.profile.h**2   # lambda_1(0) = 0
    # parity alternation for the even base profile
    assert fam.parities[0] == "even" and fam.parities[1] == "odd"
    # ordering preserved at every rho
    for k in range(fam.curves.shape[1]):
        col = fam.curves[:, k]
        col = col[~np.isnan(col)]
        assert np.all(np.diff(col) < 0)


def test_o1_vertical_no_intersections(vertical_family):
    o1 = o1_eigenvalues(vertical_family)
    assert o1.n_unstable == 0
    assert o1.rho_max_sufficient
    assert o1.cor31_i_holds


def test_o1_unequal_wells_unstable(uneq_profile):
    fam = eigencurves(uneq_profile, rho_max=8.0, n_rho=17)
    o1 = o1_eigenvalues(fam)
    assert o1.n_unstable >= 1
    lam = o1.intersections[0]["lambda"]
    assert lam > 0
    assert o1.intersections[0]["rho"] == pytest.approx(lam * fam.tau, rel=1e-10)


def test_o1_negative_m_star_front_unstable():
    """Heteroclinic with M* < 0: the slope at 0 exceeds 1/tau and a positive
    intersection must appear."""
    eng = cached_engine(sinewell(1.0, 0.4, -2.2))
    assert eng.m_star < 0
    fam = eigencurves(eng.profile, rho_max=10.0, n_rho=21)
    assert fam.lambda_prime_at(0.0, 0) > 1.0 / eng.tau
    o1 = o1_eigenvalues(fam)
    assert o1.n_unstable >= 1


def test_cor31_ii_matches_m_hom(uneq_potential, uneq_profile):
    from slowpatterns.melnikov import persistence_integral

    fam = eigencurves(uneq_profile, rho_max=6.0, n_rho=13)
    M_hom = persistence_integral(uneq_potential, uneq_potential.branch, 0.0, 1.0).m_part
    o1 = o1_eigenvalues(fam, M_hom=M_hom)
    # lambda_1'(0) > 1/tau  <=>  M_hom < 0
    assert o1.cor31_ii_holds == (M_hom < 0)
    assert (o1.lambda1_prime_at_zero > 1.0) == (M_hom < 0)


# -- small eigenvalues --------------------------------------------------------

def test_small_stationary_pulse_sign(offroot_engine):
    eng = offroot_engine
    rep = synthetic_report(M2=eng.M2, M_star=eng.m_star, norm_qsq=eng.norm_qsq)
    out = small_eigenvalues(rep, "stationary_pulse", eps=1e-2)
    lam = out.eigenvalues["even"]
    assert lam == pytest.approx(1e-4 * 2 * S2 * eng.M2 / eng.m_star, rel=1e-12)
    assert lam > 0  # M* > 0, M2 > 0: unstable


def test_small_front_zero_at_saddle_node():
    rep = synthetic_report(M2=1.0, M2cc=4.0, N2ll=1.0)
    mu_sn = 2 * np.sqrt(rep.M2 * rep.M2cc)
    c_sn = -np.sqrt(rep.M2 / rep.M2cc)
    out = small_eigenvalues(rep, "front", eps=1e-2, mu1_tilde=mu_sn, c0=c_sn)
    assert abs(out.eigenvalues["second"]) <= 1e-12


def test_small_front_sqrt_form_consistency():
    rep = synthetic_report(M2=-0.5, M2cc=1.2, N2ll=0.8)
    mu1 = 0.9
    disc = mu1**2 - 4 * rep.M2cc * rep.M2
    c0 = (-mu1 + np.sqrt(disc)) / (2 * rep.M2cc)
    out = small_eigenvalues(rep, "front", eps=1e-2, mu1_tilde=mu1, c0=c0)
    assert out.eigenvalues["second"] == pytest.approx(1e-2 * np.sqrt(disc) / rep.N2ll,
                                                      rel=1e-10)


def test_small_front_requires_consistent_speed():
    rep = synthetic_report(M2=1.0, M2cc=1.0)
    with pytest.raises(RegimeError):
        small_eigenvalues(rep, "front", eps=1e-2, mu1_tilde=0.3, c0=5.0)


def test_small_standing_pulse_worked_example():
    """alpha+ = 2, M2 = 1, N2ll = 1, G1c+ = -1, eps = 1e-2: the Hopf-side numbers."""
    rep = synthetic_report(M2=1.0, M2cc=1.0, N2ll=1.0, G1c_plus=-1.0, alpha_plus=2.0)
    out = small_eigenvalues(rep, "standing_pulse", eps=1e-2, mu2_tilde=-0.5)
    lam = out.eigenvalues["pair_plus"]
    assert lam.imag == pytest.approx(0.01 * np.sqrt(2 * S2), rel=1e-12)   # 0.016818...
    assert lam.imag == pytest.approx(0.016818, abs=5e-6)
    assert lam.real == pytest.approx(1e-4 * (-0.5) * abs(np.log(1e-2)), rel=1e-12)
    assert lam.real == pytest.approx(-2.3026e-4, abs=1e-7)
    assert out.eigenvalues["pair_minus"].real == pytest.approx(lam.real, rel=1e-12)
    # |mu2| >> 1 standing mode
    assert out.eigenvalues["mode_12"] == pytest.approx(
        1e-4 * (-0.5) * abs(np.log(1e-2)), rel=1e-12)


def test_small_traveling_pulse_regimes():
    rep = synthetic_report(M2=1.0, M2cc=1.0, N2ll=1.0, G1c_plus=-1.0)
    # N_r = (2 M2cc)^2 / N2ll = 4 > 2 sqrt2 M2cc: merge point exists
    mu_tw = rep.G1c_plus * rep.M2 / (2 * S2)
    out = small_eigenvalues(rep, "traveling_pulse", eps=1e-2, mu2_tilde=mu_tw - 0.05,
                            mu_N=0.0, c0=0.2, expect="imaginary")
    assert out.regime["character"] == "imaginary"
    assert "c0_merge" in out.thresholds
    c0m = out.thresholds["c0_merge"]
    pred = np.sqrt(2 * S2 * rep.M2 / (rep.N_r - 2 * S2 * rep.M2cc))
    assert c0m == pytest.approx(pred, rel=1e-12)
    # beyond the merge speed the pair is real
    out2 = small_eigenvalues(rep, "traveling_pulse", eps=1e-2, mu2_tilde=-3.0,
                             mu_N=0.0, c0=1.5 * c0m)
    assert out2.regime["character"] == "real"
    with pytest.raises(RegimeError):
        small_eigenvalues(rep, "traveling_pulse", eps=1e-2, mu2_tilde=-3.0,
                          mu_N=0.0, c0=1.5 * c0m, expect="imaginary")


def test_small_traveling_pulse_symmetry_and_hopf():
    rep = synthetic_report(M2=1.0, M2cc=1.0, N2ll=1.0, G1c_plus=-1.0)
    kw = dict(eps=1e-2, mu2_tilde=-0.9, mu_N=0.3)
    a = small_eigenvalues(rep, "traveling_pulse", c0=0.25, **kw)
    b = small_eigenvalues(rep, "traveling_pulse", c0=-0.25, **kw)
    # the pair {+,-} is invariant under c0 -> -c0 in its stability-relevant
    # content: identical real parts at the eps^2 log order and identical
    # leading imaginary parts (the eps^2 imaginary corrections swap conjugates)
    pa = sorted([a.eigenvalues["pair_plus"], a.eigenvalues["pair_minus"]],
                key=lambda z: z.imag)
    pb = sorted([b.eigenvalues["pair_plus"], b.eigenvalues["pair_minus"]],
                key=lambda z: z.imag)
    assert pa[0].real == pytest.approx(pb[0].real, rel=1e-9)
    assert pa[1].real == pytest.approx(pb[1].real, rel=1e-9)
    assert pa[0].imag == pytest.approx(pb[0].imag, rel=2e-3)
    assert "mu_N_Hopf" in a.thresholds
    # crossing mu_N through the Hopf value flips the sign of the real part
    muH = a.thresholds["mu_N_Hopf"]
    lo = small_eigenvalues(rep, "traveling_pulse", eps=1e-2, mu2_tilde=-0.9,
                           mu_N=muH - 0.5, c0=0.25)
    hi = small_eigenvalues(rep, "traveling_pulse", eps=1e-2, mu2_tilde=-0.9,
                           mu_N=muH + 0.5, c0=0.25)
    assert np.sign(lo.eigenvalues["pair_plus"].real) != np.sign(
        hi.eigenvalues["pair_plus"].real)


def test_tw_sign_rule_near_bifurcation():
    rep = synthetic_report(M2=1.0, M2cc=1.0, N2ll=1.0, G1c_plus=-1.0)
    mu_tw = rep.G1c_plus * rep.M2 / (2 * S2)
    for delta in (-0.05, 0.05):
        out = small_eigenvalues(rep, "traveling_pulse", eps=1e-2,
                                mu2_tilde=mu_tw + delta, mu_N=0.0, c0=0.1)
        sgn = out.regime["mode_12_sign"]
        assert sgn == np.sign((mu_tw - (mu_tw + delta)) * rep.N2ll)


# -- transverse ---------------------------------------------------------------

def test_transverse_stationary_interface():
    rep = synthetic_report(M_star=0.9)
    eps = 1e-2
    for L1 in (0.5, 1.0):
        out = transverse_eigenvalues(rep, "stationary_interface", L=np.sqrt(eps) * L1,
                                     eps=eps)
        lam = out.eigenvalues[0]
        assert lam == pytest.approx(-eps * rep.norm_qsq * L1**2 / rep.M_star, rel=1e-12)
        assert lam < 0


def test_transverse_traveling_interface_roots():
    rep = synthetic_report(M2=-0.5, M2cc=1.2, N2ll=-0.8)
    eps, L2, mu1, c0 = 1e-2, 0.7, 0.4, 0.3
    out = transverse_eigenvalues(rep, "traveling_interface", L=eps * L2, eps=eps,
                                 mu1_tilde=mu1, c0=c0)
    for lam in out.eigenvalues:
        lam1 = lam / eps
        resid = lam1**2 * rep.N2ll - lam1 * (mu1 + c0 * rep.N2cl) - rep.norm_qsq * L2**2
        assert abs(resid) <= 1e-10


def test_stripe_positive_root_in_window():
    rep = synthetic_report(M2=1.0, M2cc=1.0, N2ll=1.0)
    eps = 1e-2
    window = 2 * rep.N_c(0.09) / rep.norm_qsq
    for L2 in (0.2, 0.5 * np.sqrt(window), 0.95 * np.sqrt(window)):
        out = transverse_eigenvalues(rep, "stripe", L=eps * L2, eps=eps, c0=0.3)
        pos = [z for z in out.eigenvalues if abs(z.imag) < 1e-12 * abs(z.real + 1e-300)
               and z.real > 0]
        assert pos, f"no positive real root at L2 = {L2}"


def test_stripe_c0_zero_factorization():
    rep = synthetic_report(M2=0.7, M2cc=1.1, N2ll=0.9)
    eps, L2 = 1e-2, 0.4
    out = transverse_eigenvalues(rep, "stripe", L=eps * L2, eps=eps, c0=0.0)
    f1, f2 = out.factorization_check
    roots_sq = sorted(np.round([float((z / eps).real**2 - (z / eps).imag**2)
                                for z in out.eigenvalues], 10))
    assert sorted([f1, f2]) == pytest.approx(sorted(set(roots_sq)), rel=1e-9)


def test_stripe_reduces_to_1d_quartic_at_L2_zero():
    rep = synthetic_report(M2=1.0, M2cc=1.0, N2ll=1.0)
    eps, c0 = 1e-2, 0.4
    out = transverse_eigenvalues(rep, "stripe", L=0.0, eps=eps, c0=c0)
    # 1D quartic: N2ll^2 l^4 - [c0^2 N2cl^2 - 2 Nc N2ll] l^2 = 0
    N_c = rep.N_c(c0**2)
    lam_sq = (c0**2 * rep.N2cl**2 - 2 * N_c * rep.N2ll) / rep.N2ll**2
    got = sorted(set(np.round([complex(z / eps) ** 2 for z in out.eigenvalues], 12)),
                 key=lambda z: abs(z))
    assert abs(got[0]) <= 1e-12
    assert got[-1] == pytest.approx(lam_sq, rel=1e-12)


# -- classification -----------------------------------------------------------

def test_classify_vertical_standing_front_stable(vertical_family):
    eng = cached_engine(sinewell(0.0, 0.3, 1.0))
    rep = synthetic_report(M_star=eng.m_star, norm_qsq=eng.norm_qsq)
    o1 = o1_eigenvalues(vertical_family)
    v = classify("standing_front", rep=rep, fam=vertical_family, o1=o1)
    assert v.verdict == "stable"
    assert any("M*" in c.name for c in v.conditions)


def test_classify_regular_pulse_unstable(uneq_profile):
    fam = eigencurves(uneq_profile, rho_max=8.0, n_rho=17)
    o1 = o1_eigenvalues(fam)
    v = classify("regular_pulse", o1=o1)
    assert v.verdict == "unstable"
    assert v.details["n_unstable_O1"] >= 1


def test_classify_standing_pulse_n2ll_negative_unstable():
    rep = synthetic_report(M2=1.0, N2ll=-1.0, G1c_plus=-1.0)
    v = classify("standing_pulse_near_root", rep=rep, mu2_tilde=-1.0)
    assert v.verdict == "unstable"


def test_classify_standing_pulse_stable_branch():
    rep = synthetic_report(M2=1.0, N2ll=1.0, G1c_plus=-1.0)
    v = classify("standing_pulse_near_root", rep=rep, mu2_tilde=-1.0)
    assert v.verdict == "stable"
    v2 = classify("standing_pulse_near_root", rep=rep, mu2_tilde=+1.0)
    assert v2.verdict != "stable"


def test_classify_interfaces_and_stripe():
    rep_pos = synthetic_report(M_star=0.9)
    assert classify("stationary_interface", rep=rep_pos).verdict == "stable"
    rep_neg = synthetic_report(M_star=0.9, N2ll=1.0)
    assert classify("traveling_interface", rep=rep_neg).verdict == "unstable"
    rep_neg2 = synthetic_report(M_star=0.9, N2ll=-1.0)
    assert classify("traveling_interface", rep=rep_neg2).verdict == "stable"
    assert classify("stripe", rep=rep_pos).verdict == "unstable"


def test_classify_cites_conditions():
    rep = synthetic_report(M_star=-0.4)
    v = classify("standing_front", rep=rep)
    assert v.verdict == "unstable"
    d = v.to_dict()
    assert d["conditions"] and all("citation" in c for c in d["conditions"])
