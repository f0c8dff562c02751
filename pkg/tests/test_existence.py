"""Front/pulse speed branches, bifurcation classification, pulse geometry, assembly."""
from __future__ import annotations

import numpy as np
import pytest

from slowpatterns.errors import RegimeError, SolverError
from slowpatterns.existence import (
    assemble_pattern,
    front_speeds,
    pulse_case_label,
    pulse_diagram_rows,
    pulse_geometry,
    pulse_speeds,
)
from slowpatterns.melnikov import MelnikovReport

from conftest import cached_engine, sinewell

S2 = np.sqrt(2.0)


def synthetic_report(M2=1.0, M2cc=1.0, G1c_plus=-1.0, N2ll=1.0, alpha_plus=2.0,
                     M_star=0.0, norm_qsq=2 * S2 / 3, N2cl=None) -> MelnikovReport:
    sa = np.sqrt(alpha_plus)
    return MelnikovReport(
        model_name="synthetic", params={}, tau=1.0, M_star=M_star, norm_qsq=norm_qsq,
        M2cc=M2cc, M2=M2, N1c=0.0, N2ll=N2ll,
        N2cl=2 * M2cc if N2cl is None else N2cl, N2cc=-sa * M2cc, N2=-sa * M2,
        G1c_plus=G1c_plus, V_minus=-1.0, V_center=0.0, V_plus=1.0, W0_center=0.25,
        alpha_minus=alpha_plus, alpha_plus=alpha_plus, beta_minus=2.0, beta_plus=2.0,
        gamma_plus=-6.0, grad_M_star={"mu3": 1.0})


def test_front_transcritical():
    rep = synthetic_report(M2=0.0, M2cc=4.0)
    fb = front_speeds(rep, 1.5)
    assert fb.classification == "transcritical"
    assert sorted(np.round(fb.speeds, 12)) == sorted([0.0, -1.5 / 4.0])


def test_front_double_root_at_sn():
    rep = synthetic_report(M2=1.0, M2cc=4.0)
    fb = front_speeds(rep, 4.0)
    assert fb.classification == "saddle-node"
    assert fb.speeds[0] == pytest.approx(-0.5, abs=1e-12)
    assert fb.speeds[1] == pytest.approx(-0.5, abs=1e-12)
    assert fb.mu_sn_plus == pytest.approx(4.0, rel=1e-14)
    assert fb.c_at_sn_plus == pytest.approx(-0.5, rel=1e-14)
    # no real roots inside the gap
    inside = front_speeds(rep, 3.0)
    assert inside.speeds == ()


def test_front_no_bifurcation_limit():
    rep = synthetic_report(M2=1.0, M2cc=-1.0)
    fb = front_speeds(rep, 1e-9)
    assert fb.classification == "no-bifurcation"
    cs = sorted(fb.speeds)
    assert cs[0] == pytest.approx(-1.0, abs=1e-6)
    assert cs[1] == pytest.approx(+1.0, abs=1e-6)


def test_front_residual_invariant():
    rep = synthetic_report(M2=0.37, M2cc=1.9)
    for mu1 in (2.1, 3.0, -2.5):
        fb = front_speeds(rep, mu1)
        for r in fb.residuals:
            assert r <= 1e-12


def test_front_degenerate_m2cc_rejected():
    rep = synthetic_report(M2=1.0, M2cc=0.0)
    with pytest.raises(RegimeError):
        front_speeds(rep, 1.0)


def test_pulse_case_i_worked_example():
    rep = synthetic_report(M2=1.0, M2cc=1.0, G1c_plus=-1.0, alpha_plus=2.0)
    pb = pulse_speeds(rep, -S2)
    assert pb.case_label == "(i)"
    assert pb.C_hom == pytest.approx(3.0, rel=1e-12)
    assert sorted(pb.traveling_speeds) == pytest.approx([-np.sqrt(3), np.sqrt(3)])
    assert pb.existence_value == pytest.approx(4.0, rel=1e-12)
    assert pb.stationary_exists


def test_pulse_tw_collapse():
    rep = synthetic_report(M2=1.0, M2cc=1.0, G1c_plus=-1.0)
    pb = pulse_speeds(rep, rep.G1c_plus * rep.M2 / (2 * np.sqrt(2.0)))
    assert pb.C_hom == pytest.approx(0.0, abs=1e-14)
    assert pb.traveling_speeds == ()


def test_pulse_heteroclinic_split_speed():
    rep = synthetic_report(M2=1.0, M2cc=-1.0, G1c_plus=-1.0)
    pb = pulse_speeds(rep, -1e-8)
    assert pb.case_label == "(ii)"
    assert pb.c0_het_cycle == pytest.approx(1.0, rel=1e-12)
    if pb.traveling_speeds:
        assert abs(pb.traveling_speeds[0]) == pytest.approx(pb.c0_het_cycle, abs=1e-3)


def test_pulse_case_iv_no_traveling():
    rep = synthetic_report(M2=-1.0, M2cc=-1.0)
    for mu2 in (-2.0, 0.0, 2.0):
        pb = pulse_speeds(rep, mu2)
        assert pb.case_label == "(iv)"
        assert pb.traveling_speeds == ()
        assert not pb.stationary_exists


def test_speed_pairing_symmetry():
    rep = synthetic_report(M2=0.8, M2cc=1.3, G1c_plus=-0.7)
    for mu2 in (-2.0, -1.0, -0.5):
        pb = pulse_speeds(rep, mu2)
        if pb.traveling_speeds:
            assert pb.traveling_speeds[0] == -pb.traveling_speeds[1]


def test_case_label_sign_table():
    assert pulse_case_label(+1.0, +1.0) == "(i)"
    assert pulse_case_label(+1.0, -1.0) == "(ii)"
    assert pulse_case_label(-1.0, +1.0) == "(iii)"
    assert pulse_case_label(-1.0, -1.0) == "(iv)"


def test_c_hom_slope_at_tw():
    """dC_hom/dmu2 = 2 sqrt(a+)/(G1c+ M2cc) by finite differences."""
    rep = synthetic_report(M2=0.9, M2cc=1.7, G1c_plus=-0.8, alpha_plus=2.0)
    mu_tw = rep.G1c_plus * rep.M2 / (2 * np.sqrt(2.0))
    d = 1e-6
    slope = (pulse_speeds(rep, mu_tw + d).C_hom - pulse_speeds(rep, mu_tw - d).C_hom) / (2 * d)
    assert slope == pytest.approx(2 * np.sqrt(2.0) / (rep.G1c_plus * rep.M2cc), rel=1e-7)


def test_pulse_geometry_worked_example():
    rep = synthetic_report(M2=1.0, M2cc=0.0001)
    rep = synthetic_report(M2=1.0, M2cc=1.0)
    # eps = 1e-3, alpha+ = 2, beta+ = 2, M2 + c0^2 M2cc = 1 at c0 = 0
    geo = pulse_geometry(rep, 0.0, 1e-3, 0.0)
    expected = (abs(np.log(1e-3)) + np.log(2 * 2 / 1.0)) / S2
    assert geo.X_h == pytest.approx(expected, rel=1e-12)
    assert geo.Y0 == pytest.approx(2.0, rel=1e-12)
    # reversible case: the gap vanishes identically at c0 = 0
    assert geo.gap_W_h == 0.0


def test_gap_zero_hyperplane():
    rep = synthetic_report(M2=0.7, M2cc=1.1, G1c_plus=-0.9)
    c0 = 0.4
    D = rep.M2 + c0**2 * rep.M2cc
    mu2_zero = rep.G1c_plus * D / (2 * np.sqrt(2.0))
    geo = pulse_geometry(rep, c0, 1e-2, mu2_zero)
    assert abs(geo.gap_W_h) <= 1e-15
    assert geo.mu2_gap_zero == pytest.approx(mu2_zero, rel=1e-12)
    geo2 = pulse_geometry(rep, c0, 1e-2, mu2_zero + 0.3)
    assert geo2.gap_W_h != 0.0


def test_pulse_geometry_existence_guard():
    rep = synthetic_report(M2=-1.0, M2cc=0.5)
    with pytest.raises(RegimeError):
        pulse_geometry(rep, 0.1, 1e-2, 0.0)


def test_assemble_front_eps_zero_is_reduced_orbit(root_engine):
    pat = assemble_pattern(root_engine, "front", 0.3, 0.0, order=1)
    pr = root_engine.profile
    assert np.max(np.abs(pat.V - pr.v)) == 0.0
    u_exact = pr.potential.branch.f_at(pr.v)
    assert np.max(np.abs(pat.U - u_exact)) <= 1e-12


def test_assemble_vertical_u_constant():
    eng = cached_engine(sinewell(0.0, 0.3, 0.7))
    for eps in (0.0, 1e-2):
        pat = assemble_pattern(eng, "front", 0.0, eps, order=2)
        assert np.max(np.abs(pat.U - np.sin(0.3))) <= 1e-10


def test_assemble_pulse_maximum(root_engine, root_report):
    """Pulse maximum: V_plus - max V ~ eps sqrt(2(M2 + c0^2 M2cc)/alpha+)."""
    rep = root_report
    eps = 1e-2
    pat = assemble_pattern(root_engine, "pulse", 0.0, eps, order=0, rep=rep)
    drop = rep.V_plus - np.max(pat.V)
    pred = eps * np.sqrt(2 * rep.M2 / rep.alpha_plus)
    assert drop == pytest.approx(pred, abs=3 * eps**2 * abs(np.log(eps)))
    assert pat.boundary_error <= 1e-6


def test_assemble_traveling_pulse_glues(root_engine, root_report):
    rep = root_report
    pb = pulse_speeds(rep, -0.6 if rep.G1c_plus < 0 else 0.6)
    if not pb.traveling_speeds:
        pytest.skip("no traveling pulse at this synthetic offset")
    c0 = pb.traveling_speeds[0]
    pat = assemble_pattern(root_engine, "pulse", c0, 1e-2, order=1, rep=rep,
                           mu2_tilde=pb.mu2_tilde)
    assert pat.kind == "pulse"
    k0 = len(pat.X) // 2
    assert pat.V[k0] == np.max(pat.V)


def test_unknown_kind_rejected(root_engine):
    with pytest.raises(SolverError):
        assemble_pattern(root_engine, "wave", 0.0, 1e-2)


def test_diagram_rows_structure(root_report):
    rows = pulse_diagram_rows(root_report, np.linspace(-1.0, 1.0, 5))
    assert all(len(r) == 5 for r in rows)
    stationary = [r for r in rows if r[1] == 0]
    assert len(stationary) == 5 if root_report.M2 > 0 else 0
