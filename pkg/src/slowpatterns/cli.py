"""Command-line front end: model loading, pipeline orchestration, machine-readable
outputs.  Subcommands: manifold, potential, profile, melnikov, exist, spectrum,
analyze, verify, sweep.  Exit codes: 0 success, 1 analysis failure, 2 config error.
"""
from __future__ import annotations

import argparse
import json
import sys
import traceback
from pathlib import Path

import numpy as np

from . import __version__
from . import existence as ex
from . import melnikov as mk
from . import spectral as sp
from . import verify as vf
from .config import RunConfig, load_config, write_csv, write_json
from .errors import ClassificationError, ConfigError, SlowPatternsError, WellBalanceError
from .manifold import check_normal_hyperbolicity, find_branches
from .model import ModelInstance
from .reduced_flow import build_potential, heteroclinic_profile, homoclinic_profile, \
    tail_constants


def _fail_json(cfg: RunConfig | None, out: Path, exc: Exception, code: int) -> int:
    payload = {"error": type(exc).__name__, "message": str(exc)}
    try:
        out.mkdir(parents=True, exist_ok=True)
        write_json(out / "error.json", payload, cfg)
    except Exception:
        print(json.dumps(payload), file=sys.stderr)
    return code


def _branches(cfg: RunConfig):
    return find_branches(cfg.model, cfg.v_range, cfg.u_window, n_v=cfg.n_v)


def _pipeline_engine(cfg: RunConfig) -> mk.CoefficientEngine:
    num = mk.Numerics(n_v=cfg.n_v, n_half=cfg.n_half, X_max=cfg.x_max)
    return mk.engine_for(cfg.model, num, v_range=cfg.v_range, u_window=cfg.u_window)


def cmd_manifold(cfg: RunConfig, out: Path) -> int:
    branches = _branches(cfg)
    summary = []
    for b in branches:
        name = f"branch_{b.branch_index}.csv"
        write_csv(out / name, ["v", "f", "f_prime", "F_u"], b.to_rows())
        entry = {"index": b.branch_index, "file": name,
                 "normally_hyperbolic": b.is_normally_hyperbolic,
                 "v_lo": float(b.v_grid[0]), "v_hi": float(b.v_grid[-1]),
                 "folds": b.fold_markers}
        try:
            entry["kappa"] = check_normal_hyperbolicity(b, (float(b.v_grid[0]),
                                                            float(b.v_grid[-1])))
        except SlowPatternsError as exc:
            entry["kappa"] = None
            entry["hyperbolicity_failure"] = str(exc)
        summary.append(entry)
    write_json(out / "manifold.json", {"branches": summary}, cfg)
    return 0


def _hyperbolic_potential(cfg: RunConfig):
    num = mk.Numerics(n_v=cfg.n_v, n_half=cfg.n_half, X_max=cfg.x_max)
    b = mk.hyperbolic_branch(cfg.model, num, cfg.v_range, cfg.u_window)
    return b, build_potential(b)


def cmd_potential(cfg: RunConfig, out: Path) -> int:
    b, pot = _hyperbolic_potential(cfg)
    vs = np.linspace(b.v_grid[0], b.v_grid[-1], 801)
    write_csv(out / "potential.csv", ["v", "W0"], np.column_stack([vs, pot.W0(vs)]))
    payload = {
        "classification": pot.classification,
        "is_double_well": pot.is_double_well,
        "critical_points": [{"v": p.v, "kind": p.kind, "g_prime": p.g_prime}
                            for p in pot.critical_points],
    }
    if pot.is_double_well:
        payload.update({"V_minus": pot.V_minus, "V_center": pot.V_center,
                        "V_plus": pot.V_plus, "H0_plus": pot.H0_plus,
                        "H0_center": pot.H0_center, "W0_center": pot.W0_center})
    write_json(out / "potential.json", payload, cfg)
    return 0


def cmd_profile(cfg: RunConfig, out: Path) -> int:
    b, pot = _hyperbolic_potential(cfg)
    pot.require_double_well()
    W_scale = float(np.max(np.abs(pot.W0(np.linspace(pot.V_minus, pot.V_plus, 200)))))
    if abs(pot.H0_plus) <= 1e-10 * W_scale:
        pr = heteroclinic_profile(pot, X_max=cfg.x_max, n_half=cfg.n_half)
    else:
        pr = homoclinic_profile(pot, X_max=cfg.x_max, n_half=cfg.n_half)
    write_csv(out / "profile.csv", ["X", "v", "q"], pr.to_rows())
    tc = tail_constants(pr)
    write_json(out / "profile.json", {
        "kind": pr.kind,
        "residual_max": pr.residual_max,
        "hamiltonian_drift": pr.hamiltonian_drift,
        "v0_max": pr.v0_max,
        "tail_constants": {
            "alpha_minus": tc.alpha_minus, "alpha_plus": tc.alpha_plus,
            "beta_minus": tc.beta_minus, "beta_plus": tc.beta_plus,
            "gamma_plus": tc.gamma_plus,
            "fit_residual_one_term": tc.fit_residual_one_term,
            "fit_residual_two_term": tc.fit_residual_two_term,
        },
    }, cfg)
    return 0


def _rooted_model(cfg: RunConfig) -> ModelInstance:
    if cfg.mu_path is None:
        return cfg.model
    num = mk.Numerics(n_v=cfg.n_v, n_half=cfg.n_half, X_max=cfg.x_max)
    return mk.find_mu_t_star(cfg.model, cfg.mu_path, num)


def cmd_melnikov(cfg: RunConfig, out: Path) -> int:
    model = _rooted_model(cfg)
    num = mk.Numerics(n_v=cfg.n_v, n_half=cfg.n_half, X_max=cfg.x_max)
    rep = mk.full_report(model, num)
    write_json(out / "melnikov.json", rep.to_dict(), cfg)
    return 0


def _report_for(cfg: RunConfig):
    model = _rooted_model(cfg)
    num = mk.Numerics(n_v=cfg.n_v, n_half=cfg.n_half, X_max=cfg.x_max)
    return model, mk.full_report(model, num)


def cmd_exist(cfg: RunConfig, out: Path, rep=None) -> int:
    if rep is None:
        _, rep = _report_for(cfg)
    lo, hi, n = cfg.mu1_range
    mu1s = np.linspace(lo, hi, int(n))
    rows = ex.front_diagram_rows(rep, mu1s, stability_tag=_front_tag(rep, cfg))
    write_csv(out / "front_diagram.csv",
              ["mu1_tilde", "branch_id", "c0", "case_label", "stability_tag"], rows)
    lo, hi, n = cfg.mu2_range
    mu2s = np.linspace(lo, hi, int(n))
    rows = ex.pulse_diagram_rows(rep, mu2s, stability_tag=_pulse_tag(rep, cfg))
    write_csv(out / "pulse_diagram.csv",
              ["mu2_tilde", "branch_id", "c0", "case_label", "stability_tag"], rows)
    fb = ex.front_speeds(rep, 1.0)
    pb = ex.pulse_speeds(rep, 0.0)
    crit = {
        "front_classification": fb.classification,
        "mu_het_SN_plus": fb.mu_sn_plus,
        "mu_het_SN_minus": fb.mu_sn_minus,
        "pulse_case": pb.case_label,
        "mu_hom_TW": pb.mu_hom_TW,
        "c0_het_cycle": pb.c0_het_cycle,
    }
    sm = sp.small_eigenvalues(rep, "traveling_pulse", eps=min(cfg.epsilons),
                              mu2_tilde=pb.mu_hom_TW * 0.5, mu_N=cfg.mu_N, c0=0.1) \
        if rep.M2 > 0 else None
    if sm is not None:
        crit["c0_merge"] = sm.thresholds.get("c0_merge")
        crit["mu2_merge"] = sm.thresholds.get("mu2_merge")
    write_json(out / "exist_summary.json", crit, cfg)
    return 0


def _front_tag(rep, cfg):
    def tag(c0, mu1):
        lam2 = (mu1 + c0 * rep.N2cl) / rep.N2ll
        return "stable" if lam2 < 0 else "unstable"
    return tag


def _pulse_tag(rep, cfg):
    def tag(c0, mu2):
        try:
            kind = "standing_pulse" if c0 == 0.0 else "traveling_pulse"
            sm = sp.small_eigenvalues(rep, kind, eps=min(cfg.epsilons), mu2_tilde=mu2,
                                      mu_N=cfg.mu_N, c0=c0)
        except SlowPatternsError:
            return "nonexistent"
        if kind == "standing_pulse":
            lam = sm.eigenvalues["mode_12"]
            pair = sm.eigenvalues["pair_plus"]
            bad = (np.real(pair) > 0) or (np.real(lam) > 0)
            return "unstable" if bad else "stable"
        if sm.regime.get("character") == "real":
            return "unstable"
        pair = sm.eigenvalues["pair_plus"]
        sgn = sm.regime.get("mode_12_sign")
        if np.real(pair) > 0 or (sgn is not None and sgn > 0):
            return "unstable"
        if sgn is None:
            return "sign-from-direct-numerics"
        return "stable"
    return tag


def cmd_spectrum(cfg: RunConfig, out: Path) -> int:
    model = _rooted_model(cfg)
    num = mk.Numerics(n_v=cfg.n_v, n_half=cfg.n_half, X_max=cfg.x_max)
    eng = mk.engine_for(model, num)
    fam = sp.eigencurves(eng.profile, rho_max=cfg.rho_max, n_rho=cfg.n_rho)
    rows = []
    slopes = fam.lambda_prime
    for j in range(fam.n_curves):
        par = fam.parities[j] if j < len(fam.parities) else "none"
        for k, rho in enumerate(fam.rho_grid):
            lam = fam.curves[j, k]
            if np.isnan(lam):
                continue
            rows.append((float(rho), j, float(lam),
                         float(slopes[j, k]) if not np.isnan(slopes[j, k]) else "",
                         par))
    write_csv(out / "eigencurves.csv", ["rho", "j", "lambda", "lambda_prime", "parity"],
              rows)
    o1 = sp.o1_eigenvalues(fam)
    write_json(out / "o1_spectrum.json", {
        "intersections": o1.intersections,
        "n_unstable": o1.n_unstable,
        "tangency_warnings": o1.tangency_warnings,
        "rho_max": o1.rho_max,
        "rho_max_sufficient": o1.rho_max_sufficient,
        "cor31_i_holds": o1.cor31_i_holds,
        "cor31_ii_holds": o1.cor31_ii_holds,
        "scanned_window_note": "branches reappearing from the essential spectrum beyond "
                               "rho_max are outside the scanned window",
    }, cfg)
    return 0


def cmd_analyze(cfg: RunConfig, out: Path) -> int:
    model = _rooted_model(cfg)
    num = mk.Numerics(n_v=cfg.n_v, n_half=cfg.n_half, X_max=cfg.x_max)
    rep = mk.full_report(model, num)
    write_json(out / "melnikov.json", rep.to_dict(), cfg)
    cfg2 = cfg
    cmd_exist(cfg2, out, rep=rep)

    eng = mk.engine_for(model, num)
    fam = sp.eigencurves(eng.profile, rho_max=cfg.rho_max, n_rho=cfg.n_rho)
    o1 = sp.o1_eigenvalues(fam)
    states = sp.background_states_of(eng.profile)
    ess_states = [sp.background_stability(model, s).states[0] for s in states]
    ess = sp.EssentialSpectrumReport(tau=model.params.tau, states=tuple(ess_states))
    eps = min(cfg.epsilons)
    verdicts = {}
    verdicts["standing_front"] = sp.classify("standing_front", rep=rep, ess=ess,
                                             fam=fam, o1=o1).to_dict()
    try:
        sm = sp.small_eigenvalues(rep, "standing_pulse", eps=eps, mu2_tilde=-1.0,
                                  mu_N=cfg.mu_N)
        verdicts["standing_pulse_near_root"] = sp.classify(
            "standing_pulse_near_root", rep=rep, ess=ess, fam=fam, small=sm,
            mu2_tilde=-1.0).to_dict()
    except SlowPatternsError as exc:
        verdicts["standing_pulse_near_root"] = {"kind": "standing_pulse_near_root",
                                                "verdict": "inconclusive",
                                                "reason": str(exc)}
    verdicts["stationary_interface"] = sp.classify("stationary_interface", rep=rep,
                                                   ess=ess).to_dict()
    verdicts["traveling_interface"] = sp.classify("traveling_interface", rep=rep,
                                                  ess=ess).to_dict()
    verdicts["stripe"] = sp.classify("stripe", rep=rep, ess=ess).to_dict()
    write_json(out / "verdicts.json", verdicts, cfg)
    write_json(out / "essential.json", {
        "states": [{"U": s.U, "V": s.V, "saddle": s.is_saddle, "stable": s.is_stable,
                    "sigma_ess_at_zero": s.sigma_ess_at_zero,
                    "sigma_ess_at_infinity": s.sigma_ess_at_infinity}
                   for s in ess_states],
    }, cfg)
    return 0


def cmd_verify(cfg: RunConfig, out: Path) -> int:
    model = _rooted_model(cfg)
    num = mk.Numerics(n_v=cfg.n_v, n_half=cfg.n_half, X_max=cfg.x_max)
    rep = mk.full_report(model, num)
    eng = mk.engine_for(model, num)
    eps_list = sorted(cfg.epsilons, reverse=True)
    reports = []
    failures = []
    # translational eigenvalue check on the stationary front
    preds, obs = [], []
    for eps in eps_list:
        try:
            pat = ex.assemble_pattern(eng, "front", 0.0, eps, order=0)
            sol = vf.solve_steady_bvp(model, eps, "front", pat, c="free", h0=0.01)
            er = vf.discrete_spectrum(model, sol, mode="near", k=4)
            obs.append(float(er.translational_error()))
            preds.append(0.0)
        except SlowPatternsError as exc:
            failures.append({"check": "translational", "eps": eps, "error": str(exc)})
    if len(obs) >= 3:
        rep_t = vf.compare("translational_eigenvalue", eps_list[: len(obs)], preds, obs,
                           expected_order=0.0)
        reports.append(rep_t.to_dict())
    # stationary-pulse second small eigenvalue, when the pulse exists
    if rep.M2 > 0 and abs(rep.M_star) > 1e-8:
        target = 2 * np.sqrt(rep.alpha_plus) * rep.M2 / rep.M_star
        preds, obs, used = [], [], []
        for eps in eps_list:
            try:
                pat = ex.assemble_pattern(eng, "pulse", 0.0, eps, order=0, rep=rep)
                sol = vf.solve_steady_bvp(model, eps, "pulse", pat, c=0.0, h0=0.005)
                er = vf.discrete_spectrum(model, sol, mode="near", k=6)
                lam = sorted(er.eigenvalues, key=lambda z: abs(z - eps**2 * target))[0]
                obs.append(float(np.real(lam)) / eps**2)
                preds.append(float(target))
                used.append(eps)
            except SlowPatternsError as exc:
                failures.append({"check": "pulse_lambda2", "eps": eps, "error": str(exc)})
        if len(obs) >= 3:
            reports.append(vf.compare("stationary_pulse_lambda2_over_eps2", used, preds,
                                      obs, expected_order=0.5).to_dict())
    ok = all(r["passed"] for r in reports) and len(reports) > 0
    write_json(out / "verify_report.json", {
        "reports": reports, "failures": failures, "passed": ok,
    }, cfg)
    return 0 if ok else 1


def cmd_sweep(cfg: RunConfig, out: Path, sweep_spec: str) -> int:
    """Sweep one named parameter: 'name, lo, hi, n'; runs analyze per cell."""
    parts = [p.strip() for p in sweep_spec.split(",")]
    if len(parts) != 4:
        raise ConfigError("sweep spec must be 'name, lo, hi, n'")
    name, lo, hi, n = parts[0], float(parts[1]), float(parts[2]), int(parts[3])
    values = np.linspace(lo, hi, n)
    results = []
    for k, val in enumerate(values):
        cell_dir = out / f"cell_{k:03d}"
        try:
            params = cfg.model.params.with_updates(**{name: float(val)}) \
                if name != "tau" else cfg.model.params.with_updates(tau=float(val))
            model = ModelInstance(cfg.model.F_expr, cfg.model.G_expr, params,
                                  name=cfg.model.name)
            cell_cfg = RunConfig(**{**cfg.__dict__, "model": model})
            cmd_analyze(cell_cfg, cell_dir)
            results.append({"cell": k, name: float(val), "status": "ok"})
        except SlowPatternsError as exc:
            results.append({"cell": k, name: float(val), "status": "failed",
                            "error": str(exc)})
    write_json(out / "sweep.json", {"parameter": name, "cells": results}, cfg)
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="slowpatterns",
        description="Slow localized patterns in singularly perturbed two-component "
                    "reaction-diffusion systems: existence, stability, verification.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("manifold", "slow-manifold branches and hyperbolicity"),
        ("potential", "reduced-flow potential and classification"),
        ("profile", "heteroclinic/homoclinic profile"),
        ("melnikov", "the full coefficient table at the M* root"),
        ("exist", "front/pulse bifurcation diagrams"),
        ("spectrum", "eigencurve family and O(1) eigenvalue count"),
        ("analyze", "full pipeline: coefficients, diagrams, verdicts"),
        ("verify", "direct-numerics cross-validation at finite eps"),
        ("sweep", "run analyze over a parameter grid"),
    ]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("config", help="run-configuration file")
        p.add_argument("--out", help="output directory (overrides [output] dir)")
        if name == "sweep":
            p.add_argument("--over", required=True,
                           help="sweep spec: 'name, lo, hi, n'")
    args = parser.parse_args(argv)

    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    out = Path(args.out) if args.out else cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)

    handlers = {
        "manifold": cmd_manifold,
        "potential": cmd_potential,
        "profile": cmd_profile,
        "melnikov": cmd_melnikov,
        "exist": cmd_exist,
        "spectrum": cmd_spectrum,
        "analyze": cmd_analyze,
        "verify": cmd_verify,
    }
    try:
        if args.command == "sweep":
            return cmd_sweep(cfg, out, args.over)
        return handlers[args.command](cfg, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ClassificationError, WellBalanceError) as exc:
        return _fail_json(cfg, out, exc, 1)
    except SlowPatternsError as exc:
        return _fail_json(cfg, out, exc, 1)
    except Exception as exc:  # pragma: no cover - unexpected
        traceback.print_exc()
        return _fail_json(cfg, out, exc, 1)


if __name__ == "__main__":
    sys.exit(main())
