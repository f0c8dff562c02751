"""Shared fixtures: model fleet at the traveling-bifurcation roots, profiles, engines.

Root locations of M* along mu3 were precomputed with the toolkit itself (tight
brentq on the same pipeline); every test that uses them re-verifies |M*| at the
root, so the frozen values act as verified data, not as assumptions.
"""
from __future__ import annotations

import numpy as np
import pytest

from slowpatterns.manifold import find_branches
from slowpatterns.melnikov import CoefficientEngine, Numerics, engine_for
from slowpatterns.model import ModelInstance, ParameterVector, builtin
from slowpatterns.reduced_flow import build_potential, heteroclinic_profile, homoclinic_profile

# (mu1, mu2, tau) -> mu3 root of M* (verified in-test to |M*| <= 1e-10)
FLEET_ROOTS = {
    (1.0, 0.4, 1.0): -1.2016570827118855,
    (1.3, 0.2, 1.0): -0.9333904208115218,
    (0.8, -0.3, 2.0): -0.6978748628560831,
    (1.1, 0.7, 1.5): -0.8962646522934945,
    (0.9, 0.1, 0.7): -1.7315280318507809,
}

EXT_F = "-(U - sin(mu1*V + mu2)) + mu6*(U - sin(mu1*V + mu2))^2"
EXT_G = ("V - V^3 + (mu3 + mu5*(U - sin(mu1*V + mu2)))"
         "*(U - sin(mu1*V + mu2))*(1 + mu7*V)")
EXT_PARAMS = {"mu1": 0.9, "mu2": 0.35, "mu3": -1.0919156992937555,
              "mu5": 0.4, "mu6": 0.5, "mu7": 0.3}
EXT_TAU = 1.2

UNEQ_G = "V - V^3 - delta*(V+1)^2*(V-1) + mu3*(U - sin(mu1*V + mu2))"

NUM = Numerics(n_half=2048)


def sinewell(mu1, mu2, mu3, tau=1.0) -> ModelInstance:
    return builtin("SINEWELL", ParameterVector({"mu1": mu1, "mu2": mu2, "mu3": mu3},
                                               tau=tau))


def sinewell_at_root(key=(1.0, 0.4, 1.0)) -> ModelInstance:
    mu1, mu2, tau = key
    return sinewell(mu1, mu2, FLEET_ROOTS[key], tau=tau)


def unequal_well_model(delta=0.12, mu3=-0.8) -> ModelInstance:
    pv = ParameterVector({"mu1": 1.0, "mu2": 0.4, "mu3": mu3, "delta": delta}, tau=1.0)
    return ModelInstance("-(U - sin(mu1*V + mu2))", UNEQ_G, pv, name="sinewell_uneq")


_engine_cache: dict = {}


def cached_engine(model: ModelInstance, n_half: int = 2048) -> CoefficientEngine:
    key = (model.name, tuple(sorted(model.params.values.items())), model.params.tau, n_half)
    if key not in _engine_cache:
        _engine_cache[key] = engine_for(model, Numerics(n_half=n_half))
    return _engine_cache[key]


@pytest.fixture(scope="session")
def root_engine():
    """Coefficient engine for the reference fleet point at its M* root."""
    return cached_engine(sinewell_at_root())


@pytest.fixture(scope="session")
def root_spectral(root_engine):
    sc = root_engine.spectral_coeffs()
    M2cc, M2 = root_engine.second_order_coeffs()
    return {"sc": sc, "M2cc": M2cc, "M2": M2}


@pytest.fixture(scope="session")
def root_report():
    from slowpatterns.melnikov import full_report

    return full_report(sinewell_at_root(), NUM, wrt=["mu3"])


@pytest.fixture(scope="session")
def vertical_engine():
    """Vertical SINEWELL (f' = 0): the Poschl-Teller reference case."""
    return cached_engine(sinewell(0.0, 0.3, 1.0))


@pytest.fixture(scope="session")
def offroot_engine():
    """SINEWELL with M* = O(1) > 0 and M2 > 0 (stationary-pulse regime)."""
    return cached_engine(sinewell(1.0, 0.4, -0.6))


@pytest.fixture(scope="session")
def uneq_potential():
    m = unequal_well_model()
    b = find_branches(m, (-1.6, 1.6), (-2.0, 2.0))[0]
    return build_potential(b)


@pytest.fixture(scope="session")
def uneq_profile(uneq_potential):
    return homoclinic_profile(uneq_potential, n_half=2048)


@pytest.fixture(scope="session")
def short_pair():
    """Heteroclinic profile + fundamental pair on the residual-suite grid."""
    from slowpatterns.linear_ops import fundamental_pair

    m = sinewell(1.0, 0.4, -1.2)
    b = find_branches(m, (-1.6, 1.6), (-2.0, 2.0))[0]
    pr = heteroclinic_profile(build_potential(b), X_max=6.0, n_half=1536)
    return pr, fundamental_pair(pr)


@pytest.fixture(scope="session")
def default_pair():
    """Fundamental pair on the production-resolution grid."""
    from slowpatterns.linear_ops import fundamental_pair

    eng = cached_engine(sinewell(1.0, 0.4, -1.2), n_half=4096)
    return eng.profile, eng.fp


def acceptance_line(number: int, passed: bool, detail: str) -> None:
    status = "PASS" if passed else "FAIL"
    print(f"[acceptance {number:2d}] {status}: {detail}")
