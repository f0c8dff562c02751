"""Builtin models, parameter vectors, and partial-derivative consistency."""
from __future__ import annotations

import numpy as np
import pytest

from slowpatterns.errors import EvaluationDomainError, ModelError
from slowpatterns.model import (
    ModelInstance,
    ParameterVector,
    builtin,
    builtin_names,
    evaluate_partials,
)


def test_parameter_vector_invariants():
    with pytest.raises(ModelError):
        ParameterVector({"mu1": 1.0}, tau=0.0)
    with pytest.raises(ModelError):
        ParameterVector({}, tau=1.0)
    pv = ParameterVector({"mu1": 1.0, "mu2": 2.0})
    assert pv.tau == 1.0
    assert pv.with_updates(mu2=5.0)["mu2"] == 5.0


def test_builtin_names_and_errors():
    assert set(builtin_names()) == {"SINEWELL", "GRAY_SCOTT", "DRYLAND", "SAVANNA",
                                    "CHAMPNEYS"}
    with pytest.raises(ModelError):
        builtin("NOPE", ParameterVector({"mu1": 1.0}))
    with pytest.raises(ModelError):
        builtin("SINEWELL", ParameterVector({"mu1": 1.0, "mu2": 0.0}))  # count mismatch


def test_sinewell_vertical_partials():
    m = builtin("SINEWELL", ParameterVector({"mu1": 0.0, "mu2": 0.0, "mu3": 1.0}))
    for v in (-0.7, 0.0, 1.3):
        assert m.partial("F", 1, 0, 0.2, v) == pytest.approx(-1.0, abs=1e-15)
        assert m.partial("F", 0, 1, 0.2, v) == pytest.approx(0.0, abs=1e-15)


def test_gray_scott_u_factors_out():
    m = builtin("GRAY_SCOTT", ParameterVector({"mu1": 0.3, "mu2": 0.9}))
    for v in (-1.0, 0.4, 2.0):
        assert m.F(0.0, v) == 0.0


def test_sinewell_gu_constant():
    m = builtin("SINEWELL", ParameterVector({"mu1": 1.0, "mu2": 0.0, "mu3": 2.0}))
    for u, v in ((0.0, 0.0), (0.5, -1.2), (-2.0, 3.0)):
        assert m.partial("G", 1, 0, u, v) == pytest.approx(2.0, abs=1e-15)


def test_evaluate_partials_examples():
    m = builtin("SINEWELL", ParameterVector({"mu1": 1.0, "mu2": 0.0, "mu3": 2.0}))
    t = evaluate_partials(m, 0.0, 0.0, order=1)
    # G_v = 1 - 3 v^2 - mu3 mu1 cos(mu1 v + mu2)
    assert t.G[(0, 1)] == pytest.approx(-1.0, abs=1e-14)
    t2 = evaluate_partials(m, float(np.sin(1.0)), 1.0, order=2)
    assert t2.F[(2, 0)] == pytest.approx(0.0, abs=1e-15)  # F linear in U
    with pytest.raises(ModelError):
        evaluate_partials(m, 0.0, 0.0, order=4)


@pytest.mark.parametrize("name,params", [
    ("SINEWELL", {"mu1": 1.1, "mu2": 0.4, "mu3": -0.8}),
    ("GRAY_SCOTT", {"mu1": 0.4, "mu2": 1.1}),
    ("DRYLAND", {f"mu{k}": v for k, v in zip(range(1, 9),
                                             (0.3, 1.2, 0.4, 1.5, 0.8, 0.6, 0.5, 0.7))}),
    ("SAVANNA", {f"mu{k}": v for k, v in zip(range(1, 9),
                                             (0.4, 1.3, 0.6, 1.1, 0.5, 0.3, 1.2, 0.4))}),
    ("CHAMPNEYS", {f"mu{k}": v for k, v in zip(range(1, 7),
                                               (0.2, 1.1, 0.3, 0.9, 0.4, 1.2))}),
])
def test_symbolic_partials_match_finite_differences(name, params):
    """Spec invariant: every partial matches 4th-order central FD at random samples."""
    m = builtin(name, ParameterVector(params))
    rng = np.random.default_rng(7)
    n_ok = 0
    step = float(np.cbrt(np.finfo(float).eps))
    while n_ok < 100:
        u = rng.uniform(0.2, 1.2)
        v = rng.uniform(0.2, 1.2)
        for which in ("F", "G"):
            base = m.partial(which, 0, 0, u, v)
            hu = step * (1 + abs(u))
            hv = step * (1 + abs(v))
            fd_u = (m.partial(which, 0, 0, u - 2 * hu, v) - 8 * m.partial(which, 0, 0, u - hu, v)
                    + 8 * m.partial(which, 0, 0, u + hu, v)
                    - m.partial(which, 0, 0, u + 2 * hu, v)) / (12 * hu)
            fd_v = (m.partial(which, 0, 0, u, v - 2 * hv) - 8 * m.partial(which, 0, 0, u, v - hv)
                    + 8 * m.partial(which, 0, 0, u, v + hv)
                    - m.partial(which, 0, 0, u, v + 2 * hv)) / (12 * hv)
            au = m.partial(which, 1, 0, u, v)
            av = m.partial(which, 0, 1, u, v)
            assert abs(au - fd_u) <= 1e-6 * (1.0 + abs(au)), (name, which, "u", u, v)
            assert abs(av - fd_v) <= 1e-6 * (1.0 + abs(av)), (name, which, "v", u, v)
        n_ok += 1


def test_parsed_model_third_partials_vs_fd():
    pv = ParameterVector({"a": 0.7, "b": 1.3})
    m = ModelInstance("exp(a*U)*cos(b*V) + U^3*V^2", "tanh(U*V) - b*V^3", pv)
    h = 1e-3
    u, v = 0.4, 0.6
    # third mixed partial F_uuv by FD of the symbolic F_uv
    fd = (m.partial("F", 1, 1, u + h, v) - m.partial("F", 1, 1, u - h, v)) / (2 * h)
    assert m.partial("F", 2, 1, u, v) == pytest.approx(fd, rel=1e-6)


def test_parameter_reordering_is_irrelevant():
    p1 = ParameterVector({"mu1": 1.2, "mu2": 0.3, "mu3": -0.7})
    p2 = ParameterVector({"mu3": -0.7, "mu1": 1.2, "mu2": 0.3})
    m1 = ModelInstance("mu1*U + mu2*V^2 + mu3*sin(U*V)", "mu3*U - mu1*V", p1)
    m2 = ModelInstance("mu1*U + mu2*V^2 + mu3*sin(U*V)", "mu3*U - mu1*V", p2)
    for u, v in ((0.3, -0.2), (1.1, 0.8)):
        assert m1.F(u, v) == m2.F(u, v)
        assert m1.partial("G", 1, 1, u, v) == m2.partial("G", 1, 1, u, v)


def test_savanna_domain_error_is_typed():
    params = {f"mu{k}": 1.0 for k in range(1, 9)}
    m = builtin("SAVANNA", ParameterVector(params))
    # mu3 U + V + mu4 = 0 at this point: rational term blows up
    with pytest.raises(EvaluationDomainError):
        m.partial("F", 0, 0, 1.0, -2.0)


def test_fd_fallback_for_opaque_callables():
    pv = ParameterVector({"a": 1.0})

    def F(u, v):
        return -u + np.sin(v)

    def G(u, v):
        return v - v**3 + 0.5 * (u - np.sin(v))

    m = ModelInstance.from_callables(F, G, pv)
    assert m.exact_partials is False
    assert m.partial("F", 1, 0, 0.3, 0.4) == pytest.approx(-1.0, rel=1e-7)
    assert m.partial("G", 0, 2, 0.0, 0.5) == pytest.approx(-6 * 0.5 + 0.5 * np.sin(0.5),
                                                           rel=1e-5)
    tab = evaluate_partials(m, 0.1, 0.2, order=2)
    assert tab.exact is False
