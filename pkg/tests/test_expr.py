"""Expression parser, printer round-trip, and symbolic differentiation."""
from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slowpatterns import expr as ex
from slowpatterns.errors import ExpressionError, UnknownSymbolError

SYMS = {"U", "V", "mu1", "mu2", "mu3"}


def ev(source, **env):
    return ex.evaluate(ex.parse_expression(source, SYMS), env)


def test_parse_sum_structure():
    node = ex.parse_expression("-U + sin(mu1*V + mu2)", SYMS)
    assert isinstance(node, ex.Bin) and node.op == "+"
    assert isinstance(node.left, ex.Neg)
    assert isinstance(node.right, ex.Call) and node.right.fn == "sin"


def test_power_then_product():
    node = ex.parse_expression("U^2*V", SYMS)
    assert isinstance(node, ex.Bin) and node.op == "*"
    assert isinstance(node.left, ex.Bin) and node.left.op == "^"
    assert ev("U^2*V", U=2.0, V=3.0) == 12.0


def test_sinewell_g_value():
    val = ev("V - V^3 + mu3*(U - sin(mu1*V+mu2))", U=0.0, V=1.0, mu1=1.0, mu2=0.0, mu3=0.0)
    assert val == 0.0


def test_precedence_and_unary():
    assert ev("-U^2", U=3.0) == -9.0           # unary binds below power
    assert ev("2^-2", U=0.0) == 0.25           # exponent may be unary
    assert ev("1 - 2 - 3", U=0.0) == -4.0      # left associativity
    assert ev("12/4/3", U=0.0) == 1.0
    assert ev("2^3^2", U=0.0) == 512.0         # right-associative power


def test_syntax_error_carries_position():
    with pytest.raises(ExpressionError) as err:
        ex.parse_expression("U + * V", SYMS)
    assert err.value.position == 4


def test_unknown_symbol_error():
    with pytest.raises(UnknownSymbolError):
        ex.parse_expression("U + nu7", SYMS)


def test_unknown_function_rejected():
    with pytest.raises(ExpressionError):
        ex.parse_expression("sinh(U)", SYMS)


def test_differentiate_linear():
    d = ex.differentiate(ex.parse_expression("-U + sin(mu1*V+mu2)", SYMS), "U")
    assert d == ex.Num(-1.0)


def test_differentiate_chain_rule():
    d = ex.differentiate(ex.parse_expression("sin(mu1*V+mu2)", SYMS), "V")
    val = ex.evaluate(d, {"V": 0.3, "mu1": 1.7, "mu2": 0.2})
    assert val == pytest.approx(1.7 * math.cos(1.7 * 0.3 + 0.2), abs=1e-15)


def test_second_derivative_cubic():
    e = ex.parse_expression("V - V^3", SYMS)
    d2 = ex.differentiate(ex.differentiate(e, "V"), "V")
    assert ex.evaluate(d2, {"V": 1.0}) == pytest.approx(-6.0, abs=1e-14)


# -- round-trip property ------------------------------------------------------

def _leaves():
    return st.one_of(
        st.sampled_from([ex.Sym("U"), ex.Sym("V"), ex.Sym("mu1"), ex.Sym("mu2")]),
        st.floats(min_value=0.1, max_value=9.0).map(lambda x: ex.Num(round(x, 3))),
    )


def _trees():
    return st.recursive(
        _leaves(),
        lambda kids: st.one_of(
            st.tuples(st.sampled_from("+-*/^"), kids, kids).map(lambda t: ex.Bin(*t)),
            kids.map(ex.Neg),
            st.tuples(st.sampled_from(ex.FUNCTIONS), kids).map(lambda t: ex.Call(*t)),
        ),
        max_leaves=12,
    )


@settings(max_examples=120, deadline=None)
@given(_trees())
def test_printer_round_trip(tree):
    assert ex.parse_expression(ex.to_source(tree), SYMS) == tree


@settings(max_examples=60, deadline=None)
@given(_trees())
def test_parse_print_parse_stable(tree):
    s = ex.to_source(tree)
    once = ex.parse_expression(s, SYMS)
    again = ex.parse_expression(ex.to_source(once), SYMS)
    assert once == again


def test_fold_keeps_value():
    src = "0 + 1*(V - V^3) - 0*U + mu1^1"
    folded = ex.fold(ex.parse_expression(src, SYMS))
    env = {"U": 0.3, "V": 0.7, "mu1": 2.5}
    assert ex.evaluate(folded, env) == pytest.approx(
        ex.evaluate(ex.parse_expression(src, SYMS), env), rel=1e-15)
