"""Small expression language for user-defined reaction terms.

Grammar (standard precedence, ``^`` is right-associative power):

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' unary)?
    atom   := NUMBER | NAME | NAME '(' expr ')' | '(' expr ')'

Free symbols are ``U``, ``V`` and declared parameter names; allowed functions
are sin, cos, tanh, exp, log, sqrt.  Derivatives are taken symbolically with
constant folding so that third-order partials stay exact.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from .errors import EvaluationDomainError, ExpressionError, UnknownSymbolError

FUNCTIONS = ("sin", "cos", "tanh", "exp", "log", "sqrt")

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[()+\-*/^]))"
)


class Expression:
    """Base AST node; subclasses are frozen dataclasses with structural equality."""

    __slots__ = ()

    def __str__(self) -> str:
        return to_source(self)


@dataclass(frozen=True)
class Num(Expression):
    value: float


@dataclass(frozen=True)
class Sym(Expression):
    name: str


@dataclass(frozen=True)
class Neg(Expression):
    arg: Expression


@dataclass(frozen=True)
class Bin(Expression):
    op: str  # '+', '-', '*', '/', '^'
    left: Expression
    right: Expression


@dataclass(frozen=True)
class Call(Expression):
    fn: str
    arg: Expression


@dataclass
class _Token:
    kind: str
    text: str
    pos: int


def _tokenize(source: str) -> list[_Token]:
    tokens: list[_Token] = []
    pos = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            stripped = source[pos:].lstrip()
            if not stripped:
                break
            raise ExpressionError(f"unexpected character {stripped[0]!r}", len(source) - len(stripped))
        if m.lastgroup == "num":
            tokens.append(_Token("num", m.group("num"), m.start("num")))
        elif m.lastgroup == "name":
            tokens.append(_Token("name", m.group("name"), m.start("name")))
        else:
            tokens.append(_Token("op", m.group("op"), m.start("op")))
        pos = m.end()
    return tokens


class _Parser:
    def __init__(self, source: str):
        self.source = source
        self.tokens = _tokenize(source)
        self.i = 0

    def peek(self) -> _Token | None:
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def next(self) -> _Token:
        tok = self.peek()
        if tok is None:
            raise ExpressionError("unexpected end of expression", len(self.source))
        self.i += 1
        return tok

    def expect_op(self, op: str) -> None:
        tok = self.peek()
        if tok is None or tok.kind != "op" or tok.text != op:
            pos = tok.pos if tok is not None else len(self.source)
            raise ExpressionError(f"expected {op!r}", pos)
        self.i += 1

    def parse(self) -> Expression:
        node = self.expr()
        tok = self.peek()
        if tok is not None:
            raise ExpressionError(f"unexpected token {tok.text!r}", tok.pos)
        return node

    def expr(self) -> Expression:
        node = self.term()
        while (tok := self.peek()) is not None and tok.kind == "op" and tok.text in "+-":
            self.i += 1
            node = Bin(tok.text, node, self.term())
        return node

    def term(self) -> Expression:
        node = self.unary()
        while (tok := self.peek()) is not None and tok.kind == "op" and tok.text in "*/":
            self.i += 1
            node = Bin(tok.text, node, self.unary())
        return node

    def unary(self) -> Expression:
        tok = self.peek()
        if tok is not None and tok.kind == "op" and tok.text == "-":
            self.i += 1
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expression:
        base = self.atom()
        tok = self.peek()
        if tok is not None and tok.kind == "op" and tok.text == "^":
            self.i += 1
            return Bin("^", base, self.unary())
        return base

    def atom(self) -> Expression:
        tok = self.next()
        if tok.kind == "num":
            return Num(float(tok.text))
        if tok.kind == "name":
            nxt = self.peek()
            if nxt is not None and nxt.kind == "op" and nxt.text == "(":
                if tok.text not in FUNCTIONS:
                    raise ExpressionError(f"unknown function {tok.text!r}", tok.pos)
                self.i += 1
                arg = self.expr()
                self.expect_op(")")
                return Call(tok.text, arg)
            return Sym(tok.text)
        if tok.text == "(":
            node = self.expr()
            self.expect_op(")")
            return node
        raise ExpressionError(f"unexpected token {tok.text!r}", tok.pos)


def parse_expression(source: str, allowed_symbols: set[str] | None = None) -> Expression:
    """Parse ``source``; if ``allowed_symbols`` is given, reject free symbols outside it."""
    node = _Parser(source).parse()
    if allowed_symbols is not None:
        for name in sorted(free_symbols(node)):
            if name not in allowed_symbols:
                pos = source.find(name)
                raise UnknownSymbolError(f"unknown symbol {name!r}", pos if pos >= 0 else None)
    return node


def free_symbols(e: Expression) -> set[str]:
    if isinstance(e, Sym):
        return {e.name}
    if isinstance(e, Neg):
        return free_symbols(e.arg)
    if isinstance(e, Bin):
        return free_symbols(e.left) | free_symbols(e.right)
    if isinstance(e, Call):
        return free_symbols(e.arg)
    return set()


# ---------------------------------------------------------------------------
# printing

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4, "atom": 5}


def _prec(e: Expression) -> int:
    if isinstance(e, Bin):
        return _PREC[e.op]
    if isinstance(e, Neg):
        return _PREC["neg"]
    return _PREC["atom"]


def to_source(e: Expression) -> str:
    """Canonical printer; ``parse_expression(to_source(e)) == e`` structurally."""
    if isinstance(e, Num):
        return repr(e.value)
    if isinstance(e, Sym):
        return e.name
    if isinstance(e, Call):
        return f"{e.fn}({to_source(e.arg)})"
    if isinstance(e, Neg):
        inner = to_source(e.arg)
        if _prec(e.arg) < _PREC["neg"]:
            inner = f"({inner})"
        return f"-{inner}"
    if isinstance(e, Bin):
        lp, rp = _prec(e.left), _prec(e.right)
        left = to_source(e.left)
        right = to_source(e.right)
        if lp < _PREC[e.op] or (e.op == "^" and isinstance(e.left, (Bin, Neg))):
            left = f"({left})"
        # left-associative ops: an equal-precedence right operand always needs
        # parens to reproduce the nesting structurally
        if rp < _PREC[e.op] or (e.op in "+-*/" and rp == _PREC[e.op]):
            right = f"({right})"
        return f"{left} {e.op} {right}" if e.op in "+-" else f"{left}{e.op}{right}"
    raise TypeError(f"not an Expression: {e!r}")


# ---------------------------------------------------------------------------
# simplification (constant folding and unit rules; keeps derivatives compact)

def fold(e: Expression) -> Expression:
    if isinstance(e, (Num, Sym)):
        return e
    if isinstance(e, Neg):
        a = fold(e.arg)
        if isinstance(a, Num):
            return Num(-a.value)
        if isinstance(a, Neg):
            return a.arg
        return Neg(a)
    if isinstance(e, Call):
        a = fold(e.arg)
        if isinstance(a, Num):
            try:
                return Num(getattr(math, e.fn)(a.value))
            except ValueError:
                pass  # keep symbolic; evaluation will raise a domain error
        return Call(e.fn, a)
    assert isinstance(e, Bin)
    a, b = fold(e.left), fold(e.right)
    if isinstance(a, Num) and isinstance(b, Num):
        try:
            if e.op == "+":
                return Num(a.value + b.value)
            if e.op == "-":
                return Num(a.value - b.value)
            if e.op == "*":
                return Num(a.value * b.value)
            if e.op == "/":
                if b.value != 0:
                    return Num(a.value / b.value)
            if e.op == "^":
                return Num(a.value**b.value)
        except (ValueError, OverflowError):
            pass
    zero, one = Num(0.0), Num(1.0)
    if e.op == "+":
        if a == zero:
            return b
        if b == zero:
            return a
    elif e.op == "-":
        if b == zero:
            return a
        if a == zero:
            return fold(Neg(b))
    elif e.op == "*":
        if a == zero or b == zero:
            return zero
        if a == one:
            return b
        if b == one:
            return a
        if a == Num(-1.0):
            return fold(Neg(b))
        if b == Num(-1.0):
            return fold(Neg(a))
    elif e.op == "/":
        if a == zero:
            return zero
        if b == one:
            return a
    elif e.op == "^":
        if b == one:
            return a
        if b == zero:
            return one
        if a == zero:
            return zero
        if a == one:
            return one
    return Bin(e.op, a, b)


# ---------------------------------------------------------------------------
# differentiation

def differentiate(e: Expression, wrt: str) -> Expression:
    """Symbolic derivative with respect to symbol ``wrt`` (typically 'U' or 'V')."""
    return fold(_diff(fold(e), wrt))


def _diff(e: Expression, x: str) -> Expression:
    if isinstance(e, Num):
        return Num(0.0)
    if isinstance(e, Sym):
        return Num(1.0) if e.name == x else Num(0.0)
    if isinstance(e, Neg):
        return Neg(_diff(e.arg, x))
    if isinstance(e, Bin):
        a, b = e.left, e.right
        da, db = _diff(a, x), _diff(b, x)
        if e.op in "+-":
            return Bin(e.op, da, db)
        if e.op == "*":
            return Bin("+", Bin("*", da, b), Bin("*", a, db))
        if e.op == "/":
            num = Bin("-", Bin("*", da, b), Bin("*", a, db))
            return Bin("/", num, Bin("^", b, Num(2.0)))
        if e.op == "^":
            if isinstance(b, Num):
                # d(a^n) = n a^(n-1) a'
                return Bin("*", Bin("*", b, Bin("^", a, Num(b.value - 1.0))), da)
            # general: a^b = exp(b log a)
            term1 = Bin("*", db, Call("log", a))
            term2 = Bin("/", Bin("*", b, da), a)
            return Bin("*", e, Bin("+", term1, term2))
    if isinstance(e, Call):
        da = _diff(e.arg, x)
        a = e.arg
        outer: Expression
        if e.fn == "sin":
            outer = Call("cos", a)
        elif e.fn == "cos":
            outer = Neg(Call("sin", a))
        elif e.fn == "tanh":
            outer = Bin("-", Num(1.0), Bin("^", Call("tanh", a), Num(2.0)))
        elif e.fn == "exp":
            outer = e
        elif e.fn == "log":
            outer = Bin("/", Num(1.0), a)
        elif e.fn == "sqrt":
            outer = Bin("/", Num(0.5), Call("sqrt", a))
        else:  # pragma: no cover - grammar restricts to FUNCTIONS
            raise ExpressionError(f"cannot differentiate {e.fn}")
        return Bin("*", outer, da)
    raise TypeError(f"not an Expression: {e!r}")


# ---------------------------------------------------------------------------
# evaluation

_NUMPY_FN = {
    "sin": np.sin,
    "cos": np.cos,
    "tanh": np.tanh,
    "exp": np.exp,
    "log": np.log,
    "sqrt": np.sqrt,
}


def compile_expression(e: Expression):
    """Compile to a closure ``f(env) -> ndarray|float``; env maps symbol names to values."""
    if isinstance(e, Num):
        v = e.value
        return lambda env: v
    if isinstance(e, Sym):
        name = e.name
        return lambda env: env[name]
    if isinstance(e, Neg):
        fa = compile_expression(e.arg)
        return lambda env: -fa(env)
    if isinstance(e, Call):
        fa = compile_expression(e.arg)
        fn = _NUMPY_FN[e.fn]
        return lambda env: fn(fa(env))
    assert isinstance(e, Bin)
    fa, fb = compile_expression(e.left), compile_expression(e.right)
    if e.op == "+":
        return lambda env: fa(env) + fb(env)
    if e.op == "-":
        return lambda env: fa(env) - fb(env)
    if e.op == "*":
        return lambda env: fa(env) * fb(env)
    if e.op == "/":
        return lambda env: fa(env) / fb(env)
    return lambda env: fa(env) ** fb(env)


def evaluate(e: Expression, env: dict[str, object], check_domain: bool = True):
    """Evaluate with numpy semantics; non-finite results raise EvaluationDomainError."""
    try:
        with np.errstate(all="ignore"):
            out = compile_expression(e)(env)
    except (ZeroDivisionError, OverflowError, ValueError) as exc:
        raise EvaluationDomainError(
            f"expression {to_source(e)!r} left its real domain: {exc}") from exc
    if check_domain and not np.all(np.isfinite(out)):
        raise EvaluationDomainError(f"expression {to_source(e)!r} left its real domain")
    return out
