"""Reaction models: parameter vectors, builtin systems, and exact partial derivatives.

A model holds the pair (F, G) of reaction terms of the two-component system

    tau U_t = Lap U + F(U, V; mu),      V_t = (1/eps^2) Lap V + G(U, V; mu),

and supplies every mixed partial of F and G up to third order, either
symbolically (builtins and parsed expressions) or by guarded finite
differences (opaque callables, flagged lower-confidence).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from . import expr as ex
from .errors import EvaluationDomainError, ModelError

__all__ = [
    "ParameterVector",
    "ModelInstance",
    "PartialTable",
    "builtin",
    "builtin_names",
    "parse_expression",
    "differentiate",
    "evaluate_partials",
]

parse_expression = ex.parse_expression
differentiate = ex.differentiate

# derivative multi-indices (i = order in U, j = order in V), grouped by total order
_ORDERS: dict[int, list[tuple[int, int]]] = {
    0: [(0, 0)],
    1: [(1, 0), (0, 1)],
    2: [(2, 0), (1, 1), (0, 2)],
    3: [(3, 0), (2, 1), (1, 2), (0, 3)],
}
ALL_INDICES = [ij for order in range(4) for ij in _ORDERS[order]]


@dataclass(frozen=True)
class ParameterVector:
    """Named real parameters mu plus the time-scale ratio tau."""

    values: Mapping[str, float]
    tau: float = 1.0

    def __post_init__(self):
        if self.tau <= 0:
            raise ModelError(f"tau must be positive, got {self.tau}")
        if len(self.values) < 1:
            raise ModelError("at least one named parameter is required")
        object.__setattr__(self, "values", dict(self.values))

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(self.values)

    def __getitem__(self, name: str) -> float:
        return self.values[name]

    def with_updates(self, tau: float | None = None, **changes: float) -> "ParameterVector":
        vals = dict(self.values)
        for name, value in changes.items():
            if name not in vals:
                raise ModelError(f"unknown parameter {name!r}")
            vals[name] = float(value)
        return ParameterVector(vals, self.tau if tau is None else float(tau))


@dataclass(frozen=True)
class PartialTable:
    """All mixed partials of F and G at one (u, v) point up to a requested order."""

    u: float
    v: float
    order: int
    F: Mapping[tuple[int, int], float]
    G: Mapping[tuple[int, int], float]
    exact: bool = True


class _SymbolicDerivatives:
    """Compiled partial-derivative closures of one expression up to third order."""

    def __init__(self, root: ex.Expression):
        self.exprs: dict[tuple[int, int], ex.Expression] = {(0, 0): ex.fold(root)}
        for i, j in ALL_INDICES[1:]:
            if i > 0:
                src = self.exprs[(i - 1, j)]
                self.exprs[(i, j)] = ex.differentiate(src, "U")
            else:
                src = self.exprs[(i, j - 1)]
                self.exprs[(i, j)] = ex.differentiate(src, "V")
        self._compiled = {ij: ex.compile_expression(e) for ij, e in self.exprs.items()}

    def evaluate(self, ij: tuple[int, int], env: dict[str, object]):
        try:
            with np.errstate(all="ignore"):
                out = self._compiled[ij](env)
        except (ZeroDivisionError, OverflowError, ValueError) as exc:
            raise EvaluationDomainError(f"partial evaluation left its real domain: {exc}") \
                from exc
        return out


def _fd_partial(fn: Callable[[float, float], float], ij: tuple[int, int], u, v):
    """Central finite differences with one Richardson refinement, per component order."""
    i, j = ij
    hu = (np.cbrt(np.finfo(float).eps) * (1.0 + abs(np.asarray(u, float))))
    hv = (np.cbrt(np.finfo(float).eps) * (1.0 + abs(np.asarray(v, float))))

    def d(f, axis, n, uu, vv):
        if n == 0:
            return f(uu, vv)
        h = hu if axis == "u" else hv

        def g(step):
            if axis == "u":
                return d(f, axis, n - 1, uu + step, vv)
            return d(f, axis, n - 1, uu, vv + step)

        coarse = (g(h) - g(-h)) / (2 * h)
        fine = (g(h / 2) - g(-h / 2)) / h
        return (4 * fine - coarse) / 3.0

    def fu(uu, vv):
        return d(fn, "u", i, uu, vv)

    return d(fu, "v", j, u, v)


class ModelInstance:
    """A reaction pair with parameters and a partial-derivative provider.

    Instances are immutable after construction and safe to share across threads.
    """

    def __init__(
        self,
        F: ex.Expression | str,
        G: ex.Expression | str,
        params: ParameterVector,
        name: str = "custom",
    ):
        allowed = {"U", "V", *params.names}
        self.name = name
        self.params = params
        self.F_expr = ex.parse_expression(F, allowed) if isinstance(F, str) else F
        self.G_expr = ex.parse_expression(G, allowed) if isinstance(G, str) else G
        for e in (self.F_expr, self.G_expr):
            bad = ex.free_symbols(e) - allowed
            if bad:
                raise ModelError(f"undeclared symbols in reaction term: {sorted(bad)}")
        self._dF = _SymbolicDerivatives(self.F_expr)
        self._dG = _SymbolicDerivatives(self.G_expr)
        self.exact_partials = True
        self._fd_F: Callable | None = None
        self._fd_G: Callable | None = None

    @classmethod
    def from_callables(
        cls,
        F: Callable[[float, float], float],
        G: Callable[[float, float], float],
        params: ParameterVector,
        name: str = "callable",
    ) -> "ModelInstance":
        """Opaque user callables; partials fall back to guarded finite differences."""
        self = cls.__new__(cls)
        self.name = name
        self.params = params
        self.F_expr = None
        self.G_expr = None
        self._dF = None
        self._dG = None
        self.exact_partials = False
        self._fd_F = F
        self._fd_G = G
        return self

    # -- evaluation -----------------------------------------------------

    def _env(self, u, v) -> dict[str, object]:
        env: dict[str, object] = dict(self.params.values)
        env["U"] = u
        env["V"] = v
        return env

    def partial(self, which: str, i: int, j: int, u, v, check_domain: bool = True):
        """d^{i+j} which / dU^i dV^j evaluated at (u, v); vectorized over arrays."""
        if which not in ("F", "G"):
            raise ModelError(f"which must be 'F' or 'G', got {which!r}")
        if self.exact_partials:
            table = self._dF if which == "F" else self._dG
            out = table.evaluate((i, j), self._env(u, v))
        else:
            fn = self._fd_F if which == "F" else self._fd_G
            base = lambda uu, vv: fn(uu, vv)  # noqa: E731
            out = _fd_partial(base, (i, j), u, v)
        out = np.asarray(out, dtype=float) + np.zeros_like(np.asarray(u, dtype=float))
        if check_domain and not np.all(np.isfinite(out)):
            raise EvaluationDomainError(
                f"{which}_{'u' * i}{'v' * j} is not finite on the requested (u, v) domain"
            )
        if np.ndim(u) == 0:
            return float(out)
        return out

    def F(self, u, v):
        return self.partial("F", 0, 0, u, v)

    def G(self, u, v):
        return self.partial("G", 0, 0, u, v)

    def __repr__(self) -> str:
        return f"ModelInstance({self.name!r}, tau={self.params.tau})"


def evaluate_partials(m: ModelInstance, u: float, v: float, order: int = 3) -> PartialTable:
    """All mixed partials of F and G at (u, v) up to ``order`` (1..3)."""
    if order not in (1, 2, 3):
        raise ModelError(f"order must be 1, 2 or 3, got {order}")
    indices = [ij for total in range(order + 1) for ij in _ORDERS[total]]
    tableF = {ij: float(m.partial("F", *ij, u, v)) for ij in indices}
    tableG = {ij: float(m.partial("G", *ij, u, v)) for ij in indices}
    return PartialTable(u=float(u), v=float(v), order=order, F=tableF, G=tableG,
                        exact=m.exact_partials)


# ---------------------------------------------------------------------------
# builtins

@dataclass(frozen=True)
class _BuiltinSpec:
    param_names: tuple[str, ...]
    F: str
    G: str


_BUILTINS: dict[str, _BuiltinSpec] = {
    # F = -(U - sin(mu1 V + mu2)), G = V - V^3 + mu3 (U - sin(mu1 V + mu2))
    "SINEWELL": _BuiltinSpec(
        ("mu1", "mu2", "mu3"),
        "-(U - sin(mu1*V + mu2))",
        "V - V^3 + mu3*(U - sin(mu1*V + mu2))",
    ),
    "GRAY_SCOTT": _BuiltinSpec(
        ("mu1", "mu2"),
        "-mu1*U + U^2*V",
        "mu2*(1 - V) - U^2*V",
    ),
    "DRYLAND": _BuiltinSpec(
        ("mu1", "mu2", "mu3", "mu4", "mu5", "mu6", "mu7", "mu8"),
        "-(mu1 - mu2*(1 - mu3*U)*(1 + mu4*U)^2*V)*U",
        "mu5 - (mu6*(1 - mu3*mu7*U) + mu8*U*(1 + mu4*U)^2)*V",
    ),
    "SAVANNA": _BuiltinSpec(
        ("mu1", "mu2", "mu3", "mu4", "mu5", "mu6", "mu7", "mu8"),
        "mu1 + (mu2/(mu3*U + V + mu4) - mu5 - mu6*V)*U",
        "(mu7/(mu3*U + V + mu4) - mu8)*V",
    ),
    "CHAMPNEYS": _BuiltinSpec(
        ("mu1", "mu2", "mu3", "mu4", "mu5", "mu6"),
        "mu1 - mu2*U + mu3*V + U^2*V",
        "mu4 + mu5*U - mu6*V - U^2*V",
    ),
}


def builtin_names() -> tuple[str, ...]:
    return tuple(_BUILTINS)


def builtin(name: str, params: ParameterVector) -> ModelInstance:
    """Instantiate a builtin model; parameter names/count must match its signature."""
    spec = _BUILTINS.get(name)
    if spec is None:
        raise ModelError(f"unknown builtin {name!r}; available: {', '.join(_BUILTINS)}")
    if tuple(params.names) != spec.param_names:
        raise ModelError(
            f"{name} expects parameters {spec.param_names}, got {tuple(params.names)}"
        )
    return ModelInstance(spec.F, spec.G, params, name=name)
