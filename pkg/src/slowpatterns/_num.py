"""Shared numerical helpers: FD stencils, cumulative quadrature, tail handling."""
from __future__ import annotations

import numpy as np
from scipy.integrate import simpson
from scipy.interpolate import CubicSpline

from .errors import SolverError, TailFitError


_EDGE0 = np.array([-49.0 / 20, 6.0, -15.0 / 2, 20.0 / 3, -15.0 / 4, 6.0 / 5, -1.0 / 6])
_EDGE1 = np.array([-1.0 / 6, -77.0 / 60, 5.0 / 2, -5.0 / 3, 5.0 / 6, -1.0 / 4, 1.0 / 30])


def fd_derivative(y: np.ndarray, h: float) -> np.ndarray:
    """First derivative, 4th-order central stencil, 6th-order one-sided at edges.

    The high edge order keeps the error small even for exponentially growing
    samples (the unbounded fundamental solution reaches the grid boundary).
    """
    dy = np.empty_like(y)
    dy[2:-2] = (y[:-4] - 8 * y[1:-3] + 8 * y[3:-1] - y[4:]) / (12 * h)
    dy[0] = np.dot(_EDGE0, y[:7]) / h
    dy[1] = np.dot(_EDGE1, y[:7]) / h
    dy[-1] = -np.dot(_EDGE0, y[-1:-8:-1]) / h
    dy[-2] = -np.dot(_EDGE1, y[-1:-8:-1]) / h
    return dy


def fd_second_derivative(y: np.ndarray, h: float) -> np.ndarray:
    """Second derivative, 4th-order central stencil (2nd order at the edges)."""
    d2 = np.empty_like(y)
    d2[2:-2] = (-y[:-4] + 16 * y[1:-3] - 30 * y[2:-2] + 16 * y[3:-1] - y[4:]) / (12 * h * h)
    d2[1] = (y[0] - 2 * y[1] + y[2]) / (h * h)
    d2[-2] = (y[-3] - 2 * y[-2] + y[-1]) / (h * h)
    d2[0] = (2 * y[0] - 5 * y[1] + 4 * y[2] - y[3]) / (h * h)
    d2[-1] = (2 * y[-1] - 5 * y[-2] + 4 * y[-3] - y[-4]) / (h * h)
    return d2


def _spline_cumulative(y: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Cumulative integral from x[0] via the antiderivative of a cubic spline.

    Unlike composite-Simpson cumulatives this has a smooth (sawtooth-free)
    error, which matters when results are differentiated afterwards.
    """
    return CubicSpline(x, y).antiderivative()(x)


def cumint_from_left(y: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Cumulative integral from x[0]."""
    return _spline_cumulative(y, x)


def cumint_from_center(y: np.ndarray, x: np.ndarray, i0: int) -> np.ndarray:
    """Cumulative integral from x[i0], accumulated outward on both sides.

    Splitting at the anchor avoids catastrophic cancellation when the two
    half-line sums are exponentially large compared to interior values.
    """
    out = np.empty_like(y)
    out[i0:] = _spline_cumulative(y[i0:], x[i0:])
    out[: i0 + 1] = -_spline_cumulative(y[i0::-1], -x[i0::-1])[::-1]
    return out


def integrate(y: np.ndarray, x: np.ndarray) -> float:
    return float(simpson(y, x=x))


def smoothstep(x: np.ndarray, x0: float, width: float) -> np.ndarray:
    """C^1 ramp from 0 (x <= x0) to 1 (x >= x0 + width)."""
    s = np.clip((x - x0) / width, 0.0, 1.0)
    return s * s * (3.0 - 2.0 * s)


def exp_tail_integral(values: np.ndarray, x: np.ndarray, side: str, n_fit: int = 12) -> float:
    """Estimate the integral of an exponentially decaying tail beyond the grid.

    Fits |y| ~ C exp(-r |x|) on the last ``n_fit`` nodes of the given side and
    returns the analytic remainder; returns 0 for tails at the noise floor.
    """
    if side == "left":
        ys = values[:n_fit][::-1]
    else:
        ys = values[-n_fit:]
    y_end = ys[-1]
    if abs(y_end) < 1e-280:
        return 0.0
    mags = np.abs(ys)
    if np.any(mags == 0):
        return 0.0
    h = abs(x[1] - x[0])
    # average one-step log decrement toward the boundary
    logs = np.log(mags)
    rate = -np.mean(np.diff(logs)) / h
    if rate <= 0:
        return 0.0
    return float(y_end / rate)


def fit_saddle_beta(
    x_window: np.ndarray,
    dev_window: np.ndarray,
    sqrt_alpha: float,
    second_coeff_over_beta2: float,
    free_cubic: bool = False,
) -> tuple[float, float]:
    """Fit beta in ``dev = beta E + c2 beta^2 E^2 (+ b3 E^3)``, E = exp(-sqrt_alpha x).

    ``second_coeff_over_beta2`` is c2 (the quadratic tail coefficient divided
    by beta^2).  With ``free_cubic`` a free E^3 term absorbs the next-order
    model bias; residuals are weighted relative to dev.  Returns
    (beta, rms relative residual).
    """
    E = np.exp(-sqrt_alpha * x_window)
    if np.any(dev_window <= 0):
        raise TailFitError("tail deviations must be positive in the fit window")
    w = 1.0 / dev_window
    beta = float(np.mean(dev_window / E))
    b3 = 0.0
    c2 = second_coeff_over_beta2
    for _ in range(40):
        model = beta * E + c2 * beta**2 * E**2 + b3 * E**3
        resid = (dev_window - model) * w
        jb = (E + 2 * c2 * beta * E**2) * w
        if free_cubic:
            jc = E**3 * w
            A = np.array([[np.dot(jb, jb), np.dot(jb, jc)], [np.dot(jb, jc), np.dot(jc, jc)]])
            rhs = np.array([np.dot(jb, resid), np.dot(jc, resid)])
            db, dc = np.linalg.solve(A, rhs)
            beta += float(db)
            b3 += float(dc)
            step = abs(db)
        else:
            step = float(np.dot(jb, resid) / np.dot(jb, jb))
            beta += step
            step = abs(step)
        if step <= 1e-14 * abs(beta):
            break
    model = beta * E + c2 * beta**2 * E**2 + b3 * E**3
    rel = float(np.sqrt(np.mean(((dev_window - model) * w) ** 2)))
    return beta, rel


def brentq_on_grid(fvals: np.ndarray, grid: np.ndarray, f, xtol: float = 1e-13) -> list[float]:
    """Roots of callable ``f`` bracketed by sign changes of its samples ``fvals``."""
    from scipy.optimize import brentq

    roots: list[float] = []
    s = np.sign(fvals)
    for k in range(len(grid) - 1):
        if s[k] == 0.0:
            if not roots or abs(grid[k] - roots[-1]) > 10 * xtol:
                roots.append(float(grid[k]))
        elif s[k] * s[k + 1] < 0:
            roots.append(float(brentq(f, grid[k], grid[k + 1], xtol=xtol)))
    if len(grid) and s[-1] == 0.0:
        if not roots or abs(grid[-1] - roots[-1]) > 10 * xtol:
            roots.append(float(grid[-1]))
    return roots


def fit_convergence_order(eps_values: np.ndarray, errors: np.ndarray) -> float:
    """Least-squares slope of log|error| against log(eps)."""
    eps_values = np.asarray(eps_values, dtype=float)
    errors = np.abs(np.asarray(errors, dtype=float))
    if np.any(errors == 0):
        errors = np.maximum(errors, 1e-300)
    A = np.vstack([np.log(eps_values), np.ones_like(eps_values)]).T
    slope, _ = np.linalg.lstsq(A, np.log(errors), rcond=None)[0]
    return float(slope)


def richardson_limit(eps_values: np.ndarray, values: np.ndarray, order: float) -> float:
    """Extrapolate values(eps) -> limit assuming error ~ C eps^order (last two points)."""
    e1, e2 = eps_values[-2], eps_values[-1]
    v1, v2 = values[-2], values[-1]
    r = (e1 / e2) ** order
    return float((r * v2 - v1) / (r - 1.0))


def require(condition: bool, message: str, exc=SolverError) -> None:
    if not condition:
        raise exc(message)
