"""Sharpness analysis for power-weight trace embeddings.

Builds the height-only test family u(x) = eta(x_n / eps) from a compactly
supported cutoff, reduces both sides of the trace inequality exactly to
one-dimensional integrals, and fits log-log slopes against the predicted
exponents

    boundary side:  (theta + alpha*(n-2) + 1) / q
    Sobolev side:   (alpha*(n-1) + 1 - p) / p.

All integrals split at the cutoff's plateau edge, so quadrature sees only
smooth pieces: the plateau is a pure power integral on (0, eps) handled by
the graded rule, and the transition band (eps, 2*eps) uses panel Gauss.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import NonIntegrable, RangeViolation
from .geometry import DomainParams, derived_exponents, powt
from .quadrature import GradedRule, gauss_nodes_01, graded_interval_rule

__all__ = [
    "Cutoff",
    "CUBIC_CUTOFF",
    "QUINTIC_CUTOFF",
    "cutoff_eta",
    "ScalingResult",
    "SharpnessScan",
    "test_function_norms",
    "scaling_slopes",
    "sharpness_scan",
]


@dataclass(frozen=True)
class Cutoff:
    """C^1 profile equal to 1 on [0, 1], 0 on [2, inf), monotone between."""

    name: str
    value: Callable
    derivative: Callable
    derivative_bound: float


def _cubic_value(s):
    s = np.asarray(s, dtype=float)
    u = np.clip(s - 1.0, 0.0, 1.0)
    return 1.0 - u * u * (3.0 - 2.0 * u)


def _cubic_derivative(s):
    s = np.asarray(s, dtype=float)
    u = s - 1.0
    inside = (u > 0.0) & (u < 1.0)
    du = np.where(inside, -6.0 * u * (1.0 - u), 0.0)
    return du


def _quintic_value(s):
    s = np.asarray(s, dtype=float)
    u = np.clip(s - 1.0, 0.0, 1.0)
    return 1.0 - u**3 * (10.0 - 15.0 * u + 6.0 * u * u)


def _quintic_derivative(s):
    s = np.asarray(s, dtype=float)
    u = s - 1.0
    inside = (u > 0.0) & (u < 1.0)
    return np.where(inside, -30.0 * u**2 * (1.0 - u) ** 2, 0.0)


CUBIC_CUTOFF = Cutoff("cubic", _cubic_value, _cubic_derivative, 1.5)
QUINTIC_CUTOFF = Cutoff("quintic", _quintic_value, _quintic_derivative, 1.875)


def cutoff_eta(s):
    """Cubic smoothstep cutoff: returns (value, derivative) at s >= 0."""
    s_arr = np.asarray(s, dtype=float)
    if np.any(s_arr < 0.0):
        raise RangeViolation("s", "s >= 0")
    val = _cubic_value(s_arr)
    der = _cubic_derivative(s_arr)
    if np.ndim(s) == 0:
        return float(val), float(der)
    return val, der


def _transition_integral(fn, eps: float, order: int = 16, panels: int = 4) -> float:
    # integral over (eps, 2*eps); integrand smooth inside, mildly singular
    # fractional powers only at the panel endpoints
    xg, wg = gauss_nodes_01(order)
    edges = np.linspace(eps, 2.0 * eps, panels + 1)
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        t = lo + (hi - lo) * xg
        total += (hi - lo) * float(np.dot(wg, fn(t)))
    return total


def _plateau_plus_transition(sigma: float, extra, eta_pow, eps: float,
                             rule: GradedRule) -> float:
    """Integral over (0, 1) of eta(t/eps)**k * t**sigma * extra(t).

    The plateau (0, eps) has eta = 1; the transition lives on (eps, 2*eps).
    """
    def plateau(t):
        vals = powt(t, sigma)
        return vals * extra(t) if extra is not None else vals

    total = rule.integrate(plateau, upper=eps)

    def band(t):
        vals = eta_pow(t / eps) * powt(t, sigma)
        return vals * extra(t) if extra is not None else vals

    total += _transition_integral(band, eps)
    return total


def test_function_norms(params: DomainParams, theta: float, q: float, eps: float,
                        cutoff: Cutoff = CUBIC_CUTOFF,
                        rule: GradedRule | None = None) -> tuple[float, float]:
    """Boundary and Sobolev norms of the cutoff test function at scale eps.

    Both are exact one-dimensional reductions: the boundary norm sums the
    flat and slanted faces (the top face sees a vanished cutoff), and the
    Sobolev norm combines the gradient and function p-norms.
    """
    if not 0.0 < eps < 0.5:
        raise RangeViolation("eps", "0 < eps < 1/2")
    n, p = params.n, params.p
    alpha = params.alpha
    sigma_b = theta + alpha * (n - 2)
    if sigma_b <= -1.0:
        raise NonIntegrable(
            f"theta + alpha(n-2) = {sigma_b:g} fails the > -1 threshold")
    if rule is None:
        rule = graded_interval_rule(min(0.0, sigma_b))

    slant = lambda t: np.sqrt(1.0 + alpha * alpha * powt(t, 2.0 * alpha - 2.0))
    flat = _plateau_plus_transition(sigma_b, None,
                                    lambda s: cutoff.value(s) ** q, eps, rule)
    slanted = _plateau_plus_transition(sigma_b, slant,
                                       lambda s: cutoff.value(s) ** q, eps, rule)
    boundary_q = (n - 1) * (flat + slanted)
    boundary_norm = boundary_q ** (1.0 / q)

    nu = alpha * (n - 1)
    val_p = _plateau_plus_transition(nu, None,
                                     lambda s: cutoff.value(s) ** p, eps, rule)
    grad_p = _transition_integral(
        lambda t: eps ** (-p) * np.abs(cutoff.derivative(t / eps)) ** p
        * powt(t, nu), eps)
    sobolev = grad_p ** (1.0 / p) + val_p ** (1.0 / p)
    return boundary_norm, sobolev


DEFAULT_EPS_GRID = 2.0 ** (-np.arange(4, 13, dtype=float))


@dataclass(frozen=True)
class ScalingResult:
    """Fitted log-log slopes of the test-family norms against eps."""

    eps_grid: np.ndarray
    lhs_norms: np.ndarray
    rhs_norms: np.ndarray
    lhs_slope: float
    rhs_slope: float
    predicted_lhs: float
    predicted_rhs: float


def _check_grid(eps_grid) -> np.ndarray:
    grid = np.asarray(eps_grid, dtype=float)
    if grid.size < 6:
        raise RangeViolation("eps_grid", "at least 6 points")
    if np.any(np.diff(grid) >= 0.0):
        raise RangeViolation("eps_grid", "strictly decreasing")
    lo, hi = 2.0 ** -12, 2.0 ** -4
    if grid[0] > hi * (1 + 1e-12) or grid[-1] < lo * (1 - 1e-12):
        raise RangeViolation("eps_grid", "within [2^-12, 2^-4]")
    return grid


def scaling_slopes(params: DomainParams, theta: float, q: float,
                   eps_grid=None, cutoff: Cutoff = CUBIC_CUTOFF) -> ScalingResult:
    """Least-squares slopes of both norms on a dyadic eps grid."""
    grid = _check_grid(DEFAULT_EPS_GRID if eps_grid is None else eps_grid)
    n, p, alpha = params.n, params.p, params.alpha
    sigma_b = theta + alpha * (n - 2)
    if sigma_b <= -1.0:
        raise NonIntegrable(
            f"theta + alpha(n-2) = {sigma_b:g} fails the > -1 threshold")
    rule = graded_interval_rule(min(0.0, sigma_b))
    lhs = np.empty(grid.size)
    rhs = np.empty(grid.size)
    for k, eps in enumerate(grid):
        lhs[k], rhs[k] = test_function_norms(params, theta, q, eps,
                                             cutoff=cutoff, rule=rule)
    x = np.log2(grid)
    lhs_slope = float(np.polyfit(x, np.log2(lhs), 1)[0])
    rhs_slope = float(np.polyfit(x, np.log2(rhs), 1)[0])
    return ScalingResult(
        eps_grid=grid,
        lhs_norms=lhs,
        rhs_norms=rhs,
        lhs_slope=lhs_slope,
        rhs_slope=rhs_slope,
        predicted_lhs=(theta + alpha * (n - 2) + 1.0) / q,
        predicted_rhs=(alpha * (n - 1) + 1.0 - p) / p,
    )


@dataclass(frozen=True)
class SharpnessScan:
    """Sign comparison of slope gaps against the distance to theta_min."""

    theta_min: float
    rows: np.ndarray  # columns: theta, lhs_slope - rhs_slope, theta - theta_min


def sharpness_scan(params: DomainParams, q: float, theta_grid,
                   eps_grid=None, cutoff: Cutoff = CUBIC_CUTOFF) -> SharpnessScan:
    """Scan weight exponents across the necessary threshold.

    For each theta, records the fitted slope gap; its sign matches the sign
    of theta - theta_min away from the threshold.
    """
    thetas = np.sort(np.asarray(theta_grid, dtype=float))
    theta_min = derived_exponents(params).theta_min(q)
    if not thetas[0] <= theta_min <= thetas[-1]:
        raise RangeViolation("theta_grid", "grid must straddle theta_min")
    rows = np.empty((thetas.size, 3))
    for k, theta in enumerate(thetas):
        res = scaling_slopes(params, theta, q, eps_grid=eps_grid, cutoff=cutoff)
        rows[k] = (theta, res.lhs_slope - res.rhs_slope, theta - theta_min)
    return SharpnessScan(theta_min=theta_min, rows=rows)
