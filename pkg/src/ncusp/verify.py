"""Self-check suites for the straightening map and the measure identities.

These power the command-line ``verify-geometry`` run and the acceptance
tests: map roundtrips, Jacobian reciprocity, finite-difference consistency
of the analytic Jacobian determinant, the tangential-Jacobian sandwich, the
volume identity, and the boundary area formula.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import (
    CuspMap,
    boundary_faces,
    forward_map,
    inverse_map,
    jacobian_forward,
    jacobian_inverse,
    quasi_random_interior,
    quasi_random_model_interior,
    tangential_jacobian,
    tangential_jacobian_bounds,
)
from .operators import area_formula_check, change_of_variables_check
from .quadrature import graded_interval_rule, volume_integral

__all__ = ["JacobianSuiteReport", "MeasureSuiteReport",
           "jacobian_suite", "measure_suite"]

ROUNDTRIP_TOL = 1e-12
RECIPROCITY_TOL = 1e-10
FD_TOL = 1e-6
SANDWICH_SLACK = 1e-12


@dataclass(frozen=True)
class JacobianSuiteReport:
    samples: int
    max_roundtrip: float
    max_reciprocity: float
    max_fd_rel: float
    max_sandwich_violation: float

    @property
    def ok(self) -> bool:
        return (self.max_roundtrip < ROUNDTRIP_TOL
                and self.max_reciprocity < RECIPROCITY_TOL
                and self.max_fd_rel < FD_TOL
                and self.max_sandwich_violation <= SANDWICH_SLACK)

    def as_dict(self) -> dict:
        return {
            "samples": self.samples,
            "max_roundtrip": self.max_roundtrip,
            "max_reciprocity": self.max_reciprocity,
            "max_fd_rel": self.max_fd_rel,
            "max_sandwich_violation": self.max_sandwich_violation,
            "ok": self.ok,
        }


def _fd_jacobian_determinant(cmap: CuspMap, y: np.ndarray, h: float = 1e-6):
    """Central-difference determinant of the forward map's Jacobi matrix."""
    m, n = y.shape
    D = np.empty((m, n, n))
    for j in range(n):
        step = np.zeros(n)
        step[j] = h
        D[:, :, j] = (forward_map(cmap, y + step) - forward_map(cmap, y - step)) \
            / (2.0 * h)
    return np.linalg.det(D)


def jacobian_suite(cmap: CuspMap, samples: int = 10000) -> JacobianSuiteReport:
    """Roundtrip, reciprocity, finite-difference, and sandwich checks."""
    n = cmap.n
    y = quasi_random_model_interior(n, samples)
    x = forward_map(cmap, y)
    back = inverse_map(cmap, x)
    rt = np.max(np.abs(back - y).max(axis=1) / (1.0 + np.abs(y).max(axis=1)))

    jf = jacobian_forward(cmap, y)
    ji = jacobian_inverse(cmap, x)
    rec = np.max(np.abs(jf * ji - 1.0))

    # finite differences need headroom from the domain walls
    u = quasi_random_model_interior(n, samples, skip=samples + 1)
    yn = 0.05 + 0.9 * u[:, -1]
    margin = yn.copy()
    y_fd = np.empty_like(u)
    y_fd[:, -1] = yn
    y_fd[:, :-1] = (0.05 + 0.9 * u[:, :-1]) * margin[:, None]
    fd = _fd_jacobian_determinant(cmap, y_fd)
    exact = jacobian_forward(cmap, y_fd)
    fd_rel = np.max(np.abs(fd - exact) / np.abs(exact))

    xg = quasi_random_interior(cmap.params, samples)
    t = xg[:, -1]
    worst = 0.0
    for face in boundary_faces(n):
        if not face.is_side:
            continue
        lo, hi = tangential_jacobian_bounds(cmap, t)
        if face.kind == "flat":
            val = tangential_jacobian(cmap, face, t)
        else:
            xhat = xg[:, [j for j in range(n - 1) if j != face.index - 1]]
            val = tangential_jacobian(cmap, face, t, xhat=xhat)
        viol = np.maximum(lo - val, val - hi) / np.maximum(1.0, np.abs(val))
        worst = max(worst, float(np.max(viol)))
    return JacobianSuiteReport(
        samples=samples,
        max_roundtrip=float(rt),
        max_reciprocity=float(rec),
        max_fd_rel=float(fd_rel),
        max_sandwich_violation=worst,
    )


@dataclass(frozen=True)
class MeasureSuiteReport:
    volume_rel_err: float
    area_discrepancy_const: float
    area_discrepancy_height: float
    area_discrepancy_first: float
    change_of_variables: float

    @property
    def ok(self) -> bool:
        return (self.volume_rel_err < 1e-8
                and self.area_discrepancy_const < 1e-6
                and self.area_discrepancy_height < 1e-6
                and self.area_discrepancy_first < 1e-6
                and self.change_of_variables < 1e-8)

    def as_dict(self) -> dict:
        return {
            "volume_rel_err": self.volume_rel_err,
            "area_discrepancy_const": self.area_discrepancy_const,
            "area_discrepancy_height": self.area_discrepancy_height,
            "area_discrepancy_first": self.area_discrepancy_first,
            "change_of_variables": self.change_of_variables,
            "ok": self.ok,
        }


def measure_suite(cmap: CuspMap) -> MeasureSuiteReport:
    """Volume identity, area formula for three probes, change of variables."""
    params = cmap.params
    rule = graded_interval_rule(0.0)
    vol = volume_integral(lambda t: np.ones_like(t), params, rule=rule)
    vol_err = abs(vol - 1.0 / params.gamma) * params.gamma
    probes = [
        lambda yx: np.ones(yx.shape[0]),
        lambda yx: yx[:, -1],
        lambda yx: yx[:, 0],
    ]
    areas = [area_formula_check(g, cmap) for g in probes]
    chvf = change_of_variables_check(lambda xx: np.ones(xx.shape[0]), cmap)
    return MeasureSuiteReport(
        volume_rel_err=float(vol_err),
        area_discrepancy_const=float(areas[0]),
        area_discrepancy_height=float(areas[1]),
        area_discrepancy_first=float(areas[2]),
        change_of_variables=float(chvf),
    )
