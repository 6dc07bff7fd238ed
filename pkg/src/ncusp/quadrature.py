"""Graded 1-D rules and triangle rules for power-weight integrands.

The interval rules are composite Gauss rules on panels graded geometrically
toward 0, where the integrands of interest behave like t**sigma with sigma
possibly negative. The tip itself is never a node. Grading depth is twice
the requested panel count (plus a closing panel), which puts the t**(-1/2)
probe below 1e-12 relative error at the default 40 panels while keeping the
error visibly convergent under panel doubling; exponents close to the -1
integrability threshold trigger an automatically deepened tail.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import NonIntegrable, RangeViolation, UnsupportedOrder
from .geometry import DomainParams, face_parametrization, powt

__all__ = [
    "GradedRule",
    "TriangleRule",
    "graded_interval_rule",
    "triangle_rule",
    "boundary_integral",
    "volume_integral",
    "gauss_nodes_01",
]

_TAIL_TRIGGER = -0.6       # exponents below this get the deepened tail
_TAIL_TARGET = 1e-9        # truncation target for the deepened tail
_MIN_BREAKPOINT = 1e-250   # keep breakpoints well inside normal doubles


@lru_cache(maxsize=None)
def gauss_nodes_01(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights transplanted to (0, 1)."""
    x, w = np.polynomial.legendre.leggauss(order)
    return 0.5 * (x + 1.0), 0.5 * w


@dataclass(frozen=True)
class GradedRule:
    """Composite Gauss rule on (0, 1), graded toward 0.

    ``panels`` records the requested grading depth; ``nodes`` includes the
    automatically extended tail. All nodes are strictly interior.
    """

    nodes: np.ndarray
    weights: np.ndarray
    grading_ratio: float
    panels: int
    min_exponent: float
    gauss_order: int

    def integrate(self, f, upper: float = 1.0) -> float:
        """Integrate f over (0, upper); grading scales with the interval."""
        if upper <= 0.0:
            raise RangeViolation("upper", "upper > 0")
        vals = np.asarray(f(upper * self.nodes), dtype=float)
        return float(upper * np.dot(self.weights, vals))


def graded_interval_rule(min_exponent: float, panels: int = 40,
                         ratio: float = 0.5, gauss_order: int = 8) -> GradedRule:
    """Build a graded rule accurate for integrands c * t**sigma, sigma >= min_exponent.

    Raises NonIntegrable at or below the sigma = -1 threshold.
    """
    if not math.isfinite(min_exponent) or min_exponent <= -1.0:
        raise NonIntegrable(f"min_exponent = {min_exponent:g} is <= -1")
    if panels < 4:
        raise RangeViolation("panels", "panels >= 4")
    if not 0.0 < ratio < 1.0:
        raise RangeViolation("ratio", "0 < ratio < 1")
    if gauss_order < 2:
        raise RangeViolation("gauss_order", "gauss_order >= 2")

    depth = 2 * panels - 1
    if min_exponent < _TAIL_TRIGGER:
        needed = math.log(_TAIL_TARGET) / (math.log(ratio) * (min_exponent + 1.0))
        depth = max(depth, int(math.ceil(needed)))
    depth = min(depth, int(math.log(_MIN_BREAKPOINT) / math.log(ratio)))

    breaks = ratio ** np.arange(depth + 1)
    lows = np.append(breaks[1:], 0.0)
    xg, wg = gauss_nodes_01(gauss_order)
    widths = breaks - lows
    nodes = (lows[:, None] + widths[:, None] * xg[None, :]).ravel()
    weights = (widths[:, None] * wg[None, :]).ravel()
    order = np.argsort(nodes)
    nodes, weights = nodes[order], weights[order]
    nodes.flags.writeable = False
    weights.flags.writeable = False
    return GradedRule(nodes=nodes, weights=weights, grading_ratio=ratio,
                      panels=panels, min_exponent=min_exponent,
                      gauss_order=gauss_order)


# --------------------------------------------------------------------------
# triangle rules
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class TriangleRule:
    """Symmetric quadrature rule on a triangle, weights normalized to sum 1."""

    barycentric: np.ndarray  # (k, 3)
    weights: np.ndarray      # (k,), sums to 1
    order: int

    def points(self, v0, v1, v2) -> np.ndarray:
        verts = np.stack([np.asarray(v0, float), np.asarray(v1, float),
                          np.asarray(v2, float)])
        return self.barycentric @ verts

    def integrate(self, f, v0, v1, v2) -> float:
        """Integrate f over one triangle with the given vertices."""
        verts = np.stack([np.asarray(v0, float), np.asarray(v1, float),
                          np.asarray(v2, float)])
        area = 0.5 * abs(
            (verts[1, 0] - verts[0, 0]) * (verts[2, 1] - verts[0, 1])
            - (verts[2, 0] - verts[0, 0]) * (verts[1, 1] - verts[0, 1]))
        vals = np.asarray(f(self.barycentric @ verts), dtype=float)
        return float(area * np.dot(self.weights, vals))


def _sym_points(groups):
    bary, w = [], []
    for a, b, weight in groups:
        pts = {(a, b, b), (b, a, b), (b, b, a)}
        for pt in sorted(pts):
            bary.append(pt)
            w.append(weight)
    return np.array(bary), np.array(w)


def _triangle_tables():
    third = 1.0 / 3.0
    tables = {}
    tables[1] = (np.array([[third, third, third]]), np.array([1.0]))
    tables[2] = _sym_points([(2.0 / 3.0, 1.0 / 6.0, third)])
    # degree-4 six-point rule (positive weights); also serves order 3
    b4, w4 = _sym_points([
        (0.108103018168070, 0.445948490915965, 0.223381589678011),
        (0.816847572980459, 0.091576213509771, 0.109951743655322),
    ])
    tables[3] = (b4, w4)
    tables[4] = (b4, w4)
    b5, w5 = _sym_points([
        (0.059715871789770, 0.470142064105115, 0.132394152788506),
        (0.797426985353087, 0.101286507323456, 0.125939180544827),
    ])
    bary5 = np.vstack([np.array([[third, third, third]]), b5])
    wts5 = np.concatenate([[0.225], w5])
    tables[5] = (bary5, wts5)
    return tables


_TRI_TABLES = _triangle_tables()


def triangle_rule(order: int) -> TriangleRule:
    """Rule exact for polynomials up to ``order`` on a triangle, order in 1..5."""
    if order not in _TRI_TABLES:
        raise UnsupportedOrder(f"triangle rule order must be in 1..5, got {order}")
    bary, w = _TRI_TABLES[order]
    bary = bary.copy()
    w = w.copy()
    bary.flags.writeable = False
    w.flags.writeable = False
    return TriangleRule(barycentric=bary, weights=w, order=order)


# --------------------------------------------------------------------------
# boundary and volume integrals
# --------------------------------------------------------------------------

def _tensor_cube_nodes(dim: int, order: int) -> tuple[np.ndarray, np.ndarray]:
    """Tensor Gauss nodes/weights on (0, 1)^dim; dim = 0 yields one unit point."""
    if dim == 0:
        return np.zeros((1, 0)), np.array([1.0])
    x, w = gauss_nodes_01(order)
    grids = np.meshgrid(*([x] * dim), indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=-1)
    wgrids = np.meshgrid(*([w] * dim), indexing="ij")
    wts = np.ones(pts.shape[0])
    for g in wgrids:
        wts *= g.ravel()
    return pts, wts


def boundary_integral(f, theta: float, faces, params: DomainParams,
                      rule: GradedRule | None = None, cross_order: int = 8) -> float:
    """Weighted boundary integral sum of f * x_n**theta over the given faces.

    f is called with points of shape (m, n). Side faces are reduced through
    their charts (graded rule in the height, tensor Gauss across); the top
    face uses tensor Gauss alone. Requires theta + alpha*(n-2) > -1 whenever
    a side face is present.
    """
    faces = list(faces)
    n, alpha = params.n, params.alpha
    has_side = any(face.is_side for face in faces)
    tip_exponent = theta + alpha * (n - 2)
    if has_side and tip_exponent <= -1.0:
        raise NonIntegrable(
            f"theta + alpha(n-2) = {tip_exponent:g} fails the > -1 threshold")
    if rule is None and has_side:
        rule = graded_interval_rule(min(0.0, tip_exponent))

    total = 0.0
    for face in faces:
        chart = face_parametrization(face, params)
        if face.kind == "top":
            pts, wts = _tensor_cube_nodes(n - 1, cross_order)
            xs = np.ones((pts.shape[0], n))
            xs[:, :-1] = pts
            total += float(np.dot(wts, np.asarray(f(xs), dtype=float)))
            continue
        t = rule.nodes
        width = powt(t, alpha)
        weight_t = powt(t, theta) * chart.slant_factor(t)
        cpts, cwts = _tensor_cube_nodes(n - 2, cross_order)
        face_sum = np.zeros_like(t)
        i = face.index - 1
        cross_cols = [j for j in range(n - 1) if j != i]
        for cp, cw in zip(cpts, cwts):
            xs = np.zeros((t.shape[0], n))
            xs[:, -1] = t
            if face.kind == "slanted":
                xs[:, i] = width
            if cross_cols:
                xs[:, cross_cols] = cp[None, :] * width[:, None]
            face_sum += cw * np.asarray(f(xs), dtype=float)
        cross_volume = powt(t, alpha * (n - 2))
        total += float(np.dot(rule.weights, weight_t * cross_volume * face_sum))
    return total


def volume_integral(f, params: DomainParams, mode: str = "reduced",
                    rule: GradedRule | None = None, mesh=None,
                    levels: int = 10, order: int = 5) -> float:
    """Integral of f over the cuspidal domain.

    mode="reduced": f depends on the height alone and is called as f(t);
    the cross section contributes the exact factor t**(alpha*(n-1)).
    mode="mesh": n = 2 only; f(x) with x of shape (m, 2), integrated with a
    triangle rule over a graded triangulation (supplied or generated).
    """
    n, alpha = params.n, params.alpha
    if mode == "reduced":
        if rule is None:
            rule = graded_interval_rule(0.0)
        sigma = alpha * (n - 1)
        return rule.integrate(lambda t: np.asarray(f(t), float) * powt(t, sigma))
    if mode != "mesh":
        raise RangeViolation("mode", "mode in {'reduced', 'mesh'}")
    if n != 2:
        raise RangeViolation("n", "mesh-based volume integrals are n = 2 only")
    if mesh is None:
        from .steklov.mesh import generate_cusp_mesh
        mesh = generate_cusp_mesh(params, levels=levels)
    tri = triangle_rule(order)
    verts = mesh.vertices[mesh.triangles]           # (nt, 3, 2)
    e1 = verts[:, 1] - verts[:, 0]
    e2 = verts[:, 2] - verts[:, 0]
    areas = 0.5 * np.abs(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
    total = 0.0
    for lam, w in zip(tri.barycentric, tri.weights):
        pts = np.einsum("k,nkd->nd", lam, verts)
        total += w * np.dot(areas, np.asarray(f(pts), dtype=float))
    return float(total)
