"""P1 finite elements on graded cusp meshes: functionals, gradients, matrices.

The energy is the regularized p-Dirichlet integrand plus the zero-order
term,

    E(u) = sum_T area_T * (|grad u|^2 + eps^2)^(p/2)
         + sum_T area_T * sum_q w_q (u(x_q)^2 + eps^2)^(p/2),

and the boundary functional integrates the matching regularization of
|u|^q against the weight x2**theta along boundary edges. The same edge
quadrature builds the weighted boundary mass matrix, so the p = q = 2
functionals agree with the assembled matrices to machine precision. Edges
touching the origin use the graded interval rule so the power weight is
integrated accurately along the two tip edges.
"""

from __future__ import annotations

import weakref
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from ..errors import RangeViolation, ZeroTrace
from ..geometry import DomainParams
from ..quadrature import gauss_nodes_01, graded_interval_rule, triangle_rule
from .mesh import TriMesh

__all__ = [
    "FemFunction",
    "FemWorkspace",
    "workspace_for",
    "assemble_functionals",
    "rayleigh_quotient",
    "weak_residual",
    "fem_pnorms",
]


@dataclass(frozen=True)
class FemFunction:
    """Piecewise-linear nodal function on a triangulation."""

    mesh: TriMesh
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != (self.mesh.num_vertices,):
            raise RangeViolation("values", "one value per mesh vertex")


class FemWorkspace:
    """Precomputed geometry and quadrature for one (mesh, theta, p, q) setup."""

    def __init__(self, mesh: TriMesh, theta: float, p: float, q: float,
                 edge_order: int = 10, tri_order: int = 5,
                 tip_rule_panels: int = 30):
        self.mesh = mesh
        self.theta = float(theta)
        self.p = float(p)
        self.q = float(q)

        verts = mesh.vertices
        tris = mesh.triangles
        v = verts[tris]                                    # (nt, 3, 2)
        e1 = v[:, 1] - v[:, 0]
        e2 = v[:, 2] - v[:, 0]
        det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
        self.areas = 0.5 * det
        # P1 basis gradients: rows are grad of the hat at each local vertex
        grads = np.empty((tris.shape[0], 3, 2))
        opposite = v[:, [2, 0, 1]] - v[:, [1, 2, 0]]       # edge opposite vertex k
        grads[:, :, 0] = -opposite[:, :, 1]
        grads[:, :, 1] = opposite[:, :, 0]
        grads /= det[:, None, None]
        self.grads = grads
        self.tris = tris

        rule = triangle_rule(tri_order)
        self.tri_bary = rule.barycentric                   # (kq, 3)
        self.tri_w = rule.weights

        # flattened boundary quadrature; tip edges get the graded rule
        xg, wg = gauss_nodes_01(edge_order)
        tip_rule = graded_interval_rule(min(0.0, self.theta),
                                        panels=tip_rule_panels)
        qp_i, qp_j, qp_lam, qp_wf = [], [], [], []
        for (i, j), tag in zip(mesh.boundary_edges, mesh.boundary_tags):
            vi, vj = verts[i], verts[j]
            length = float(np.linalg.norm(vj - vi))
            at_origin_i = vi[1] == 0.0 and vi[0] == 0.0
            at_origin_j = vj[1] == 0.0 and vj[0] == 0.0
            if at_origin_i or at_origin_j:
                # parametrize from the origin towards the other endpoint
                far = vj if at_origin_i else vi
                s = tip_rule.nodes
                w = tip_rule.weights * length
                lam_far = s
                heights = s * far[1]
                weight = w * heights ** self.theta
                if at_origin_i:
                    lam = lam_far                   # fraction of endpoint j
                else:
                    lam = 1.0 - lam_far
            else:
                s = xg
                lam = s
                pos = vi[None, :] * (1.0 - s[:, None]) + vj[None, :] * s[:, None]
                weight = wg * length * pos[:, 1] ** self.theta
            qp_i.append(np.full(lam.shape, i, dtype=np.int64))
            qp_j.append(np.full(lam.shape, j, dtype=np.int64))
            qp_lam.append(lam)
            qp_wf.append(weight)
        self.edge_i = np.concatenate(qp_i)
        self.edge_j = np.concatenate(qp_j)
        self.edge_lam = np.concatenate(qp_lam)
        self.edge_wf = np.concatenate(qp_wf)

        nv = mesh.num_vertices
        self.num_dof = nv
        self._tri_rows = np.repeat(self.tris, 3, axis=1).ravel()
        self._tri_cols = np.tile(self.tris, (1, 3)).ravel()
        self._grad_gram = np.einsum("tid,tjd->tij", self.grads, self.grads) \
            * self.areas[:, None, None]
        self.stiffness = self._assemble_stiffness()
        self.mass = self._assemble_mass()
        self.boundary_mass = self._assemble_boundary_mass()

    # -- matrices ----------------------------------------------------------

    def _assemble_stiffness(self) -> sp.csr_matrix:
        nt = self.tris.shape[0]
        return sp.csr_matrix(
            (self._grad_gram.reshape(nt, 9).ravel(), (self._tri_rows, self._tri_cols)),
            shape=(self.num_dof, self.num_dof))

    def _assemble_mass(self) -> sp.csr_matrix:
        nt = self.tris.shape[0]
        ref = (np.ones((3, 3)) + np.eye(3)) / 12.0
        local = self.areas[:, None, None] * ref[None, :, :]
        return sp.csr_matrix(
            (local.reshape(nt, 9).ravel(), (self._tri_rows, self._tri_cols)),
            shape=(self.num_dof, self.num_dof))

    def metric_matrix(self, u: np.ndarray, reg_eps: float) -> sp.csr_matrix:
        """Lagged-diffusivity metric: stiffness and mass weighted by the
        current iterate's regularized p-Laplacian coefficients."""
        p = self.p
        eps2 = reg_eps * reg_eps
        nt = self.tris.shape[0]
        ut = u[self.tris]
        gu = np.einsum("tk,tkd->td", ut, self.grads)
        g2 = np.einsum("td,td->t", gu, gu) + eps2
        wk = p * g2 ** (0.5 * p - 1.0)
        local = wk[:, None, None] * self._grad_gram
        uq = ut @ self.tri_bary.T
        mw = p * (uq * uq + eps2) ** (0.5 * p - 1.0) * self.tri_w[None, :]
        local += self.areas[:, None, None] * np.einsum(
            "tq,qi,qj->tij", mw, self.tri_bary, self.tri_bary)
        return sp.csr_matrix(
            (local.reshape(nt, 9).ravel(), (self._tri_rows, self._tri_cols)),
            shape=(self.num_dof, self.num_dof))

    def _assemble_boundary_mass(self) -> sp.csr_matrix:
        lam, wf = self.edge_lam, self.edge_wf
        phi_i = 1.0 - lam
        phi_j = lam
        rows = np.concatenate([self.edge_i, self.edge_i, self.edge_j, self.edge_j])
        cols = np.concatenate([self.edge_i, self.edge_j, self.edge_i, self.edge_j])
        vals = np.concatenate([wf * phi_i * phi_i, wf * phi_i * phi_j,
                               wf * phi_j * phi_i, wf * phi_j * phi_j])
        return sp.csr_matrix((vals, (rows, cols)),
                             shape=(self.num_dof, self.num_dof))

    # -- functionals ---------------------------------------------------------

    def energy(self, u: np.ndarray, reg_eps: float, with_grad: bool = True):
        """Regularized energy and (optionally) its exact nodal gradient."""
        p = self.p
        eps2 = reg_eps * reg_eps
        ut = u[self.tris]                                   # (nt, 3)
        gu = np.einsum("tk,tkd->td", ut, self.grads)        # (nt, 2)
        g2 = np.einsum("td,td->t", gu, gu) + eps2
        e_grad = float(np.dot(self.areas, g2 ** (0.5 * p)))
        uq = ut @ self.tri_bary.T                           # (nt, kq)
        m2 = uq * uq + eps2
        e_mass = float(np.dot(self.areas, (m2 ** (0.5 * p)) @ self.tri_w))
        if not with_grad:
            return e_grad + e_mass, None
        grad = np.zeros(self.num_dof)
        coef = p * g2 ** (0.5 * p - 1.0) * self.areas       # (nt,)
        contrib = coef[:, None] * np.einsum("td,tkd->tk", gu, self.grads)
        np.add.at(grad, self.tris, contrib)
        mcoef = p * m2 ** (0.5 * p - 1.0) * uq              # (nt, kq)
        contrib_m = self.areas[:, None] * (mcoef * self.tri_w[None, :]) @ self.tri_bary
        np.add.at(grad, self.tris, contrib_m)
        return e_grad + e_mass, grad

    def boundary(self, u: np.ndarray, reg_eps: float, with_grad: bool = True):
        """Regularized weighted boundary functional and its nodal gradient."""
        q = self.q
        eps2 = reg_eps * reg_eps
        uv = u[self.edge_i] * (1.0 - self.edge_lam) + u[self.edge_j] * self.edge_lam
        b2 = uv * uv + eps2
        value = float(np.dot(self.edge_wf, b2 ** (0.5 * q)))
        if not with_grad:
            return value, None
        coef = self.edge_wf * q * b2 ** (0.5 * q - 1.0) * uv
        grad = np.zeros(self.num_dof)
        np.add.at(grad, self.edge_i, coef * (1.0 - self.edge_lam))
        np.add.at(grad, self.edge_j, coef * self.edge_lam)
        return value, grad

    def trace_integral(self, u: np.ndarray) -> float:
        """Weighted trace integral of u (sign-normalization functional)."""
        uv = u[self.edge_i] * (1.0 - self.edge_lam) + u[self.edge_j] * self.edge_lam
        return float(np.dot(self.edge_wf, uv))

    def residual(self, u: np.ndarray, lam: float, reg_eps: float) -> float:
        """Scaled sup-norm of the weak-form residual over nodal test functions."""
        e, ge = self.energy(u, reg_eps)
        _, gb = self.boundary(u, reg_eps)
        r = ge / self.p - lam * gb / self.q
        return float(np.max(np.abs(r)) / max(1.0, e))


_WORKSPACES: "weakref.WeakKeyDictionary[TriMesh, dict]" = weakref.WeakKeyDictionary()


def _cached_workspace(mesh: TriMesh, theta: float, p: float, q: float) -> FemWorkspace:
    key = (float(theta), float(p), float(q))
    per_mesh = _WORKSPACES.setdefault(mesh, {})
    ws = per_mesh.get(key)
    if ws is None:
        ws = FemWorkspace(mesh, theta, p, q)
        per_mesh[key] = ws
    return ws


def workspace_for(mesh: TriMesh, params: DomainParams,
                  theta: float | None = None) -> FemWorkspace:
    """Cached workspace for (mesh, theta, p, q)."""
    theta = params.theta if theta is None else float(theta)
    return _cached_workspace(mesh, theta, params.p, params.q)


def linear_workspace(mesh: TriMesh, theta: float) -> FemWorkspace:
    """Cached workspace for the p = q = 2 testbed (shared with descent runs)."""
    return _cached_workspace(mesh, theta, 2.0, 2.0)


def _values_of(u) -> np.ndarray:
    return u.values if isinstance(u, FemFunction) else np.asarray(u, dtype=float)


def assemble_functionals(mesh: TriMesh, u, params: DomainParams,
                         reg_eps: float = 1e-8):
    """Energy, boundary functional, and their exact gradients at u.

    Returns (E, grad_E, B, grad_B) of the regularized discrete functionals;
    the gradients differentiate exactly what the values integrate, so
    central differences of the values reproduce them.
    """
    ws = workspace_for(mesh, params)
    vals = _values_of(u)
    e, ge = ws.energy(vals, reg_eps)
    b, gb = ws.boundary(vals, reg_eps)
    return e, ge, b, gb


def rayleigh_quotient(mesh: TriMesh, u, params: DomainParams) -> float:
    """Unregularized Rayleigh quotient E(u) / B(u)^(p/q); exactly homogeneous."""
    ws = workspace_for(mesh, params)
    vals = _values_of(u)
    e, _ = ws.energy(vals, 0.0, with_grad=False)
    b, _ = ws.boundary(vals, 0.0, with_grad=False)
    if b <= 0.0:
        raise ZeroTrace("boundary trace vanishes; Rayleigh quotient undefined")
    return e / b ** (ws.p / ws.q)


def weak_residual(mesh: TriMesh, solution, params: DomainParams,
                  reg_eps: float | None = None) -> float:
    """Weak-form residual of an eigenpair candidate, normalized by max(1, E).

    ``solution`` is a SteklovSolution or an (u, lambda) pair; the residual
    uses the same regularized integrands as assemble_functionals.
    """
    if hasattr(solution, "u") and hasattr(solution, "lam"):
        u, lam = solution.u, solution.lam
        if reg_eps is None:
            reg_eps = solution.reg_eps
    else:
        u, lam = solution
        if reg_eps is None:
            reg_eps = 1e-8
    ws = workspace_for(mesh, params)
    vals = _values_of(u)
    b, _ = ws.boundary(vals, 0.0, with_grad=False)
    if b <= 0.0:
        raise ZeroTrace("residual is defined for unit-boundary-norm candidates")
    return ws.residual(vals, float(lam), reg_eps)


def fem_pnorms(u: FemFunction, p: float, tri_order: int = 5):
    """(gradient p-norm, function p-norm) of a mesh function."""
    mesh = u.mesh
    rule = triangle_rule(tri_order)
    v = mesh.vertices[mesh.triangles]
    e1 = v[:, 1] - v[:, 0]
    e2 = v[:, 2] - v[:, 0]
    det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    areas = 0.5 * det
    grads = np.empty((mesh.num_triangles, 3, 2))
    opposite = v[:, [2, 0, 1]] - v[:, [1, 2, 0]]
    grads[:, :, 0] = -opposite[:, :, 1]
    grads[:, :, 1] = opposite[:, :, 0]
    grads /= det[:, None, None]
    ut = u.values[mesh.triangles]
    gu = np.einsum("tk,tkd->td", ut, grads)
    gp = float(np.dot(areas, np.linalg.norm(gu, axis=1) ** p)) ** (1.0 / p)
    uq = ut @ rule.barycentric.T
    vp = float(np.dot(areas, (np.abs(uq) ** p) @ rule.weights)) ** (1.0 / p)
    return gp, vp
