"""Independent reference computations the library is tested against.

Everything here deliberately avoids the code paths under test: adaptive
quadrature comes from scipy, eigenvalues from a dense Schur-complement
solve, tangential Jacobians from finite-difference Gram determinants.
"""

import numpy as np
import scipy.integrate
import scipy.linalg


def adaptive_quad(f, a, b, **kw):
    """Adaptive scalar quadrature (scipy.integrate.quad wrapper)."""
    val, _ = scipy.integrate.quad(f, a, b, limit=400, **kw)
    return val


def dense_smallest_pencil_eigenvalue(A, Mb):
    """Smallest lambda of A u = lambda Mb u with singular Mb.

    Eliminates the null space of Mb by a dense Schur complement onto the
    degrees of freedom where Mb acts, then solves the reduced symmetric
    generalized problem.
    """
    A = np.asarray(A.todense())
    Mb = np.asarray(Mb.todense())
    active = np.where(np.abs(Mb).sum(axis=1) > 0)[0]
    inactive = np.setdiff1d(np.arange(A.shape[0]), active)
    Abb = A[np.ix_(active, active)]
    Abi = A[np.ix_(active, inactive)]
    Aii = A[np.ix_(inactive, inactive)]
    S = Abb - Abi @ np.linalg.solve(Aii, Abi.T)
    Mbb = Mb[np.ix_(active, active)]
    vals = scipy.linalg.eigh(S, Mbb, eigvals_only=True)
    return float(vals[0])


def fd_tangential_jacobian(cmap, face, t, xhat=None, h=1e-6):
    """Tangential Jacobian of the inverse map on a face via Gram determinants.

    Builds the chart of the face, differentiates both the chart and the
    composed map numerically, and returns
    sqrt(det G_composed) / sqrt(det G_chart) at the chart point.
    """
    n, alpha, a = cmap.n, cmap.alpha, cmap.a
    i = face.index - 1
    cross = [j for j in range(n - 1) if j != i]
    if xhat is None:
        xhat = np.zeros(len(cross))

    def chart(u):
        # u = (xhat..., t)
        x = np.zeros(n)
        x[-1] = u[-1]
        if face.kind == "slanted":
            x[i] = u[-1] ** alpha
        for col, val in zip(cross, u[:-1]):
            x[col] = val
        return x

    def mapped(u):
        x = chart(u)
        y = np.empty(n)
        y[-1] = x[-1] ** (1.0 / a)
        y[:-1] = x[:-1] * x[-1] ** ((1.0 - a * alpha) / a)
        return y

    u0 = np.append(np.asarray(xhat, dtype=float), t)
    dim = u0.size

    def gram_sqrt(fn):
        cols = []
        for k in range(dim):
            step = np.zeros(dim)
            step[k] = h * max(1.0, abs(u0[k]))
            cols.append((fn(u0 + step) - fn(u0 - step)) / (2 * step[k]))
        J = np.stack(cols, axis=1)
        return np.sqrt(np.linalg.det(J.T @ J))

    return gram_sqrt(mapped) / gram_sqrt(chart)


def fd_gradient(fn, x, h=1e-6):
    """Dense central-difference gradient of a scalar function of a vector."""
    g = np.empty_like(x)
    for k in range(x.size):
        step = np.zeros_like(x)
        step[k] = h
        g[k] = (fn(x + step) - fn(x - step)) / (2 * h)
    return g
