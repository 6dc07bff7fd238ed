import math

import numpy as np
import pytest

from ncusp.errors import ZeroTrace
from ncusp.geometry import validate_params
from ncusp.operators import weighted_boundary_norm
from ncusp.geometry import BoundaryFace
from ncusp.steklov.fem import (
    assemble_functionals,
    rayleigh_quotient,
    weak_residual,
    workspace_for,
)
from ncusp.steklov.mesh import generate_cusp_mesh, mesh_area
from ncusp.steklov.solve import (
    SolverOptions,
    linear_oracle,
    minimize_rayleigh,
    trace_constant,
)

from oracles import dense_smallest_pencil_eigenvalue, fd_gradient


@pytest.fixture(scope="module")
def small_mesh(p1_params):
    return generate_cusp_mesh(p1_params, levels=4, rows_per_strip=6)


@pytest.fixture(scope="module")
def simplex_mesh(simplex_params):
    return generate_cusp_mesh(simplex_params, levels=4, rows_per_strip=6)


def _discrete(theta, p=2.0, q=2.0):
    return validate_params(2, 3.0, p, q, theta=theta, usage="discrete")


class TestAssemble:
    def test_zero_function(self, small_mesh):
        params = _discrete(2.0)
        z = np.zeros(small_mesh.num_vertices)
        E, gE, B, gB = assemble_functionals(small_mesh, z, params, reg_eps=0.0)
        assert E == 0.0 and B == 0.0
        assert not gE.any() and not gB.any()

    def test_constant_function_p2(self, small_mesh):
        params = _discrete(2.0)
        u = np.ones(small_mesh.num_vertices)
        E, _, B, _ = assemble_functionals(small_mesh, u, params, reg_eps=0.0)
        assert E == pytest.approx(mesh_area(small_mesh), rel=1e-13)
        # boundary value approaches the exact weighted perimeter as the
        # polygonal boundary converges
        traces = {f: 1.0 for f in (BoundaryFace.flat(1), BoundaryFace.slanted(1),
                                   BoundaryFace.top())}
        exact = weighted_boundary_norm(traces, 1.0, 2.0, params).value
        assert B == pytest.approx(exact, rel=5e-4)

    @pytest.mark.parametrize("p", [1.5, 2.0])
    def test_gradients_match_central_differences(self, small_mesh, rng, p):
        params = _discrete(2.0, p=p, q=2.0)
        nv = small_mesh.num_vertices
        for _ in range(3):
            u = rng.standard_normal(nv)
            _, gE, _, gB = assemble_functionals(small_mesh, u, params, reg_eps=1e-8)
            fE = fd_gradient(lambda v: assemble_functionals(
                small_mesh, v, params, reg_eps=1e-8)[0], u)
            fB = fd_gradient(lambda v: assemble_functionals(
                small_mesh, v, params, reg_eps=1e-8)[2], u)
            assert np.linalg.norm(fE - gE) / np.linalg.norm(gE) < 1e-5
            assert np.linalg.norm(fB - gB) / np.linalg.norm(gB) < 1e-5


class TestRayleigh:
    def test_scaling_invariance(self, small_mesh, rng):
        params = validate_params(2, 3.0, 1.5, 2.0, usage="steklov")
        u = rng.standard_normal(small_mesh.num_vertices)
        base = rayleigh_quotient(small_mesh, u, params)
        for c in (-2.0, 0.5):
            assert rayleigh_quotient(small_mesh, c * u, params) \
                == pytest.approx(base, rel=1e-12)

    def test_constant_on_simplex(self, simplex_mesh, simplex_params):
        params = validate_params(2, 2.0, 2.0, 2.0, theta=0.0, simplex=True,
                                 usage="discrete")
        u = np.ones(simplex_mesh.num_vertices)
        val = rayleigh_quotient(simplex_mesh, u, params)
        assert val == pytest.approx(0.5 / (2 + math.sqrt(2)), rel=1e-12)

    def test_zero_trace_raises(self, small_mesh):
        params = _discrete(2.0)
        boundary = np.unique(small_mesh.boundary_edges.ravel())
        u = np.zeros(small_mesh.num_vertices)
        interior = np.setdiff1d(np.arange(small_mesh.num_vertices), boundary)
        u[interior] = 1.0
        with pytest.raises(ZeroTrace):
            rayleigh_quotient(small_mesh, u, params)


class TestLinearOracle:
    def test_against_dense_solve(self, small_mesh):
        params = _discrete(2.0)
        ws = workspace_for(small_mesh, params)
        lam, _ = linear_oracle(small_mesh, theta=2.0)
        ref = dense_smallest_pencil_eigenvalue(ws.stiffness + ws.mass,
                                               ws.boundary_mass)
        assert lam == pytest.approx(ref, rel=1e-10)

    def test_positive(self, small_mesh, simplex_mesh):
        for grid, theta in ((small_mesh, 0.0), (small_mesh, 2.0),
                            (simplex_mesh, 0.0)):
            lam, _ = linear_oracle(grid, theta=theta)
            assert lam > 0

    def test_refinement_differences_decrease(self, p1_params):
        lams = []
        for lv in (4, 6, 8, 10):
            grid = generate_cusp_mesh(p1_params, levels=lv)
            lams.append(linear_oracle(grid, theta=2.0)[0])
        diffs = np.abs(np.diff(lams))
        assert diffs[0] > diffs[1] > diffs[2]


class TestMinimize:
    def test_oracle_equivalence(self, small_mesh):
        for theta in (0.0, 2.0):
            params = _discrete(theta)
            lam_o, _ = linear_oracle(small_mesh, theta=theta)
            sol = minimize_rayleigh(small_mesh, params,
                                    SolverOptions(tol_rel=1e-9, restarts=2))
            assert abs(sol.lam - lam_o) / lam_o < 1e-6
            assert sol.converged

    def test_warm_start_terminates_immediately(self, small_mesh):
        params = _discrete(2.0)
        lam_o, u_o = linear_oracle(small_mesh, theta=2.0)
        sol = minimize_rayleigh(small_mesh, params,
                                SolverOptions(tol_rel=1e-9, restarts=1,
                                              initial=u_o.values))
        assert sol.iterations <= 3
        assert abs(sol.lam - lam_o) <= 1e-10 * lam_o

    def test_lagrange_identity_and_mu(self, small_mesh):
        params = validate_params(2, 3.0, 1.5, 2.0, usage="steklov")
        sol = minimize_rayleigh(small_mesh, params, SolverOptions(restarts=2))
        assert abs(sol.lam - sol.energy) < 1e-8 * max(1.0, sol.energy)
        assert sol.boundary_norm == pytest.approx(1.0, abs=1e-12)
        assert sol.mu == pytest.approx(sol.lam * params.p / params.q, rel=1e-15)
        assert sol.lam > 0

    def test_descent_monotone_history(self, small_mesh):
        params = validate_params(2, 3.0, 1.5, 2.0, usage="steklov")
        sol = minimize_rayleigh(small_mesh, params,
                                SolverOptions(restarts=1, track_history=True))
        hist = np.asarray(sol.history)
        assert hist.size > 1
        assert np.all(np.diff(hist) <= 1e-14 * np.abs(hist[:-1]) + 1e-300)

    def test_sign_normalization(self, small_mesh):
        params = _discrete(2.0)
        ws = workspace_for(small_mesh, params)
        sol = minimize_rayleigh(small_mesh, params, SolverOptions(restarts=2))
        assert ws.trace_integral(sol.u.values) >= 0.0


class TestWeakResidual:
    def test_oracle_pair_is_stationary(self, small_mesh):
        params = _discrete(2.0)
        lam, u = linear_oracle(small_mesh, theta=2.0)
        assert weak_residual(small_mesh, (u, lam), params) < 1e-10

    def test_perturbation_raises_residual(self, small_mesh, rng):
        params = _discrete(2.0)
        lam, u = linear_oracle(small_mesh, theta=2.0)
        base = weak_residual(small_mesh, (u, lam), params)
        noisy = u.values * (1.0 + 0.01 * rng.standard_normal(u.values.size))
        noisy_res = weak_residual(small_mesh, (noisy, lam), params)
        assert noisy_res > 10 * max(base, 1e-12)

    def test_solution_object_accepted(self, small_mesh):
        params = _discrete(2.0)
        sol = minimize_rayleigh(small_mesh, params,
                                SolverOptions(tol_rel=1e-9, restarts=1))
        assert weak_residual(small_mesh, sol, params) == pytest.approx(
            sol.residual, rel=1e-9)

    def test_zero_function_rejected(self, small_mesh):
        params = _discrete(2.0)
        with pytest.raises(ZeroTrace):
            weak_residual(small_mesh,
                          (np.zeros(small_mesh.num_vertices), 1.0), params)


class TestTraceConstant:
    def test_direct_power(self):
        params = validate_params(2, 3.0, 1.5, 2.0, usage="steklov")
        out = trace_constant(16.0, validate_params(3, 4.0, 2.0, 3.0,
                                                   usage="steklov"))
        assert out.c_tr == pytest.approx(16.0 ** -0.5, rel=1e-15)

    def test_p2_factor(self):
        params = validate_params(3, 4.0, 2.0, 3.0, usage="steklov")
        out = trace_constant(1.0, params)
        assert out.bound_factor == pytest.approx(2 ** (1 / 6) * math.sqrt(2.375),
                                                 rel=1e-12)
        assert out.bound_factor == pytest.approx(1.72983, abs=5e-6)

    def test_p1_factor(self):
        params = validate_params(2, 3.0, 1.5, 2.0, usage="steklov")
        out = trace_constant(1.0, params)
        assert out.bound_factor == pytest.approx(3 ** (1 / 6) * math.sqrt(11 / 9),
                                                 rel=1e-12)
        assert out.bound_factor == pytest.approx(1.32770, abs=2e-5)

    def test_hint(self):
        params = validate_params(2, 3.0, 1.5, 2.0, usage="steklov")
        out = trace_constant(1.0, params, ctr_reference=1.0)
        assert out.bound_holds_hint is True
        out2 = trace_constant(1e-6, params, ctr_reference=1.0)
        assert out2.bound_holds_hint is False
