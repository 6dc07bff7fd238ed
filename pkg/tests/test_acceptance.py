"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Tolerances are fixed here, not tuned at runtime. Every criterion also
carries a wall-clock budget that is asserted.
"""

import json
import time

import numpy as np

from ncusp.cli import main as cli_main
from ncusp.embedding import scaling_slopes, sharpness_scan
from ncusp.geometry import cusp_map, derived_exponents, validate_params
from ncusp.quadrature import volume_integral
from ncusp.steklov.fem import assemble_functionals
from ncusp.steklov.mesh import generate_cusp_mesh
from ncusp.steklov.solve import (
    SolverOptions,
    linear_oracle,
    minimize_rayleigh,
    trace_constant,
)
from ncusp.verify import jacobian_suite, measure_suite

from oracles import fd_gradient

P1 = dict(n=2, gamma=3.0, p=1.5)
P2 = dict(n=3, gamma=4.0, p=2.0)


def _report(num, description, ok):
    print(f"[{'PASS' if ok else 'FAIL'}] criterion {num}: {description}")
    assert ok, f"criterion {num} failed: {description}"


class Budget:
    def __init__(self, seconds):
        self.limit = seconds
        self.start = time.perf_counter()

    def check(self, num):
        elapsed = time.perf_counter() - self.start
        assert elapsed < self.limit, \
            f"criterion {num} exceeded its {self.limit}s budget ({elapsed:.1f}s)"


def test_criterion_1_exponent_identities():
    budget = Budget(1.0)
    rng = np.random.default_rng(101)
    worst_theta = worst_range = 0.0
    for _ in range(1000):
        n = int(rng.integers(2, 5))
        p = float(rng.uniform(1.1, n - 0.25))
        gamma = float(rng.uniform(n + 0.1, n + 2.5))
        params = validate_params(n, gamma, p, p * (n - 1) / (n - p), usage="trace")
        e = derived_exponents(params)
        worst_theta = max(worst_theta,
                          abs(e.theta_min(e.p_star) - e.beta) / max(1.0, abs(e.beta)))
        worst_range = max(worst_range,
                          abs(p * e.d_gamma / (n - p) - e.r_max) / max(1.0, e.r_max))
    ok = worst_theta <= 1e-12 and worst_range <= 1e-12
    budget.check(1)
    _report(1, f"exponent identities over 1000 tuples "
               f"(worst {max(worst_theta, worst_range):.2e} <= 1e-12)", ok)


def test_criterion_2_jacobian_suite():
    budget = Budget(5.0)
    configs = [
        validate_params(q=2.0, usage="steklov", **P1),
        validate_params(q=3.0, usage="steklov", **P2),
        validate_params(2, 2.0, 1.5, 2.0, simplex=True, usage="steklov"),
    ]
    reports = [jacobian_suite(cusp_map(params), samples=10000)
               for params in configs]
    ok = all(r.ok for r in reports)
    budget.check(2)
    detail = ", ".join(
        f"rt {r.max_roundtrip:.1e}/rec {r.max_reciprocity:.1e}/"
        f"fd {r.max_fd_rel:.1e}/sw {r.max_sandwich_violation:.1e}"
        for r in reports)
    _report(2, f"jacobian suite at 1e4 points on P1, P2, simplex ({detail})", ok)


def test_criterion_3_measure_identities():
    budget = Budget(5.0)
    p1 = validate_params(q=2.0, usage="steklov", **P1)
    p2 = validate_params(q=3.0, usage="steklov", **P2)
    vol_errs = []
    for params in (p1, p2):
        vol = volume_integral(lambda t: np.ones_like(t), params)
        vol_errs.append(abs(vol - 1.0 / params.gamma) * params.gamma)
    meas = measure_suite(cusp_map(p1))
    areas = (meas.area_discrepancy_const, meas.area_discrepancy_height,
             meas.area_discrepancy_first)
    ok = max(vol_errs) < 1e-8 and max(areas) < 1e-6
    budget.check(3)
    _report(3, f"volume identity (err {max(vol_errs):.1e} < 1e-8) and area "
               f"formula for (1, y_n, y_1) (worst {max(areas):.1e} < 1e-6)", ok)


def test_criterion_4_sharpness_scaling():
    budget = Budget(10.0)
    ok = True
    details = []
    for cfg, q in ((P1, 3.0), (P2, 4.0)):
        params = validate_params(q=q, usage="trace", **cfg)
        beta = derived_exponents(params).beta
        for theta in (beta - 0.5, beta, beta + 0.5):
            res = scaling_slopes(params, theta, q)
            ok &= abs(res.lhs_slope - res.predicted_lhs) < 0.02
            ok &= abs(res.rhs_slope - res.predicted_rhs) < 0.02
            if theta == beta:
                ok &= abs(res.lhs_slope - res.rhs_slope) < 0.02
        details.append(f"{cfg['n']}d ok")
    p1 = validate_params(q=2.0, usage="steklov", **P1)
    scan = sharpness_scan(p1, 2.0, [0.5, 0.8, 1.0, 1.2, 1.5])
    for theta, gap, dist in scan.rows:
        if abs(dist) >= 0.05:
            ok &= np.sign(gap) == np.sign(dist)
    budget.check(4)
    _report(4, "fitted slopes within 0.02 of predicted exponents at "
               "theta in {beta, beta+-0.5}; sign scan correct", ok)


def test_criterion_5_steklov_oracle_equivalence():
    budget = Budget(60.0)
    p1 = validate_params(q=2.0, usage="steklov", **P1)
    grid = generate_cusp_mesh(p1, levels=10)
    beta = derived_exponents(p1).beta
    ok = True
    details = []
    for theta in (0.0, beta):
        params = validate_params(2, 3.0, 2.0, 2.0, theta=theta, usage="discrete")
        lam_oracle, _ = linear_oracle(grid, theta=theta)
        sol = minimize_rayleigh(grid, params,
                                SolverOptions(tol_rel=1e-9, restarts=2))
        rel = abs(sol.lam - lam_oracle) / lam_oracle
        lagrange = abs(sol.lam - sol.energy) / max(1.0, sol.energy)
        ok &= rel < 1e-6 and sol.residual < 1e-8 and lagrange < 1e-8
        details.append(f"theta={theta:g}: rel {rel:.1e}, res {sol.residual:.1e}")
    budget.check(5)
    _report(5, f"p=q=2 oracle equivalence on levels-10 mesh "
               f"({grid.num_vertices} dof; {'; '.join(details)})", ok)


def test_criterion_6_gradient_checks():
    budget = Budget(10.0)
    p1 = validate_params(q=2.0, usage="steklov", **P1)
    grid = generate_cusp_mesh(p1, levels=3, rows_per_strip=4)
    rng = np.random.default_rng(606)
    worst = 0.0
    for p in (1.5, 2.0):
        params = validate_params(2, 3.0, p, 2.0, theta=2.0, usage="discrete")
        for _ in range(10):
            u = rng.standard_normal(grid.num_vertices)
            _, gE, _, gB = assemble_functionals(grid, u, params, reg_eps=1e-8)
            fE = fd_gradient(lambda v: assemble_functionals(
                grid, v, params, reg_eps=1e-8)[0], u, h=1e-6)
            fB = fd_gradient(lambda v: assemble_functionals(
                grid, v, params, reg_eps=1e-8)[2], u, h=1e-6)
            worst = max(worst,
                        np.linalg.norm(fE - gE) / np.linalg.norm(gE),
                        np.linalg.norm(fB - gB) / np.linalg.norm(gB))
    ok = worst < 1e-5
    budget.check(6)
    _report(6, f"E and B gradients vs central differences at 20 states "
               f"(worst rel {worst:.1e} < 1e-5)", ok)


def test_criterion_7_trace_constant_bound():
    budget = Budget(120.0)
    ok = True
    details = []
    for cfg, q in ((dict(n=2, gamma=3.0, p=1.5), 2.0),
                   (dict(n=2, gamma=2.5, p=1.25), 1.6)):
        cusp_params = validate_params(q=q, usage="steklov", **cfg)
        simp_params = validate_params(2, 2.0, cfg["p"], q, theta=0.0,
                                      simplex=True, usage="steklov")
        cusp_grid = generate_cusp_mesh(cusp_params, levels=7, rows_per_strip=20)
        simp_grid = generate_cusp_mesh(simp_params, levels=7, rows_per_strip=20)
        opts = SolverOptions(tol_rel=1e-8, restarts=2, seed=1)
        lam_c = minimize_rayleigh(cusp_grid, cusp_params, opts).lam
        lam_s = minimize_rayleigh(simp_grid, simp_params, opts).lam
        bound = trace_constant(lam_c, cusp_params,
                               ctr_reference=lam_s ** (-1.0 / cfg["p"]))
        ratio = bound.c_tr / (bound.bound_factor * bound.reference_c_tr)
        ok &= ratio <= 1.05
        details.append(f"p={cfg['p']}: ratio {ratio:.3f}")
        if cfg["p"] == 1.5:
            ok &= abs(bound.bound_factor - 1.32770) < 2e-5
    budget.check(7)
    _report(7, f"trace-constant bound holds with 5% slack ({'; '.join(details)})", ok)


def test_criterion_8_refinement_stability():
    budget = Budget(120.0)
    params = validate_params(2, 3.0, 1.5, 2.0, usage="steklov")
    lams = []
    for levels in (6, 8, 10):
        grid = generate_cusp_mesh(params, levels=levels)
        sol = minimize_rayleigh(grid, params,
                                SolverOptions(tol_rel=1e-8, restarts=1))
        lams.append(sol.lam)
    d1, d2 = abs(lams[1] - lams[0]), abs(lams[2] - lams[1])
    ok = d1 > d2
    budget.check(8)
    _report(8, f"eigenvalue differences decrease under refinement "
               f"({d1:.2e} > {d2:.2e})", ok)


def test_criterion_9_cli_reproducibility(tmp_path):
    budget = Budget(60.0)
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({
        "params": {"n": 2, "p": 1.5, "gamma": 3.0, "q": 2.0},
        "mesh": {"levels": 5, "rows_per_strip": 8},
        "solver": {"tol_rel": 1e-8, "restarts": 2},
    }))
    scaling_cfg = tmp_path / "scaling.json"
    scaling_cfg.write_text(json.dumps({
        "params": {"n": 2, "p": 1.5, "gamma": 3.0, "q": 3.0, "theta": 2.0},
    }))
    ok = True
    for command, conf, names in (
            ("solve", cfg, ("solve.json", "solve.csv", "solve_nodal.csv")),
            ("scaling", scaling_cfg, ("scaling.json", "scaling.csv"))):
        runs = []
        for tag in ("a", "b"):
            out = tmp_path / f"{command}_{tag}"
            code = cli_main([command, "--config", str(conf), "--out", str(out),
                             "--seed", "42"])
            ok &= code == 0
            runs.append(out)
        for name in names:
            ok &= (runs[0] / name).read_bytes() == (runs[1] / name).read_bytes()
    budget.check(9)
    _report(9, "identical config and seed produce bit-identical artifacts", ok)
