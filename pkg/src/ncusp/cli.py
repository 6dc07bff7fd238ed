"""Command-line front end: JSON configs in, CSV/JSON artifacts out.

Subcommands:

    exponents        derived exponents and embedding ranges
    verify-geometry  Jacobian and measure-identity suites
    scaling          test-family norms and fitted slopes (or a theta scan)
    solve            Rayleigh minimization with residual and trace constant
    oracle-check     p = q = 2 descent vs. inverse-power oracle
    mesh             generate and export a graded triangulation

Every artifact embeds the fully resolved configuration and a schema string;
identical configs and seeds reproduce artifacts byte for byte. Exit codes:
0 success, 2 configuration or validation error, 3 numerical failure (the
artifact is still written when possible).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .embedding import scaling_slopes, sharpness_scan
from .errors import ConfigError, NumericalError, ValidationError
from .geometry import cusp_map, derived_exponents, validate_params
from .operators import embedding_ranges
from .steklov import (
    SolverOptions,
    generate_cusp_mesh,
    linear_oracle,
    minimize_rayleigh,
    save_mesh,
    trace_constant,
    weak_residual,
)
from .steklov.mesh import mesh_area
from .verify import jacobian_suite, measure_suite

SCHEMA = "ncusp-artifact v1"

log = logging.getLogger("ncusp")

_PARAM_KEYS = {"n", "p", "gamma", "q", "theta", "simplex"}
_MESH_KEYS = {"levels", "grading_ratio", "rows_per_strip", "aspect"}
_SOLVER_KEYS = {"max_iter", "tol_rel", "reg_eps", "restarts", "seed"}
_SCALING_KEYS = {"theta", "q", "theta_grid", "cutoff"}
_VERIFY_KEYS = {"samples"}
_ORACLE_KEYS = {"rtol"}
_MAP_KEYS = {"a"}
_TOP_KEYS = {"params", "mesh", "solver", "scaling", "verify", "oracle",
             "map", "output"}

_MESH_DEFAULTS = {"levels": 10, "grading_ratio": 0.5,
                  "rows_per_strip": None, "aspect": 1.0}
_SOLVER_DEFAULTS = {"max_iter": 500, "tol_rel": 1e-8, "reg_eps": 1e-8,
                    "restarts": 4, "seed": 0}


def _reject_unknown(section: dict, allowed: set, where: str) -> None:
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(sorted(unknown))}")


def load_config(path: str) -> dict:
    """Parse and structurally validate a run configuration."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    _reject_unknown(raw, _TOP_KEYS, "config")
    if "params" not in raw:
        raise ConfigError("config requires a 'params' block")
    _reject_unknown(raw["params"], _PARAM_KEYS, "params")
    for block, keys in (("mesh", _MESH_KEYS), ("solver", _SOLVER_KEYS),
                        ("scaling", _SCALING_KEYS), ("verify", _VERIFY_KEYS),
                        ("oracle", _ORACLE_KEYS), ("map", _MAP_KEYS)):
        if block in raw:
            if not isinstance(raw[block], dict):
                raise ConfigError(f"'{block}' must be an object")
            _reject_unknown(raw[block], keys, block)
    return raw


def _resolve(raw: dict, seed_override: int | None, threads: int) -> dict:
    params = dict(raw["params"])
    mesh_cfg = {**_MESH_DEFAULTS, **raw.get("mesh", {})}
    solver_cfg = {**_SOLVER_DEFAULTS, **raw.get("solver", {})}
    if seed_override is not None:
        solver_cfg["seed"] = seed_override
    return {
        "params": params,
        "mesh": mesh_cfg,
        "solver": solver_cfg,
        "scaling": dict(raw.get("scaling", {})),
        "verify": {"samples": raw.get("verify", {}).get("samples", 10000)},
        "oracle": {"rtol": raw.get("oracle", {}).get("rtol", 1e-6)},
        "map": dict(raw.get("map", {})),
        "output": raw.get("output", ""),
        "threads": threads,
        "version": __version__,
    }


def _params_from(cfg: dict, usage: str):
    p = cfg["params"]
    for key in ("n", "p", "gamma"):
        if key not in p:
            raise ConfigError(f"params.{key} is required")
    q = p.get("q")
    if q is None:
        if usage in ("steklov", "discrete"):
            raise ConfigError("params.q is required for this command")
        # trace-side commands default to the critical exponent
        q = p["p"] * (p["n"] - 1) / (p["n"] - p["p"])
    return validate_params(p["n"], p["gamma"], p["p"], q,
                           theta=p.get("theta"), simplex=p.get("simplex", False),
                           usage=usage)


def _json_text(payload: dict) -> str:
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def _write(outdir: Path, name: str, text: str) -> Path:
    outdir.mkdir(parents=True, exist_ok=True)
    path = outdir / name
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
    log.info("wrote %s", path)
    return path


def _csv_text(cfg: dict, command: str, header: str, rows: list[str]) -> str:
    lines = [f"# schema: {SCHEMA}",
             f"# command: {command}",
             "# config: " + json.dumps(cfg, sort_keys=True),
             header]
    lines.extend(rows)
    return "\n".join(lines) + "\n"


def _artifact(cfg: dict, command: str, body: dict) -> dict:
    return {"schema": SCHEMA, "command": command, "config": cfg, **body}


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

def cmd_exponents(cfg: dict, outdir: Path) -> int:
    params = _params_from(cfg, usage="trace")
    exps = derived_exponents(params)
    ranges = embedding_ranges(params)
    body = {
        "exponents": {
            "alpha": exps.alpha,
            "a_max": exps.a_max,
            "beta": exps.beta,
            "p_star": exps.p_star,
            "r_max": exps.r_max,
            "d_gamma": exps.d_gamma,
            "gv_q_min": exps.gv_q_min,
            "theta_min_at_q": exps.theta_min(params.q),
            "theta": params.theta,
        },
        "ranges": {
            "unweighted_r_range": (list(ranges.unweighted_r_range)
                                   if ranges.unweighted_r_range else "empty"),
            "holder_q_min_at_r1": ranges.holder_q_min(1.0),
        },
    }
    _write(outdir, "exponents.json", _json_text(_artifact(cfg, "exponents", body)))
    return 0


def cmd_verify_geometry(cfg: dict, outdir: Path) -> int:
    params = _params_from(cfg, usage="trace")
    cmap = cusp_map(params, a=cfg["map"].get("a"))
    jac = jacobian_suite(cmap, samples=int(cfg["verify"]["samples"]))
    body = {"jacobian_suite": jac.as_dict()}
    ok = jac.ok
    if params.n == 2:
        meas = measure_suite(cmap)
        body["measure_suite"] = meas.as_dict()
        ok = ok and meas.ok
    body["ok"] = ok
    _write(outdir, "verify_geometry.json",
           _json_text(_artifact(cfg, "verify-geometry", body)))
    return 0 if ok else 3


def cmd_scaling(cfg: dict, outdir: Path) -> int:
    params = _params_from(cfg, usage="trace")
    sc = cfg["scaling"]
    theta = sc.get("theta", params.theta)
    q = sc.get("q", params.q)
    if "theta_grid" in sc:
        scan = sharpness_scan(params, q, sc["theta_grid"])
        rows = [f"{row[0]!r},{row[1]!r},{row[2]!r}" for row in scan.rows]
        _write(outdir, "sharpness.csv",
               _csv_text(cfg, "scaling", "theta,slope_gap,theta_gap", rows))
        body = {"theta_min": scan.theta_min,
                "rows": [list(map(float, row)) for row in scan.rows]}
        _write(outdir, "sharpness.json", _json_text(_artifact(cfg, "scaling", body)))
        return 0
    res = scaling_slopes(params, theta, q)
    rows = [
        f"{float(e)!r},{float(l)!r},{float(r)!r},{float(l / r)!r}"
        for e, l, r in zip(res.eps_grid, res.lhs_norms, res.rhs_norms)
    ]
    _write(outdir, "scaling.csv",
           _csv_text(cfg, "scaling", "eps,lhs_norm,rhs_norm,ratio", rows))
    body = {
        "theta": theta,
        "q": q,
        "lhs_slope": res.lhs_slope,
        "rhs_slope": res.rhs_slope,
        "predicted_lhs": res.predicted_lhs,
        "predicted_rhs": res.predicted_rhs,
    }
    _write(outdir, "scaling.json", _json_text(_artifact(cfg, "scaling", body)))
    return 0


def _build_mesh(cfg: dict, params):
    m = cfg["mesh"]
    return generate_cusp_mesh(params, levels=int(m["levels"]),
                              grading_ratio=float(m["grading_ratio"]),
                              rows_per_strip=m["rows_per_strip"],
                              aspect=float(m["aspect"]))


def _solver_options(cfg: dict) -> SolverOptions:
    s = cfg["solver"]
    return SolverOptions(max_iter=int(s["max_iter"]), tol_rel=float(s["tol_rel"]),
                         reg_eps=float(s["reg_eps"]), restarts=int(s["restarts"]),
                         seed=int(s["seed"]))


def cmd_solve(cfg: dict, outdir: Path) -> int:
    # p == q is the linear testbed, outside the strict exponent window
    usage = "discrete" if cfg["params"].get("p") == cfg["params"].get("q") \
        else "steklov"
    params = _params_from(cfg, usage=usage)
    grid = _build_mesh(cfg, params)
    sol = minimize_rayleigh(grid, params, _solver_options(cfg))
    bound = trace_constant(sol.lam, params) if usage == "steklov" else None
    body = {
        "lambda": sol.lam,
        "mu": sol.mu,
        "energy": sol.energy,
        "boundary_norm": sol.boundary_norm,
        "residual": sol.residual,
        "iterations": sol.iterations,
        "restarts": sol.restarts,
        "converged": sol.converged,
        "dof": sol.dof,
        "c_tr": bound.c_tr if bound else sol.lam ** (-1.0 / params.p),
        "bound_factor": bound.bound_factor if bound else None,
        "params": {"n": params.n, "p": params.p, "gamma": params.gamma,
                   "q": params.q, "theta": params.theta},
    }
    _write(outdir, "solve.json", _json_text(_artifact(cfg, "solve", body)))
    row = ",".join(repr(float(v)) for v in (
        sol.lam, sol.mu, sol.energy, sol.boundary_norm, sol.residual))
    row += f",{sol.iterations},{sol.dof}"
    _write(outdir, "solve.csv",
           _csv_text(cfg, "solve",
                     "lambda,mu,energy,boundary_norm,residual,iters,dof", [row]))
    nodal = [
        f"{i},{float(x1)!r},{float(x2)!r},{float(v)!r}"
        for i, ((x1, x2), v) in enumerate(zip(grid.vertices, sol.u.values))
    ]
    _write(outdir, "solve_nodal.csv",
           _csv_text(cfg, "solve", "vertex_index,x1,x2,u", nodal))
    return 0 if sol.converged else 3


def cmd_oracle_check(cfg: dict, outdir: Path) -> int:
    params = _params_from(cfg, usage="discrete")
    if params.p != 2.0 or params.q != 2.0:
        raise ConfigError("oracle-check requires params.p == params.q == 2")
    grid = _build_mesh(cfg, params)
    lam_oracle, u_oracle = linear_oracle(grid, params.theta)
    sol = minimize_rayleigh(grid, params, _solver_options(cfg))
    rel = abs(sol.lam - lam_oracle) / lam_oracle
    rtol = float(cfg["oracle"]["rtol"])
    body = {
        "lambda_descent": sol.lam,
        "lambda_oracle": lam_oracle,
        "rel_difference": rel,
        "rtol": rtol,
        "descent_residual": sol.residual,
        "oracle_residual": weak_residual(grid, (u_oracle, lam_oracle), params,
                                         reg_eps=cfg["solver"]["reg_eps"]),
        "dof": sol.dof,
        "agree": bool(rel < rtol),
    }
    _write(outdir, "oracle_check.json",
           _json_text(_artifact(cfg, "oracle-check", body)))
    return 0 if rel < rtol else 3


def cmd_mesh(cfg: dict, outdir: Path) -> int:
    params = _params_from(cfg, usage="trace")
    grid = _build_mesh(cfg, params)
    outdir.mkdir(parents=True, exist_ok=True)
    save_mesh(grid, outdir / "mesh.txt")
    log.info("wrote %s", outdir / "mesh.txt")
    body = {
        "vertices": grid.num_vertices,
        "triangles": grid.num_triangles,
        "boundary_edges": int(grid.boundary_edges.shape[0]),
        "min_quality": grid.min_quality,
        "area": mesh_area(grid),
        "area_rel_err": abs(mesh_area(grid) - 1.0 / params.gamma) * params.gamma,
        "tip_height": grid.tip_height,
    }
    _write(outdir, "mesh.json", _json_text(_artifact(cfg, "mesh", body)))
    return 0


_COMMANDS = {
    "exponents": cmd_exponents,
    "verify-geometry": cmd_verify_geometry,
    "scaling": cmd_scaling,
    "solve": cmd_solve,
    "oracle-check": cmd_oracle_check,
    "mesh": cmd_mesh,
}


def _setup_logging() -> None:
    level = {"quiet": logging.WARNING, "info": logging.INFO,
             "debug": logging.DEBUG}.get(os.environ.get("NCUSP_LOG", "info"),
                                         logging.INFO)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def main(argv=None) -> int:
    _setup_logging()
    parser = argparse.ArgumentParser(
        prog="ncusp",
        description="Weighted trace machinery and Steklov solvers on cusp domains")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="JSON run configuration")
        sp.add_argument("--out", default=".", help="output directory")
        sp.add_argument("--seed", type=int, default=None,
                        help="override the solver seed")
        sp.add_argument("--threads", type=int, default=1,
                        help="accepted for compatibility; execution is single-threaded")
    args = parser.parse_args(argv)
    try:
        raw = load_config(args.config)
        cfg = _resolve(raw, args.seed, args.threads)
        return _COMMANDS[args.command](cfg, Path(args.out))
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
