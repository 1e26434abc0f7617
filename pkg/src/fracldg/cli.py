"""Command line: ``fracldg solve`` and ``fracldg converge``.

Exit status is 0 on success, 2 for a configuration error and 3 when a
solve fails.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .convergence import (ConvergenceReport, ReportRow, StudyConfig, StudyError, level_mesh,
                          parse_list, run_convergence, solve_manufactured)
from .mesh import MeshError, disk_mesh, load_mesh
from .riesz import QuadratureOrders, RieszError
from .special import SpecialFunctionError
from .timestep import LINEAR_SOLVERS, ConfigError, SolverConfig, SolverError

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER = 0, 2, 3


def _common(p: argparse.ArgumentParser, default_solver: str):
    p.add_argument("--k", type=int, default=1, choices=(1, 2), help="polynomial degree")
    p.add_argument("--flux", default="minus", choices=("plus", "minus"))
    p.add_argument("--theta", type=float, default=5.0, help="boundary penalty parameter")
    p.add_argument("--tau", type=float, default=2.5e-4, help="time step")
    p.add_argument("--T", type=float, default=1.0, help="final time")
    p.add_argument("--p", type=float, default=6.0, help="manufactured exponent")
    p.add_argument("--levels", help="comma-separated disk mesh levels (0..4)")
    p.add_argument("--divisions", help="comma-separated square divisions for the disk generator")
    p.add_argument("--mesh", help="mesh file(s), comma-separated; overrides the generator")
    p.add_argument("--out", help="CSV output path")
    p.add_argument("--quad-order", type=int, default=None, help="Gauss order of the pair rules")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--solver", default=default_solver, choices=LINEAR_SOLVERS,
                   help="linear solver for each backward Euler step")
    p.add_argument("--rtol", type=float, default=1e-12, help="CG relative residual")
    p.add_argument("--cache-dir", help="directory for cached Riesz Gram matrices")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fracldg", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    ps = sub.add_parser("solve", help="one manufactured-solution solve")
    ps.add_argument("--s", type=float, required=True, help="fractional order in (0, 1)")
    _common(ps, "cg")
    pc = sub.add_parser("converge", help="mesh-refinement study with observed rates")
    pc.add_argument("--s", required=True, help="comma-separated fractional orders")
    _common(pc, "modal")
    return ap


def _solve(args) -> int:
    sources = [x for x in (args.mesh, args.divisions, args.levels) if x]
    if len(sources) > 1:
        raise ConfigError("give only one of --mesh, --divisions, --levels")
    if args.mesh:
        mesh = load_mesh(Path(args.mesh))
    elif args.divisions:
        (n,) = parse_list(args.divisions, int)
        mesh = disk_mesh(n)
    else:
        levels = parse_list(args.levels, int) if args.levels else (2,)
        if len(levels) != 1:
            raise ConfigError("solve takes a single mesh level")
        mesh = level_mesh(levels[0])
    cfg = SolverConfig(s=args.s, k=args.k, flux=args.flux, theta=args.theta, tau=args.tau,
                       T=args.T, rtol=args.rtol, linear_solver=args.solver)
    if args.p < 0:
        raise ConfigError("p must be nonnegative")
    if args.threads < 1:
        raise ConfigError("threads must be positive")
    orders = QuadratureOrders.default(args.k, args.quad_order)
    res = solve_manufactured(mesh, cfg, args.p, orders, args.threads, args.cache_dir)
    row = ReportRow(res.s, res.k, res.flux, res.theta, res.h, res.K, res.dofs, res.tau, res.l2_error)
    report = ConvergenceReport([row], {"p": args.p, "T": args.T, "quad_orders": orders.key(),
                                       "rtol": args.rtol, "linear_solver": args.solver})
    print(report.table())
    if args.out:
        report.write(args.out)
    return EXIT_OK


def _converge(args) -> int:
    kw = {}
    if args.mesh:
        kw["mesh_paths"] = tuple(x for x in args.mesh.split(",") if x)
    elif args.divisions:
        kw["divisions"] = parse_list(args.divisions, int)
    elif args.levels:
        kw["levels"] = parse_list(args.levels, int)
    study = StudyConfig(s_values=parse_list(args.s, float), k=args.k, flux=args.flux, p=args.p,
                        theta=args.theta, tau=args.tau, T=args.T, quad_order=args.quad_order,
                        rtol=args.rtol, linear_solver=args.solver, threads=args.threads, **kw)
    report = run_convergence(study, cache_dir=args.cache_dir)
    print(report.table())
    if args.out:
        report.write(args.out)
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _solve(args) if args.command == "solve" else _converge(args)
    except (SolverError, StudyError, SpecialFunctionError) as exc:
        print(f"fracldg: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (ConfigError, MeshError, RieszError, ValueError, OSError) as exc:
        print(f"fracldg: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
