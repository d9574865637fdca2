"""Command-line driver: steady solves, verification audits, mesh generation.

Subcommands:
  run   <config>                solve, dump the field, run requested audits
  audit <config>                run requested audits on the exact interpolant
  mesh gen <nx> <ny> <out>      write a structured mesh file

Exit status is nonzero iff any requested audit fails (or on input errors).
"""

import argparse
import os
import sys

import numpy as np

from .audits import g17, run_audits, _scheme_cfg
from .config import ConfigError, RunConfig, load_config, render_config
from .mesh import MeshError, generate_structured_mesh, read_mesh, write_mesh
from .problems import builtin_problems
from .solver import DivergenceError, RunContext, solve_steady


def _build_context(cfg: RunConfig) -> RunContext:
    problems = builtin_problems()
    if cfg.problem not in problems:
        raise ConfigError(
            f"unknown problem {cfg.problem!r}; available: {sorted(problems)}"
        )
    if cfg.mesh_file:
        mesh = read_mesh(cfg.mesh_file)
    else:
        mesh = generate_structured_mesh(cfg.nx, cfg.ny, cfg.rect)
    return RunContext(
        mesh, problems[cfg.problem], cfg.scheme, cfg.degree, _scheme_cfg(cfg)
    )


def _write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")


def _write_solution(path, ctx: RunContext, u):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# x y value\n")
        for (x, y), val in zip(ctx.layout.dof_coords, u):
            fh.write(f"{g17(x)} {g17(y)} {g17(val)}\n")


def _emit(cfg: RunConfig, ctx: RunContext, u, results, extra_lines):
    os.makedirs(cfg.output_dir, exist_ok=True)
    _write_solution(os.path.join(cfg.output_dir, "solution.txt"), ctx, u)
    for res in results:
        for fname, (header, rows) in res.tables.items():
            _write_csv(os.path.join(cfg.output_dir, fname), header, rows)
    lines = ["# configuration (defaults filled in)"]
    lines += ["# " + ln for ln in render_config(cfg).splitlines()]
    lines += extra_lines
    lines += [res.line() for res in results]
    failed = [res.name for res in results if not res.passed]
    lines.append(
        "ALL AUDITS PASSED" if not failed else f"FAILED AUDITS: {','.join(failed)}"
    )
    text = "\n".join(lines) + "\n"
    with open(os.path.join(cfg.output_dir, "summary.txt"), "w", encoding="utf-8") as fh:
        fh.write(text)
    sys.stdout.write(text)
    return 0 if not failed else 1


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    ctx = _build_context(cfg)
    u, report = solve_steady(
        ctx, tol=cfg.tol, max_iter=cfg.max_iter, nu=cfg.nu, init=cfg.init
    )
    extra = [
        f"solve: iterations={report.iterations} converged={report.converged} "
        f"plateaued={report.plateaued} final_rel={g17(report.final_relative)} "
        f"wall={report.wall_time:.3f}s"
    ]
    if ctx.problem.exact is not None:
        extra.append(f"l2_error={g17(ctx.l2_error(u))}")
    results = run_audits(ctx, cfg, u)
    status = _emit(cfg, ctx, u, results, extra)
    if cfg.emit_history:
        _write_csv(
            os.path.join(cfg.output_dir, "residual_history.csv"),
            ("iteration", "residual_norm"),
            [(str(i), g17(v)) for i, v in enumerate(report.history)],
        )
    return status


def cmd_audit(args) -> int:
    cfg = load_config(args.config)
    ctx = _build_context(cfg)
    if ctx.problem.exact is not None:
        u = ctx.layout.interpolate(ctx.problem.exact)
        extra = ["field: exact-solution interpolant"]
    else:
        u = ctx.initial_guess("mean")
        extra = ["field: boundary-data mean"]
    results = run_audits(ctx, cfg, u)
    return _emit(cfg, ctx, u, results, extra)


def cmd_mesh_gen(args) -> int:
    rect = tuple(args.rect) if args.rect else (0.0, 0.0, 1.0, 1.0)
    mesh = generate_structured_mesh(args.nx, args.ny, rect)
    write_mesh(mesh, args.out)
    sys.stdout.write(
        f"wrote {args.out}: {mesh.num_vertices} vertices, "
        f"{mesh.num_triangles} triangles, {len(mesh.boundary_faces)} boundary faces\n"
    )
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="rdflux", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="solve and audit")
    p_run.add_argument("config")
    p_run.set_defaults(func=cmd_run)

    p_audit = sub.add_parser("audit", help="audits on the exact interpolant")
    p_audit.add_argument("config")
    p_audit.set_defaults(func=cmd_audit)

    p_mesh = sub.add_parser("mesh", help="mesh utilities")
    mesh_sub = p_mesh.add_subparsers(dest="mesh_command", required=True)
    p_gen = mesh_sub.add_parser("gen", help="generate a structured mesh file")
    p_gen.add_argument("nx", type=int)
    p_gen.add_argument("ny", type=int)
    p_gen.add_argument("out")
    p_gen.add_argument("--rect", type=float, nargs=4, metavar=("X0", "Y0", "X1", "Y1"))
    p_gen.set_defaults(func=cmd_mesh_gen)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, MeshError, DivergenceError, FileNotFoundError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
