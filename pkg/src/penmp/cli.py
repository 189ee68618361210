"""Command line front-end: ``penmp check|solve|sweep|oracle``.

Exit codes: 0 success, 1 scientific failure (hypothesis or oracle bracket),
2 usage or resource error, 3 solver non-convergence.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .analysis import (boundary_max, energy_identity_check, epsilon_sweep,
                       exterior_sup, recovery_check)
from .config import ConfigError, ResourceError, RunConfig, load_config
from .critical_point import SolverError, autonomous_context, mountain_pass_solve
from .energy import make_context
from .grid import GridError
from .io import write_field_dump, write_report, write_sweep_csv
from .model import ModelError, validate_hypotheses
from .oracle import BracketError, shooting_oracle

EXIT_OK, EXIT_SCIENCE, EXIT_USAGE, EXIT_NONCONVERGED = 0, 1, 2, 3

log = logging.getLogger("penmp")


def _eps_tag(eps: float) -> str:
    return format(eps, ".12g")


def _out_dir(run: RunConfig, args) -> Path:
    return Path(args.out if args.out else run.output_section["directory"])


def _figures(run: RunConfig, args) -> bool:
    return bool(run.output_section.get("figures", True)) and not args.no_figures


def _grid_provenance(run: RunConfig, grid) -> dict:
    prov = run.provenance()
    prov.update({f"grid_{k}": format(v, ".17g") if isinstance(v, float) else v
                 for k, v in grid.metadata().items()})
    return prov


def cmd_check(args) -> int:
    run = load_config(args.config)
    try:
        setup = run.model()
    except ModelError as exc:
        print(f"FAIL {exc}")
        return EXIT_SCIENCE
    report = validate_hypotheses(setup.potential, setup.nonlinearity, setup.sample_box,
                                 max(setup.samples, 1000))
    for res in report.results:
        witness = " ".join(f"{k}={v:.6g}" if isinstance(v, float) else f"{k}={v}"
                           for k, v in res.witness.items())
        line = f"{res.name:<4} {res.status:<8} {witness}"
        if res.message:
            line += f"  # {res.message}"
        print(line)
    for note in report.notes:
        print(f"note: {note}")
    if not report.passed:
        print("failed: " + ", ".join(r.name for r in report.failures))
        return EXIT_SCIENCE
    return EXIT_OK


def cmd_solve(args) -> int:
    run = load_config(args.config)
    setup = run.model()
    mp = run.mp_config()
    out = _out_dir(run, args)
    if args.autonomous:
        grid = run.cinf_grid()
        eps = 1.0
        ctx = autonomous_context(make_context(grid, setup.potential, setup.nonlinearity, 1.0,
                                              penalized=False))
        rep = mountain_pass_solve(ctx, mp, functional="I")
        tag = "autonomous"
        sections = {"mode": "autonomous", "v_inf": ctx.v_inf, "c_infty": rep.level}
    else:
        if args.eps is None:
            raise ConfigError("solve needs --eps (or --autonomous)")
        eps = float(args.eps)
        grid = run.grid_for(eps)
        ctx = make_context(grid, setup.potential, setup.nonlinearity, eps)
        boundary_max(ctx, grid.zeros())  # fails early if Omega_eps leaves the box
        rep = mountain_pass_solve(ctx, mp)
        tag = f"eps_{_eps_tag(eps)}"
        ident = energy_identity_check(ctx, rep.u, rep.level,
                                      tol=float(run.sweep_section["tol_chain"]))
        rec = recovery_check(ctx, rep.u, float(run.sweep_section["tol_residual"]), mp)
        pen = ctx.penalization
        sections = {
            "mode": "penalized", "eps": eps, "c_eps": rep.level,
            "k": pen.k, "a": pen.a,
            "boundary_max": boundary_max(ctx, rep.u),
            "exterior_sup": exterior_sup(ctx, rep.u),
            "residual_original": rec.residual_original,
            "solves_original": bool(rec.solves_original and rep.converged),
            "tilde_norm": rec.tilde_norm,
            "identity_defect": ident.defect, "chain_ok": ident.chain_ok,
        }
    idx = np.unravel_index(int(np.argmax(rep.u)), rep.u.shape)
    sections.update({
        "norm_sq": rep.norm_sq, "grad_norm": rep.grad_norm, "iters": rep.iters,
        "converged": rep.converged, "message": rep.message,
        "endpoint_scale": rep.endpoint_scale, "min_value": rep.min_value,
        "argmax": [float(c) for c in grid.coords[idx]],
        "grid": grid.metadata(),
    })
    prov = _grid_provenance(run, grid)
    write_report(out / f"solve_{tag}.toml", sections, prov)
    if run.output_section.get("dumps", True):
        write_field_dump(out / f"u_{tag}.txt", grid, rep.u, eps, prov)
    if _figures(run, args):
        from .plotting import plot_profile

        plot_profile(grid, rep.u, out / f"u_{tag}.png", title=f"{tag}, level {rep.level:.6g}",
                     threshold=None if args.autonomous else ctx.penalization.a,
                     omega=None if args.autonomous else ctx.omega_scaled)
    print(f"level = {rep.level:.12g}")
    print(f"grad_norm = {rep.grad_norm:.3e} iters = {rep.iters} converged = {rep.converged}")
    return EXIT_OK if rep.converged else EXIT_NONCONVERGED


def cmd_sweep(args) -> int:
    run = load_config(args.config)
    eps_list = None if args.eps is None else [float(e) for e in args.eps.split(",") if e.strip()]
    out = _out_dir(run, args)
    result = epsilon_sweep(run, eps_list, jobs=args.jobs)
    prov = run.provenance()
    prov["grid_h"] = format(float(run.grid_section["spacing"]), ".17g")
    if run.grid_section.get("half_width") is not None:
        prov["grid_L"] = format(float(run.grid_section["half_width"]), ".17g")
    else:
        prov["grid_L"] = f"{format(float(run.grid_section['box_factor']), '.17g')}/eps"
    write_sweep_csv(out / "sweep.csv", result.rows, result.summary, prov)
    if run.output_section.get("dumps", True):
        for eps, rep in result.solves.items():
            grid = run.grid_for(eps)
            write_field_dump(out / f"u_eps_{_eps_tag(eps)}.txt", grid, rep.u, eps,
                             _grid_provenance(run, grid))
    if _figures(run, args) and result.rows:
        from .plotting import plot_profile, plot_sweep

        plot_sweep(result.rows, out / "sweep.png")
        setup = run.model()
        for eps, rep in result.solves.items():
            grid = run.grid_for(eps)
            ctx = make_context(grid, setup.potential, setup.nonlinearity, eps)
            plot_profile(grid, rep.u, out / f"u_eps_{_eps_tag(eps)}.png",
                         title=f"eps = {eps:g}", threshold=ctx.penalization.a,
                         omega=ctx.omega_scaled)
    for row in result.rows:
        print(f"eps={row.eps:<8g} c_eps={row.c_eps:.10g} boundary_max={row.boundary_max:.4e} "
              f"solves_original={row.solves_original} converged={row.converged}")
    if not result.rows:
        return EXIT_OK
    if all(r.converged for r in result.rows) and result.rows[-1].solves_original:
        return EXIT_OK
    return EXIT_NONCONVERGED


def cmd_oracle(args) -> int:
    if not args.m > 0 or not args.p > 2 or not args.step > 0:
        print("oracle needs m > 0, p > 2 and step > 0", file=sys.stderr)
        return EXIT_USAGE
    try:
        res = shooting_oracle(args.m, args.p, args.step, dim=args.dim)
    except BracketError as exc:
        print(f"bracket failure: {exc}", file=sys.stderr)
        return EXIT_SCIENCE
    print(f"c_ref = {res.level:.12g}")
    print(f"u0 = {res.height:.12g}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="penmp", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def with_config(p):
        p.add_argument("--config", required=True, metavar="PATH")
        p.add_argument("--out", metavar="DIR", help="output directory (overrides config)")
        p.add_argument("--no-figures", action="store_true", help="skip PNG rendering")
        return p

    p = sub.add_parser("check", help="validate model hypotheses")
    p.add_argument("--config", required=True, metavar="PATH")
    p.set_defaults(func=cmd_check)

    p = with_config(sub.add_parser("solve", help="single penalized or autonomous solve"))
    p.add_argument("--eps", type=float)
    p.add_argument("--autonomous", action="store_true", help="solve the V = V_inf problem")
    p.set_defaults(func=cmd_solve)

    p = with_config(sub.add_parser("sweep", help="eps sweep with verification table"))
    p.add_argument("--eps", help="comma-separated eps list overriding the config")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("oracle", help="shooting reference level for the autonomous problem")
    p.add_argument("--m", type=float, default=1.0)
    p.add_argument("--p", type=float, default=4.0)
    p.add_argument("--step", type=float, default=1e-4)
    p.add_argument("--dim", type=int, choices=(1, 2), default=1)
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, ResourceError, GridError) as exc:
        # DomainError is a ResourceError
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ModelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCIENCE
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED


if __name__ == "__main__":
    sys.exit(main())
