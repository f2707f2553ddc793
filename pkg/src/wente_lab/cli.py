"""Command line: ``wente-lab {sweep,verify,plot,glue,solve,mesh-dump}``.

Exit codes: 0 success, 1 a check or row failed, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, LabConfig, load_config

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="flat key = value file")
    p.add_argument("--eps-min", type=float)
    p.add_argument("--eps-max", type=float)
    p.add_argument("--eps-steps", type=int)
    p.add_argument("--grid-nr", type=int)
    p.add_argument("--grid-ntheta", type=int)
    p.add_argument("--fem-h", type=float)
    p.add_argument("--arc", nargs=2, type=float, action="append", metavar=("START", "END"))
    p.add_argument("--alpha", type=float, action="append")
    p.add_argument("--beta", type=float, action="append")
    p.add_argument("--gamma", type=float, action="append")
    p.add_argument("--out", type=Path, help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="wente-lab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    p = sub.add_parser("sweep", help="epsilon sweep to sweep.csv")
    _common(p)
    p = sub.add_parser("verify", help="module invariant suite to verify.txt")
    _common(p)
    p = sub.add_parser("plot", help="SVG charts from a sweep CSV")
    p.add_argument("csv", type=Path)
    _common(p)
    p = sub.add_parser("glue", help="inductive gluing to glue.csv")
    _common(p)
    p.add_argument("--depth", type=int)
    p.add_argument("--greedy", action="store_true", help="take the best candidate when no threshold is met")
    p = sub.add_parser("solve", help="one bubble problem; fields to fields/*.csv")
    _common(p)
    p.add_argument("--kind", choices=("dirichlet", "neumann", "robin"), default="neumann")
    p.add_argument("--eps", type=float, default=1e-2)
    p = sub.add_parser("mesh-dump", help="write the Robin mesh")
    _common(p)
    return parser


def _coeff_triples(args) -> tuple | None:
    if not (args.alpha or args.beta or args.gamma):
        return None
    n = len(args.alpha or [])
    if n == 0:
        raise ConfigError("--beta/--gamma need a matching --alpha")
    beta = args.beta or [0.0] * n
    gamma = args.gamma or [0.0] * n
    if len(beta) != n or len(gamma) != n:
        raise ConfigError("--alpha, --beta and --gamma must be given the same number of times")
    return tuple(zip(args.alpha, beta, gamma))


def resolve_config(args) -> LabConfig:
    cfg = load_config(args.config) if args.config else LabConfig()
    overrides = dict(
        eps_min=args.eps_min, eps_max=args.eps_max, eps_steps=args.eps_steps,
        n_r=args.grid_nr, n_theta=args.grid_ntheta, fem_h=args.fem_h,
        arcs=tuple(tuple(a) for a in args.arc) if args.arc else None,
        coeffs=_coeff_triples(args),
        out=str(args.out) if args.out else None,
    )
    if getattr(args, "depth", None) is not None:
        overrides["glue_depth"] = args.depth
    if getattr(args, "greedy", False):
        overrides["glue_greedy"] = True
    if args.command == "glue":
        # the epsilon flags address the glue ladder here
        overrides["glue_eps_min"] = overrides.pop("eps_min")
        overrides["glue_eps_max"] = overrides.pop("eps_max")
        overrides["glue_steps"] = overrides.pop("eps_steps")
    return cfg.with_overrides(**overrides)


# ---------------------------------------------------------------------------

def cmd_sweep(cfg: LabConfig) -> int:
    from .sweep import run_sweep, write_sweep_csv

    rows = run_sweep(cfg, progress=lambda e: print(f"eps = {e:.6g} done", file=sys.stderr))
    path = write_sweep_csv(rows, Path(cfg.out) / "sweep.csv")
    bad = [r for r in rows if r.status != "ok"]
    print(f"wrote {path} ({len(rows)} rows, {len(bad)} not ok)")
    for r in bad:
        print(f"  eps = {r.epsilon:.6g} ({r.alpha:g},{r.beta:g},{r.gamma:g}): {r.status}")
    return EXIT_FAIL if bad else EXIT_OK


def cmd_verify(cfg: LabConfig) -> int:
    from .checks import bubble_density, neumann_sign_residuals, verify_suite
    from .disc import focus_for_epsilon, make_polar_grid

    results = verify_suite(cfg)
    grid = make_polar_grid(cfg.verify_n_r, cfg.verify_n_theta, grading=cfg.grading, focus=focus_for_epsilon(1e-2))
    good, printed = neumann_sign_residuals(bubble_density(grid, 1e-2))
    lines = [r.line() for r in results]
    lines.append(f"INFO  Neumann flux -(1/2pi) int f: compatibility residual {good:.6e}")
    lines.append(f"INFO  Neumann flux +(1/2pi) int f: compatibility residual {printed:.6e}")
    failed = sum(not r.passed for r in results)
    lines.append(f"{len(results) - failed}/{len(results)} checks passed")
    text = "\n".join(lines) + "\n"
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "verify.txt").write_text(text)
    print(text, end="")
    return EXIT_FAIL if failed else EXIT_OK


def cmd_plot(cfg: LabConfig, csv_path: Path) -> int:
    from .plotting import plot_sweep

    for p in plot_sweep(csv_path, Path(cfg.out) / "plots"):
        print(f"wrote {p}")
    return EXIT_OK


def cmd_glue(cfg: LabConfig) -> int:
    from .glue import (
        GLUE_COLUMNS, LadderExhausted, glue_step, level_passed, pairing_growth, start_glue, write_glue_csv,
    )

    state, candidates = start_glue(cfg.glue_ladder, calibrate_at=cfg.glue_calibrate,
                                   spec_kwargs=dict(r0=cfg.r0, cutoff_inner=cfg.cutoff_inner))
    failure = None
    for _ in range(cfg.glue_depth):
        try:
            glue_step(state, candidates, strict=not cfg.glue_greedy)
        except LadderExhausted as exc:
            failure = exc
            break
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "glue.csv"
    write_glue_csv(state, path)
    if failure is not None:
        with open(path, "a") as fh:
            row = {c: "" for c in GLUE_COLUMNS}
            row.update(level=failure.level, epsilon=f"{failure.best_epsilon:.17g}",
                       threshold_scaled=f"{failure.threshold:.17g}", achieved=f"{failure.best:.17g}",
                       checks_passed="ladder exhausted")
            fh.write(",".join(str(row[c]) for c in GLUE_COLUMNS) + "\n")
    print(f"wrote {path}; C_A = {state.solver_norm:.6g}, calibration c = {state.calibration:.6g}")
    ok = failure is None
    for i, lv in enumerate(state.levels, start=1):
        passed = level_passed(lv.checks)
        ok &= all(passed.values())
        print(f"level {i}: eps = {lv.epsilon:.6g}, pairing = {pairing_growth(state, i)[0]:.10g}, "
              f"checks {'ok' if all(passed.values()) else 'FAILED: ' + ' '.join(k for k, v in passed.items() if not v)}")
    if failure is not None:
        print(failure)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_solve(cfg: LabConfig, kind: str, eps: float) -> int:
    from .disc import ScalarField, write_field_csv
    from .mobius import BubbleSpec, jacobian_total
    from .sweep import sweep_grid

    spec = BubbleSpec(eps, r0=cfg.r0, cutoff_inner=cfg.cutoff_inner)
    fields = Path(cfg.out) / "fields"
    if kind == "robin":
        from .robin import BoundaryArcs, RobinCoeffs, load_vector, mesh_disc, solve_robin

        mesh = mesh_disc(cfg.fem_h, BoundaryArcs(tuple(tuple(a) for a in cfg.arcs)))
        load = load_vector(mesh, lambda z: jacobian_total(spec, z), scale=eps)
        fields.mkdir(parents=True, exist_ok=True)
        for c in cfg.coeffs:
            v = solve_robin(mesh, RobinCoeffs(*c), load)
            path = fields / f"robin_{c[0]:g}_{c[1]:g}_{c[2]:g}.csv"
            with open(path, "w") as fh:
                fh.write("x,y,value\n")
                for (x, y), val in zip(mesh.vertices, v.values):
                    fh.write(f"{x:.17g},{y:.17g},{val:.17g}\n")
            print(f"wrote {path}: ||grad v||_2 = {v.grad_l2():.10g}")
        return EXIT_OK
    from .spectral import solve_dirichlet_spectral, solve_neumann_spectral

    grid = sweep_grid(cfg, eps)
    f = ScalarField(grid, jacobian_total(spec, grid.points))
    u = (solve_dirichlet_spectral if kind == "dirichlet" else solve_neumann_spectral)(f)
    print(f"wrote {write_field_csv(f, fields / 'f.csv')}")
    print(f"wrote {write_field_csv(u, fields / f'{kind}.csv')}: max |u| = {np.abs(u.values).max():.10g}")
    return EXIT_OK


def cmd_mesh_dump(cfg: LabConfig) -> int:
    from .robin import BoundaryArcs, mesh_disc

    mesh = mesh_disc(cfg.fem_h, BoundaryArcs(tuple(tuple(a) for a in cfg.arcs)))
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "mesh.txt"
    mesh.write(path)
    print(f"wrote {path}: {mesh.n_vertices} vertices, {len(mesh.triangles)} triangles")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = resolve_config(args)
    except UsageError as exc:
        print(f"wente-lab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"wente-lab: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        if args.command == "sweep":
            return cmd_sweep(cfg)
        if args.command == "verify":
            return cmd_verify(cfg)
        if args.command == "plot":
            return cmd_plot(cfg, args.csv)
        if args.command == "glue":
            return cmd_glue(cfg)
        if args.command == "solve":
            return cmd_solve(cfg, args.kind, args.eps)
        return cmd_mesh_dump(cfg)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"wente-lab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
