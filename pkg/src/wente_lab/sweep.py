"""Epsilon sweeps over the Dirichlet, Neumann and Robin problems."""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from .config import LabConfig
from .disc import PolarGrid, ScalarField, focus_for_epsilon, gradient_fd, make_polar_grid
from .green import solve_dirichlet_green
from .mobius import BubbleSpec, bubble_fields, jacobian_total
from .modes import dirichlet_energy
from .norms import hminus1, lorentz21, lp_norm, mprime_lorentz21
from .robin import BoundaryArcs, RobinCoeffs, TriMesh, load_vector, mesh_disc, solve_robin
from .spectral import solve_dirichlet_spectral, solve_neumann_spectral


@dataclass
class SweepRow:
    epsilon: float
    grad_V_l2: float
    grad_V_l21: float
    mprime_l21: float
    f_l1: float
    f_hminus1: float
    dirichlet_u_linf: float
    dirichlet_grad_l2: float
    neumann_v_linf: float
    neumann_grad_l2: float
    robin_grad_l2: float
    cross_solver_residual: float
    alpha: float
    beta: float
    gamma: float
    dirichlet_grad_l15: float
    neumann_grad_l15: float
    status: str = "ok"

    @property
    def wente_ratio(self) -> float:
        return (self.dirichlet_u_linf + self.dirichlet_grad_l2) / self.grad_V_l2**2

    @property
    def numeric(self) -> dict:
        return {k: v for k, v in asdict(self).items() if k != "status"}


COLUMNS = [f.name for f in fields(SweepRow)]


def sweep_grid(cfg: LabConfig, epsilon: float) -> PolarGrid:
    focus = cfg.focus if cfg.focus is not None else focus_for_epsilon(epsilon)
    return make_polar_grid(cfg.n_r, cfg.n_theta, grading=cfg.grading, focus=focus)


def relative_h1(u: ScalarField, ref: ScalarField, boundary: str = "zero") -> float:
    num = dirichlet_energy((u - ref).values, ref.grid, boundary)
    den = dirichlet_energy(ref.values, ref.grid, boundary)
    return float(np.sqrt(max(num, 0.0) / den))


def disc_measurements(spec: BubbleSpec, grid: PolarGrid, cross_check: bool = True) -> dict:
    """Everything a sweep row needs from the polar grid at one epsilon."""
    w = grid.weights
    bf = bubble_fields(spec, grid.points)
    gv2 = np.sum(bf.grad_a**2, axis=-1) + np.sum(bf.grad_b**2, axis=-1)
    f = ScalarField(grid, jacobian_total(spec, grid.points))
    u = solve_dirichlet_spectral(f)
    v = solve_neumann_spectral(f)
    out = {
        "grad_V_l2": float(np.sqrt(np.sum(w * gv2))),
        "grad_V_l21": lorentz21(np.sqrt(gv2), w),
        "mprime_l21": mprime_lorentz21(spec.epsilon),
        "f_l1": lp_norm(f, 1.0),
        "f_hminus1": hminus1(f),
        "dirichlet_u_linf": lp_norm(u, np.inf),
        "dirichlet_grad_l2": float(np.sqrt(dirichlet_energy(u.values, grid, "zero"))),
        "neumann_v_linf": lp_norm(v, np.inf),
        "neumann_grad_l2": float(np.sqrt(dirichlet_energy(v.values, grid, "trace"))),
        "dirichlet_grad_l15": lp_norm(gradient_fd(u).magnitude(), 1.5),
        "neumann_grad_l15": lp_norm(gradient_fd(v).magnitude(), 1.5),
        "cross_solver_residual": relative_h1(solve_dirichlet_green(f), u) if cross_check else 0.0,
    }
    return out


def robin_grad(spec: BubbleSpec, mesh: TriMesh, coeffs: RobinCoeffs, load=None) -> float:
    if load is None:
        load = load_vector(mesh, lambda z: jacobian_total(spec, z), scale=spec.epsilon)
    return solve_robin(mesh, coeffs, load).grad_l2()


def _failed_row(eps: float, coeffs, message: str) -> SweepRow:
    nan = float("nan")
    values = {c: nan for c in COLUMNS}
    values.update(epsilon=eps, alpha=coeffs[0], beta=coeffs[1], gamma=coeffs[2], status=f"error: {message}")
    return SweepRow(**values)


def run_sweep(cfg: LabConfig, progress=None) -> list[SweepRow]:
    """One row per epsilon (descending) per Robin coefficient set.

    A solver failure is recorded in the row's ``status`` and the sweep moves
    on; rows whose Green/spectral disagreement exceeds ``cfg.cross_tol`` are
    flagged.
    """
    arcs = BoundaryArcs(tuple(tuple(a) for a in cfg.arcs))
    mesh = mesh_disc(cfg.fem_h, arcs)
    rows = []
    for eps in cfg.ladder:
        spec = BubbleSpec(eps, r0=cfg.r0, cutoff_inner=cfg.cutoff_inner)
        try:
            disc = disc_measurements(spec, sweep_grid(cfg, eps))
            load = load_vector(mesh, lambda z: jacobian_total(spec, z), scale=eps)
        except Exception as exc:  # recorded per row
            rows.extend(_failed_row(eps, c, f"{type(exc).__name__}: {exc}") for c in cfg.coeffs)
            continue
        status = "ok" if disc["cross_solver_residual"] < cfg.cross_tol else "flagged: cross_solver"
        for c in cfg.coeffs:
            try:
                rg = robin_grad(spec, mesh, RobinCoeffs(*c), load)
                row_status = status
            except Exception as exc:
                rg = float("nan")
                row_status = f"error: {type(exc).__name__}: {exc}"
            rows.append(SweepRow(epsilon=eps, robin_grad_l2=rg, alpha=c[0], beta=c[1], gamma=c[2],
                                 status=row_status, **disc))
        if progress is not None:
            progress(eps)
    return rows


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    return format(float(v), ".17g")


def write_sweep_csv(rows: list[SweepRow], path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(COLUMNS)
        for row in rows:
            writer.writerow([_fmt(getattr(row, c)) for c in COLUMNS])
    return path


class SweepParseError(ValueError):
    pass


def read_sweep_csv(path) -> list[SweepRow]:
    """Parse a sweep CSV; errors name the offending line."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SweepParseError(f"{path}: line 1: empty file") from None
        missing = [c for c in COLUMNS if c not in header]
        if missing:
            raise SweepParseError(f"{path}: line 1: missing columns {', '.join(missing)}")
        idx = {c: header.index(c) for c in COLUMNS}
        rows = []
        for lineno, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != len(header):
                raise SweepParseError(f"{path}: line {lineno}: expected {len(header)} fields, got {len(rec)}")
            values = {}
            for c, i in idx.items():
                if c == "status":
                    values[c] = rec[i]
                    continue
                try:
                    values[c] = float(rec[i])
                except ValueError:
                    raise SweepParseError(f"{path}: line {lineno}: column {c}: not a number: {rec[i]!r}") from None
            rows.append(SweepRow(**values))
    return rows


def rows_finite(rows: list[SweepRow]) -> bool:
    return all(math.isfinite(v) and v >= -0.0 for r in rows for k, v in r.numeric.items() if k not in ("beta", "gamma"))
