"""Verification of the penalization scheme: level and norm bounds, the energy
identity chain, boundary decay, and recovery of the unpenalized equation."""
from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .config import ResourceError, RunConfig, config_from_dict
from .critical_point import (MPConfig, SolveReport, SolverError, _preconditioner,
                             autonomous_level, mountain_pass_solve)
from .energy import EnergyContext, make_context
from .grid import inner_l2
from .model import ModelError

log = logging.getLogger(__name__)


class DomainError(ResourceError):
    """Omega_eps does not fit strictly inside the computational box."""


@dataclass
class SweepRow:
    eps: float
    c_eps: float
    c_infty: float
    norm_sq: float
    bound_2k_cinfty: float
    boundary_max: float
    exterior_sup: float
    threshold_a: float
    residual_original: float
    argmax_location: tuple[float, ...]
    solves_original: bool
    converged: bool
    k: float = float("nan")
    grad_norm: float = float("nan")
    iters: int = 0
    identity_defect: float = float("nan")
    chain_ok: bool = False
    autonomous_chain_ok: bool = False
    tilde_norm: float = float("nan")
    min_interior: float = float("nan")
    min_value: float = float("nan")
    error: str = ""


@dataclass(frozen=True)
class Check:
    ok: bool
    margin: float

    def __bool__(self) -> bool:
        return self.ok


def verify_level_bound(row: SweepRow, tol: float = 1e-6) -> Check:
    """``c_eps <= c_infty (1 + tol)``; margin is ``c_infty - c_eps``."""
    return Check(row.c_eps <= row.c_infty * (1 + tol), row.c_infty - row.c_eps)


def verify_norm_bound(row: SweepRow, tol: float = 1e-6) -> Check:
    """``||u_eps||^2 <= 2 k c_infty (1 + tol)``."""
    bound = 2 * row.k * row.c_infty
    return Check(row.norm_sq <= bound * (1 + tol), bound - row.norm_sq)


@dataclass(frozen=True)
class IdentityCheck:
    defect: float
    chain_ok: bool
    chain_value: float
    lower_bound: float
    autonomous_ok: bool

    def __iter__(self):
        return iter((self.defect, self.chain_ok))


def energy_identity_check(ctx: EnergyContext, u: np.ndarray, level: float,
                          theta: float | None = None, tol: float = 1e-6) -> IdentityCheck:
    """Compare ``J(u) - <J'(u), u>/theta`` with ``level`` and with ``(theta-2)/(4 theta) ||u||^2``.

    ``autonomous_ok`` records the sharper factor ``(theta-2)/(2 theta)``.
    """
    theta = ctx.nonlinearity.theta if theta is None else theta
    fn = ctx.functional_J
    chain = fn.energy(u) - inner_l2(ctx.grid, fn.gradient(u), u) / theta
    norm_sq = fn.quadratic(u)
    lower = (theta - 2) / (4 * theta) * norm_sq
    return IdentityCheck(
        defect=abs(chain - level),
        chain_ok=chain >= lower * (1 - tol),
        chain_value=chain,
        lower_bound=lower,
        autonomous_ok=chain >= 2 * lower * (1 - tol),
    )


def _omega_scaled(ctx: EnergyContext):
    if ctx.omega_scaled is None:
        raise DomainError("no penalization region: boundary quantities undefined")
    omega = ctx.omega_scaled
    lo, hi = omega.bounds()
    L = ctx.grid.half_width
    if np.any(lo <= -L + ctx.grid.spacing) or np.any(hi >= L - ctx.grid.spacing):
        raise DomainError(
            f"Omega_eps exceeds computational box: needs half_width > {float(np.max(np.abs([lo, hi]))):.6g}, "
            f"have L = {L:.6g}; raise grid.half_width or grid.box_factor within "
            f"grid.memory_guard")
    return omega


def boundary_band(ctx: EnergyContext) -> np.ndarray:
    """Nodes within one spacing of the boundary of Omega_eps."""
    omega = _omega_scaled(ctx)
    return omega.boundary_distance(ctx.grid.coords) <= ctx.grid.spacing * (1 + 1e-12)


def boundary_max(ctx: EnergyContext, u: np.ndarray) -> float:
    band = boundary_band(ctx)
    return float(np.max(u[band])) if np.any(band) else 0.0


def exterior_sup(ctx: EnergyContext, u: np.ndarray) -> float:
    _omega_scaled(ctx)
    outside = ~ctx.inside
    outside &= ~ctx.grid.boundary_mask
    return float(np.max(u[outside])) if np.any(outside) else 0.0


@dataclass(frozen=True)
class Recovery:
    residual_original: float
    solves_original: bool
    tilde_norm: float
    exterior_sup: float

    def __iter__(self):
        return iter((self.residual_original, self.solves_original))


def recovery_check(ctx: EnergyContext, u: np.ndarray, tol_r: float = 1e-6,
                   config: MPConfig = MPConfig()) -> Recovery:
    """Residual of the unpenalized equation and the exterior truncation ``(u - a)+``."""
    fn = ctx.functional_I
    r = fn.gradient(u)
    z = _preconditioner(fn, config)(r)
    residual = math.sqrt(max(inner_l2(ctx.grid, z, r), 0.0))
    a = ctx.penalization.a
    ext = exterior_sup(ctx, u)
    outside = ~ctx.inside
    tilde = np.where(outside, np.maximum(u - a, 0.0), 0.0)
    tilde_norm = math.sqrt(inner_l2(ctx.grid, tilde, tilde))
    return Recovery(residual, bool(ext <= a and residual <= tol_r), tilde_norm, ext)


def positivity_probe(grid, u: np.ndarray) -> tuple[float, bool]:
    """Interior minimum and whether some interior zero node has a positive neighbour."""
    inner = u[grid.interior]
    zero = inner == 0
    if not np.any(zero):
        return float(np.min(inner)), False
    pos = u > 0
    neighbour_pos = np.zeros_like(zero)
    for axis in range(grid.dim):
        for shift in (-1, 1):
            rolled = np.roll(pos, shift, axis=axis)
            neighbour_pos |= rolled[grid.interior]
    return float(np.min(inner)), bool(np.any(zero & neighbour_pos))


# ------------------------------------------------------------------- sweeping


def sweep_row(run: RunConfig, eps: float, c_infty: float,
              report_sink: dict | None = None) -> SweepRow:
    """One converged (or flagged) row for ``eps``."""
    setup = run.model()
    mp = run.mp_config()
    tol = run.sweep_section
    grid = run.grid_for(eps)
    ctx = make_context(grid, setup.potential, setup.nonlinearity, eps)
    _omega_scaled(ctx)
    pen = ctx.penalization
    row = SweepRow(eps=eps, c_eps=float("nan"), c_infty=c_infty, norm_sq=float("nan"),
                   bound_2k_cinfty=2 * pen.k * c_infty, boundary_max=float("nan"),
                   exterior_sup=float("nan"), threshold_a=pen.a,
                   residual_original=float("nan"), argmax_location=(),
                   solves_original=False, converged=False, k=pen.k)
    try:
        rep = mountain_pass_solve(ctx, mp)
    except (SolverError, ModelError) as exc:
        row.error = str(exc)
        log.warning("eps=%g: %s", eps, exc)
        return row
    u = rep.u
    ident = energy_identity_check(ctx, u, rep.level, tol=float(tol["tol_chain"]))
    rec = recovery_check(ctx, u, float(tol["tol_residual"]), mp)
    idx = np.unravel_index(int(np.argmax(u)), u.shape)
    min_int, _ = positivity_probe(grid, u)
    row.c_eps = rep.level
    row.norm_sq = rep.norm_sq
    row.boundary_max = boundary_max(ctx, u)
    row.exterior_sup = rec.exterior_sup
    row.residual_original = rec.residual_original
    row.argmax_location = tuple(float(c) for c in grid.coords[idx])
    row.solves_original = rec.solves_original and rep.converged
    row.converged = rep.converged
    row.grad_norm = rep.grad_norm
    row.iters = rep.iters
    row.identity_defect = ident.defect
    row.chain_ok = ident.chain_ok
    row.autonomous_chain_ok = ident.autonomous_ok
    row.tilde_norm = rec.tilde_norm
    row.min_interior = min_int
    row.min_value = rep.min_value
    if report_sink is not None:
        report_sink[eps] = rep
    return row


def compute_c_infty(run: RunConfig) -> tuple[float, SolveReport, EnergyContext]:
    setup = run.model()
    grid = run.cinf_grid()
    ctx = make_context(grid, setup.potential, setup.nonlinearity, 1.0, penalized=False)
    _, level, rep = autonomous_level(ctx, run.mp_config())
    return level, rep, ctx


def _row_worker(raw: dict, source: str, eps: float, c_infty: float):
    sink: dict = {}
    row = sweep_row(config_from_dict(raw, source), eps, c_infty, sink)
    return row, sink.get(eps)


@dataclass
class SweepResult:
    rows: list[SweepRow]
    summary: dict
    c_infty_report: SolveReport | None = None
    solves: dict = field(default_factory=dict)


def epsilon_sweep(run: RunConfig, eps_list: list[float] | None = None, jobs: int = 1,
                  keep_solutions: bool = True) -> SweepResult:
    """Solve the penalized problem for each eps (strictly decreasing) and summarize."""
    eps_list = run.eps_list if eps_list is None else [float(e) for e in eps_list]
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ValueError("eps_list must be strictly decreasing")
    if not eps_list:
        return SweepResult([], summarize(run, []))
    # refuse oversized runs before any solving
    setup = run.model()
    for eps in eps_list:
        grid = run.grid_for(eps)
        _omega_scaled(make_context(grid, setup.potential, setup.nonlinearity, eps))
    c_infty, c_rep, _ = compute_c_infty(run)
    solves: dict = {}
    if jobs > 1 and len(eps_list) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_row_worker, run.raw, run.source, eps, c_infty)
                       for eps in eps_list]
            results = [f.result() for f in futures]
        rows = [row for row, _ in results]
        if keep_solutions:
            solves = {eps: rep for eps, (_, rep) in zip(eps_list, results) if rep is not None}
    else:
        rows = [sweep_row(run, eps, c_infty, solves if keep_solutions else None)
                for eps in eps_list]
    return SweepResult(rows, summarize(run, rows), c_rep, solves)


def summarize(run: RunConfig, rows: list[SweepRow]) -> dict:
    tol = run.sweep_section
    done = [r for r in rows if r.converged]
    summary: dict = {"rows": len(rows), "converged": len(done)}
    if not rows:
        return summary
    eps0 = None
    for r in reversed(rows):  # rows are ordered by decreasing eps
        if not r.solves_original:
            break
        eps0 = r.eps
    bmax = [r.boundary_max for r in rows]
    summary.update({
        "eps0": eps0 if eps0 is not None else float("nan"),
        "c_infty": rows[0].c_infty,
        "k": rows[0].k,
        "a": rows[0].threshold_a,
        "level_bound_all": all(verify_level_bound(r, float(tol["tol_level"])) for r in done),
        "norm_bound_all": all(verify_norm_bound(r, float(tol["tol_norm"])) for r in done),
        "chain_ok_all": all(r.chain_ok for r in done),
        "boundary_max_decreasing": all(b < a for a, b in zip(bmax, bmax[1:])),
        "final_boundary_max_small": bool(bmax[-1] < rows[-1].threshold_a / 10),
        "final_solves_original": rows[-1].solves_original,
        "positive_all": all(r.min_interior > 0 for r in done),
    })
    setup = run.model()
    center = setup.potential.center()
    final = rows[-1]
    if final.argmax_location:
        x = np.asarray(final.argmax_location) * final.eps
        summary["concentration_distance"] = float(np.linalg.norm(x - center))
    summary["class"] = setup.potential.class_tag
    return summary
