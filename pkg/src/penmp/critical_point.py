"""Mountain-pass critical points by path deformation with H1-preconditioned descent.

A path ``0 = γ_0, γ_1, ..., γ_P = e`` with ``E(e) < 0`` is deformed until its
highest node is a critical point.  Each outer iteration

1. takes the highest node ``u``,
2. moves it against the preconditioned gradient ``z = (-Δ_h + W)^{-1} E'(u)``,
3. re-maximizes ``E`` on the segment from the path origin through the moved
   node, ``s -> E(s v)`` (an exact 1D root of ``<E'(s v), v>``),
4. accepts the step once the re-maximized level satisfies an Armijo decrease,
5. rebuilds the path as the ray ``0 -> v -> T v`` through the new peak ``v``
   (``T`` the first power of two with ``E(T v) < 0``) and redistributes both
   halves by energy-arclength with the peak kept as the middle node.

Only the initial path uses the bump endpoint ``e``; afterwards the endpoint
follows the peak, so every iterate is the maximum of an admissible path.

The Armijo test is applied to the re-maximized value, so the recorded path
maximum never increases beyond rounding.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
from scipy.optimize import brentq
from scipy.sparse.linalg import splu

from .energy import EnergyContext, Functional, nehari_scale, power_nehari_scale
from .grid import Grid, inner_l2, integrate
from .model import ModelError, constant_potential

log = logging.getLogger(__name__)

#: Relative slack for energy comparisons that are at rounding level.
ROUNDING_SLACK = 1e-13


class SolverError(RuntimeError):
    pass


class PathCollapse(SolverError):
    """The path maximum dropped to <= 0: no mountain-pass geometry."""


@dataclass(frozen=True)
class MPConfig:
    path_points: int = 20
    max_outer_iters: int = 10_000
    grad_tol: float = 1e-8
    armijo_c1: float = 1e-4
    backtrack: float = 0.5
    max_backtracks: int = 40
    cg_tol: float = 1e-12
    cg_max_iters: int = 1000
    precond: str = "lu"  # "lu" (sparse factorization) or "cg" (Jacobi-preconditioned CG)
    nehari_init: bool = True
    bump_width: float = 1.0
    bump_offset: tuple[float, ...] | None = None
    seed: int = 0

    def __post_init__(self):
        if self.path_points < 16:
            raise ValueError("path_points must be >= 16")
        for name in ("grad_tol", "cg_tol", "armijo_c1", "bump_width"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not 0 < self.armijo_c1 < 0.5:
            raise ValueError("armijo_c1 must lie in (0, 1/2)")
        if not 0 < self.backtrack < 1:
            raise ValueError("backtrack must lie in (0, 1)")
        if self.precond not in ("lu", "cg"):
            raise ValueError("precond must be 'lu' or 'cg'")


@dataclass
class SolveReport:
    u: np.ndarray
    level: float
    norm_sq: float
    grad_norm: float
    iters: int
    converged: bool
    endpoint_scale: float
    path_max_index: int
    functional: str = "J"
    level_history: list[float] = field(default_factory=list, repr=False)
    message: str = ""

    @property
    def min_value(self) -> float:
        return float(np.min(self.u))


# ---------------------------------------------------------------- precondition


def operator_matrix(grid: Grid, weight) -> sp.csc_matrix:
    """Sparse ``-Δ_h + W`` on the interior unknowns (row-major order)."""
    m = grid.points_per_axis - 2
    h2 = grid.spacing**2
    lap1 = sp.diags([-np.ones(m - 1), 2 * np.ones(m), -np.ones(m - 1)], [-1, 0, 1]) / h2
    if grid.dim == 1:
        lap = lap1
    else:
        eye = sp.identity(m)
        lap = sp.kron(lap1, eye) + sp.kron(eye, lap1)
    w = np.broadcast_to(np.asarray(weight, dtype=float), grid.shape)[grid.interior]
    return (lap + sp.diags(w.ravel())).tocsc()


class Preconditioner:
    """Solves ``(-Δ_h + W) z = r`` with zero boundary values."""

    def __init__(self, fn: Functional, method: str = "lu", tol: float = 1e-12,
                 max_iters: int = 1000):
        self.fn = fn
        self.grid = fn.grid
        self.method = method
        self.tol = tol
        self.max_iters = max_iters
        self.last_residual = 0.0
        self.last_iters = 0
        if method == "lu":
            self._lu = splu(operator_matrix(self.grid, fn.weight))
        self._diag = 2 * self.grid.dim / self.grid.spacing**2 + fn.weight_field

    def __call__(self, r: np.ndarray) -> np.ndarray:
        z = self.grid.zeros()
        rin = r[self.grid.interior]
        if self.method == "lu":
            z[self.grid.interior] = self._lu.solve(rin.ravel()).reshape(rin.shape)
        else:
            z = self._cg(r)
        return z

    def _cg(self, r: np.ndarray) -> np.ndarray:
        grid, fn = self.grid, self.fn
        b = r.copy()
        b[grid.boundary_mask] = 0.0
        bnorm = math.sqrt(np.vdot(b, b))
        x = grid.zeros()
        if bnorm == 0.0:
            self.last_residual, self.last_iters = 0.0, 0
            return x
        res = b.copy()
        zr = res / self._diag
        d = zr.copy()
        rz = np.vdot(res, zr)
        it = 0
        rnorm = bnorm
        while it < self.max_iters:
            ad = fn.linear_part(d)
            step = rz / np.vdot(d, ad)
            x += step * d
            res -= step * ad
            it += 1
            rnorm = math.sqrt(np.vdot(res, res))
            if rnorm <= self.tol * bnorm:
                break
            zr = res / self._diag
            rz_new = np.vdot(res, zr)
            d = zr + (rz_new / rz) * d
            rz = rz_new
        self.last_residual, self.last_iters = rnorm / bnorm, it
        if rnorm > self.tol * bnorm:
            log.warning("CG stopped after %d iterations, relative residual %.3e", it, rnorm / bnorm)
        return x


def precondition(ctx: EnergyContext, r: np.ndarray, config: MPConfig = MPConfig(),
                 functional: str = "J") -> np.ndarray:
    """H1 representative of a residual: solve ``(-Δ_h + V(εy)) z = r``."""
    return _preconditioner(ctx.functional(functional), config).__call__(r)


def _preconditioner(fn: Functional, config: MPConfig) -> Preconditioner:
    return _cached_preconditioner(fn, config.precond, config.cg_tol, config.cg_max_iters)


@lru_cache(maxsize=8)
def _cached_preconditioner(fn, method, tol, max_iters):
    return Preconditioner(fn, method, tol, max_iters)


def dual_norm(grid: Grid, z: np.ndarray, r: np.ndarray) -> float:
    """``sqrt(<z, r>)`` for ``z = A^{-1} r``: the preconditioned gradient norm."""
    return math.sqrt(max(inner_l2(grid, z, r), 0.0))


# -------------------------------------------------------------------- endpoint


def bump(ctx: EnergyContext, config: MPConfig = MPConfig()) -> np.ndarray:
    """Unit-mass Gaussian centred on the scaled minimizer of V (or the origin)."""
    grid = ctx.grid
    center = ctx.potential.center() / ctx.eps
    if config.bump_offset is not None:
        center = center + np.asarray(config.bump_offset, dtype=float)
    if config.seed:
        rng = np.random.default_rng(config.seed)
        center = center + rng.uniform(-grid.spacing, grid.spacing, grid.dim)
    w = config.bump_width
    phi = grid.field_from(lambda y: np.exp(-np.sum((y - center) ** 2, axis=-1) / (2 * w * w)))
    mass = integrate(grid, phi)
    if mass <= 0:
        raise ModelError("bump has no mass on the grid")
    return phi / mass


def make_endpoint(ctx: EnergyContext, config: MPConfig = MPConfig(),
                  functional: str = "J") -> tuple[np.ndarray, float]:
    """Return ``(T φ, T)`` with T the first power of two making ``E(T φ) < 0``."""
    fn = ctx.functional(functional)
    phi = bump(ctx, config)
    t = 1.0
    while fn.energy(t * phi) >= 0:
        t *= 2.0
        if t > 2.0**60:
            raise ModelError("energy never becomes negative along the bump ray; (f3) violated?")
    return t * phi, t


# ------------------------------------------------------------ mountain pass


class _Path:
    def __init__(self, fn: Functional, nodes: list[np.ndarray]):
        self.fn = fn
        self.nodes = nodes
        self.energies = [fn.energy(u) for u in nodes]

    def argmax(self) -> int:
        inner = self.energies[1:-1]
        return 1 + int(np.argmax(inner))

    def resample(self, j: int) -> int:
        """Redistribute nodes on both sides of ``j``; returns the new peak index."""
        P = len(self.nodes) - 1
        half = P // 2
        left = self._resample_side(self.nodes[: j + 1], self.energies[: j + 1], half)
        right = self._resample_side(self.nodes[j:], self.energies[j:], P - half)
        nodes = left[0] + right[0][1:]
        energies = left[1] + right[1][1:]
        self.nodes, self.energies = nodes, energies
        return half

    def _resample_side(self, nodes, energies, segments):
        fn = self.fn
        qref = max(fn.quadratic(self.nodes[-1]), 1e-300)
        eref = max(max(abs(e) for e in self.energies), 1e-300)
        lengths = [
            math.sqrt(max(fn.quadratic(b - a), 0.0) / qref + ((eb - ea) / eref) ** 2)
            for a, b, ea, eb in zip(nodes[:-1], nodes[1:], energies[:-1], energies[1:])
        ]
        cum = np.concatenate([[0.0], np.cumsum(lengths)])
        if cum[-1] == 0.0 or len(nodes) < 2:
            return [nodes[0]] * segments + [nodes[-1]], [energies[0]] * segments + [energies[-1]]
        new_nodes, new_energies = [nodes[0]], [energies[0]]
        for target in cum[-1] * np.arange(1, segments) / segments:
            i = min(int(np.searchsorted(cum, target, side="right")) - 1, len(nodes) - 2)
            frac = (target - cum[i]) / (cum[i + 1] - cum[i]) if cum[i + 1] > cum[i] else 0.0
            v = nodes[i] + frac * (nodes[i + 1] - nodes[i])
            new_nodes.append(v)
            new_energies.append(fn.energy(v))
        new_nodes.append(nodes[-1])
        new_energies.append(energies[-1])
        return new_nodes, new_energies


def _ray_path(fn: Functional, u: np.ndarray, P: int) -> tuple[_Path, float]:
    """Path ``0 -> u -> T u`` along the ray through ``u``, with ``E(T u) < 0``.

    Rebuilding the path through the current peak keeps it in the admissible
    class (a chord from a narrow peak to a fixed, wider endpoint can pass over
    higher ground than the peak itself).
    """
    T = 2.0
    while fn.energy(T * u) >= 0:
        T *= 2.0
        if T > 2.0**60:
            raise SolverError("energy never becomes negative along the peak ray")
    half = P // 2
    nodes = [(j / half) * u for j in range(half + 1)]
    nodes += [(1.0 + (T - 1.0) * j / (P - half)) * u for j in range(1, P - half + 1)]
    path = _Path(fn, nodes)
    path.resample(half)
    return path, T


def climb(fn: Functional, u: np.ndarray, tau: np.ndarray, s_max: float = 64.0,
          xtol: float = 1e-15) -> tuple[np.ndarray, float]:
    """Maximize ``E(u + sτ)`` for ``|s| <= s_max`` through the root of ``<E'(u + sτ), τ>``."""
    grid = fn.grid

    def slope(s):
        return inner_l2(grid, fn.gradient(u + s * tau), tau)

    d0 = slope(0.0)
    if d0 == 0.0:
        return u, fn.energy(u)
    direction = 1.0 if d0 > 0 else -1.0
    lo, step = 0.0, 1.0 / 64
    s_hit = None
    while step <= s_max * (1 + 1e-12):
        s = direction * step
        if slope(s) * direction <= 0:
            s_hit = s
            break
        lo, step = s, step * 2
    if s_hit is None:
        s_best = direction * s_max
    else:
        a, b = sorted((lo, s_hit))
        s_best = brentq(slope, a, b, xtol=xtol, rtol=4 * np.finfo(float).eps, maxiter=200)
    v = u + s_best * tau
    return v, fn.energy(v)


def mountain_pass_solve(ctx: EnergyContext, config: MPConfig = MPConfig(),
                        functional: str = "J", endpoint: tuple[np.ndarray, float] | None = None
                        ) -> SolveReport:
    """Path-deformation minimax for the mountain-pass critical point of ``E``.

    Returns a :class:`SolveReport` whose ``u`` is the highest path node at
    termination and whose ``level`` is its energy.  Raises
    :class:`PathCollapse` if the path maximum becomes non-positive.
    """
    fn = ctx.functional(functional)
    grid = ctx.grid
    pre = _preconditioner(fn, config)
    e, T = endpoint if endpoint is not None else make_endpoint(ctx, config, functional)
    P = config.path_points
    half = P // 2
    if config.nehari_init:
        phi = e / T
        t_star = nehari_scale(ctx, phi, functional)
        mid = t_star * phi
        nodes = [(j / half) * mid for j in range(half + 1)]
        nodes += [mid + (j / (P - half)) * (e - mid) for j in range(1, P - half + 1)]
    else:
        nodes = [(j / P) * e for j in range(P + 1)]
    path = _Path(fn, nodes)

    j = path.argmax()
    u, level = climb(fn, path.nodes[j], path.nodes[j])
    path.nodes[j], path.energies[j] = u, level
    history = [level]
    alpha = 1.0
    converged = False
    message = ""
    gnorm = math.inf
    it = 0
    for it in range(config.max_outer_iters + 1):
        if level <= 0:
            raise PathCollapse(f"path maximum {level:.3e} <= 0 after {it} iterations")
        r = fn.gradient(u)
        z = pre(r)
        g2 = max(inner_l2(grid, z, r), 0.0)
        gnorm = math.sqrt(g2)
        if gnorm <= config.grad_tol:
            converged = True
            break
        if it == config.max_outer_iters:
            message = "iteration cap reached"
            break
        slack = ROUNDING_SLACK * max(1.0, abs(level))
        alpha = min(1.0, 2.0 * alpha)
        for _ in range(config.max_backtracks):
            step = u - alpha * z
            trial, val = climb(fn, step, step)
            if val <= level - config.armijo_c1 * alpha * g2 + slack:
                break
            alpha *= config.backtrack
        else:
            message = f"line search failed at gradient norm {gnorm:.3e}"
            break
        path, T_ray = _ray_path(fn, trial, P)
        j = half
        jmax = path.argmax()
        if path.energies[jmax] > path.energies[j]:
            # a resampled node rose above the peak: restart the peak there
            j = jmax
            trial, val = climb(fn, path.nodes[j], path.nodes[j])
            path.nodes[j], path.energies[j] = trial, val
        u, level = path.nodes[j], path.energies[j]
        history.append(level)
        if it % 50 == 0:
            log.debug("iter %d level %.12g grad %.3e alpha %.3g", it, level, gnorm, alpha)
    if not converged and not message:
        message = "not converged"
    return SolveReport(u=u, level=level, norm_sq=fn.quadratic(u), grad_norm=gnorm, iters=it,
                       converged=converged, endpoint_scale=T, path_max_index=j,
                       functional=functional, level_history=history, message=message)


def autonomous_context(ctx: EnergyContext) -> EnergyContext:
    """Same grid, constant potential ``V_inf``, pure nonlinearity."""
    pot = constant_potential(ctx.v_inf, ctx.grid.dim)
    return EnergyContext(ctx.grid, pot, ctx.nonlinearity, None, 1.0)


def autonomous_level(ctx: EnergyContext, config: MPConfig = MPConfig()
                     ) -> tuple[np.ndarray, float, SolveReport]:
    """Ground state ``w`` and level ``c_inf`` of the constant-coefficient problem."""
    auto = autonomous_context(ctx)
    report = mountain_pass_solve(auto, config, functional="I")
    return report.u, report.level, report


def nehari_level(ctx: EnergyContext, config: MPConfig = MPConfig(),
                 u0: np.ndarray | None = None) -> tuple[np.ndarray, float, int]:
    """Minimize ``I_inf`` on the Nehari manifold (pure power only).

    Independent of the path machinery: projected preconditioned gradient
    descent with the closed-form fibering maximizer.
    """
    fn = ctx.functional_I_infty
    grid = ctx.grid
    pre = _preconditioner(fn, config)
    u = bump(autonomous_context(ctx), config) if u0 is None else u0.copy()
    u = power_nehari_scale(ctx, u) * u
    val = fn.energy(u)
    alpha = 1.0
    for it in range(config.max_outer_iters):
        r = fn.gradient(u)
        z = pre(r)
        g2 = max(inner_l2(grid, z, r), 0.0)
        if math.sqrt(g2) <= config.grad_tol:
            return u, val, it
        alpha = min(1.0, 2 * alpha)
        slack = ROUNDING_SLACK * max(1.0, abs(val))
        for _ in range(config.max_backtracks):
            trial = u - alpha * z
            trial = power_nehari_scale(ctx, trial) * trial
            tval = fn.energy(trial)
            if tval <= val - config.armijo_c1 * alpha * g2 + slack:
                break
            alpha *= config.backtrack
        else:
            raise SolverError("Nehari descent line search failed")
        u, val = trial, tval
    raise SolverError("Nehari descent did not converge")
