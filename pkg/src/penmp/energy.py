"""Discrete functionals I_eps, J_eps, I_inf on a grid in the scaled variable y.

All three share the quadratic form ``½(<-Δ_h u, u> + <W u, u>)`` with a node
weight ``W`` and subtract a nodewise primitive integrated with the same
``h^dim`` weights, so each gradient is the exact discrete derivative of its
energy.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from .grid import Grid, inner_l2, integrate, laplacian_apply
from .model import ModelError, Nonlinearity, Penalization, Potential, make_penalization


@dataclass(frozen=True, eq=False)
class Functional:
    """``E(u) = ½<(-Δ_h + W) u, u> - ∫ P(u)`` with nodewise primitive P and derivative q."""

    grid: Grid
    weight: np.ndarray | float
    primitive: Callable[[np.ndarray], np.ndarray]
    derivative: Callable[[np.ndarray], np.ndarray]
    name: str = ""

    def quadratic(self, u: np.ndarray) -> float:
        return inner_l2(self.grid, laplacian_apply(self.grid, u), u) + inner_l2(
            self.grid, self.weight * u, u)

    def energy(self, u: np.ndarray) -> float:
        return 0.5 * self.quadratic(u) - integrate(self.grid, self.primitive(u))

    def linear_part(self, u: np.ndarray) -> np.ndarray:
        out = laplacian_apply(self.grid, u) + self.weight * u
        out[self.grid.boundary_mask] = 0.0
        return out

    def gradient(self, u: np.ndarray) -> np.ndarray:
        """L2 representative ``-Δ_h u + W u - q(u)`` of the Gateaux derivative."""
        out = self.linear_part(u) - self.derivative(u)
        out[self.grid.boundary_mask] = 0.0
        return out

    def directional(self, u: np.ndarray, v: np.ndarray) -> float:
        return inner_l2(self.grid, self.gradient(u), v)

    @cached_property
    def weight_field(self) -> np.ndarray:
        return np.broadcast_to(np.asarray(self.weight, dtype=float), self.grid.shape)


@dataclass(frozen=True, eq=False)
class EnergyContext:
    """Grid, model and eps; Omega_eps = Omega / eps lives in the scaled coordinates."""

    grid: Grid
    potential: Potential
    nonlinearity: Nonlinearity
    penalization: Penalization | None
    eps: float
    v_inf: float = field(default=0.0)

    def __post_init__(self):
        if not self.eps > 0:
            raise ModelError(f"eps must be positive, got {self.eps}")
        if self.grid.dim != self.potential.dim:
            raise ModelError("grid and potential dimensions differ")
        if self.penalization is not None and self.potential.class_tag == 1:
            expected = 1.0 / self.eps
            if abs(self.penalization.omega.radius - expected) > 1e-12 * expected:
                raise ModelError("class 1 penalization must use Omega = B_{1/eps}(0)")
        if not self.v_inf:
            object.__setattr__(self, "v_inf", self.potential.v_inf)

    @cached_property
    def physical_coords(self) -> np.ndarray:
        return self.eps * self.grid.coords

    @cached_property
    def v_eps(self) -> np.ndarray:
        """V(eps y) at the nodes."""
        return np.asarray(self.potential.evaluate(self.physical_coords), dtype=float)

    @cached_property
    def omega_scaled(self):
        if self.penalization is None:
            return None
        return self.penalization.omega.scaled(1.0 / self.eps)

    @cached_property
    def inside(self) -> np.ndarray:
        """chi_Omega(eps y) at the nodes; everywhere true without penalization."""
        if self.penalization is None:
            return np.ones(self.grid.shape, dtype=bool)
        return self.penalization.omega.contains(self.physical_coords)

    @cached_property
    def functional_I(self) -> Functional:
        nl = self.nonlinearity
        return Functional(self.grid, self.v_eps, nl.F, nl.f, "I")

    @cached_property
    def functional_J(self) -> Functional:
        pen = self.penalization
        if pen is None:
            return self.functional_I
        inside = self.inside
        return Functional(self.grid, self.v_eps,
                          lambda s: pen.G_masked(inside, s),
                          lambda s: pen.g_masked(inside, s), "J")

    @cached_property
    def functional_I_infty(self) -> Functional:
        nl = self.nonlinearity
        return Functional(self.grid, float(self.v_inf), nl.F, nl.f, "I_infty")

    def functional(self, name: str) -> Functional:
        return {"I": self.functional_I, "J": self.functional_J,
                "I_infty": self.functional_I_infty}[name]


def make_context(grid: Grid, potential: Potential, nonlinearity: Nonlinearity,
                 eps: float, penalized: bool = True) -> EnergyContext:
    pen = make_penalization(potential, nonlinearity, eps) if penalized else None
    return EnergyContext(grid, potential, nonlinearity, pen, float(eps))


def energy_I(ctx: EnergyContext, u: np.ndarray) -> float:
    return ctx.functional_I.energy(u)


def energy_J(ctx: EnergyContext, u: np.ndarray) -> float:
    return ctx.functional_J.energy(u)


def energy_I_infty(ctx: EnergyContext, u: np.ndarray) -> float:
    return ctx.functional_I_infty.energy(u)


def grad_I(ctx: EnergyContext, u: np.ndarray) -> np.ndarray:
    return ctx.functional_I.gradient(u)


def grad_J(ctx: EnergyContext, u: np.ndarray) -> np.ndarray:
    return ctx.functional_J.gradient(u)


def grad_I_infty(ctx: EnergyContext, u: np.ndarray) -> np.ndarray:
    return ctx.functional_I_infty.gradient(u)


def nehari_scale(ctx: EnergyContext, u: np.ndarray, functional: str = "J",
                 t_max: float = 2.0**60, xtol: float = 1e-15) -> float:
    """Return ``t*`` with ``<E'(t* u), t* u> = 0`` (bisection-type root finding).

    Raises :class:`ModelError` ("no Nehari crossing") when the fibering map
    ``t -> <E'(t u), u>`` does not change sign on ``(0, t_max]``.
    """
    fn = ctx.functional(functional)
    if not np.any(u > 0):
        raise ModelError("no Nehari crossing: u has no positive part")

    def fiber(t):
        return fn.directional(t * u, u) / t

    lo, hi = 1.0, 1.0
    if fiber(1.0) > 0:
        while fiber(hi) > 0:
            lo, hi = hi, hi * 2.0
            if hi > t_max:
                raise ModelError("no Nehari crossing below t_max")
    else:
        while fiber(lo) <= 0:
            hi, lo = lo, lo * 0.5
            if lo < 1.0 / t_max:
                raise ModelError("no Nehari crossing above 1/t_max")
    return brentq(fiber, lo, hi, xtol=xtol * hi, rtol=4 * np.finfo(float).eps, maxiter=500)


def power_nehari_scale(ctx: EnergyContext, u: np.ndarray) -> float:
    """Closed form ``(||u||²_{V_inf} / ∫(u+)^p)^(1/(p-2))`` for the pure power and I_infty."""
    p = ctx.nonlinearity.power_exponent
    if p is None:
        raise ModelError("closed-form Nehari scale needs a pure power nonlinearity")
    q = ctx.functional_I_infty.quadratic(u)
    mass = integrate(ctx.grid, np.maximum(u, 0.0) ** p)
    return (q / mass) ** (1.0 / (p - 2.0))
