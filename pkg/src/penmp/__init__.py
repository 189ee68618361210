"""Penalized mountain-pass solver and verification suite for -eps^2 Δu + V(x) u = f(u)."""

__version__ = "0.1.0"

from .grid import Grid, build_grid, inner_l2, laplacian_apply, weighted_norm_sq
from .model import (Ball, Box, Nonlinearity, Penalization, Potential, catalog_potential,
                    compute_k, constant_potential, make_penalization, power_nonlinearity,
                    truncation_threshold, validate_hypotheses)
from .energy import EnergyContext, energy_I, energy_I_infty, energy_J, grad_J, make_context
from .critical_point import MPConfig, SolveReport, autonomous_level, mountain_pass_solve
from .oracle import shooting_oracle, shooting_oracle_1d

__all__ = [
    "Ball", "Box", "EnergyContext", "Grid", "MPConfig", "Nonlinearity", "Penalization",
    "Potential", "SolveReport", "autonomous_level", "build_grid", "catalog_potential",
    "compute_k", "constant_potential", "energy_I", "energy_I_infty", "energy_J", "grad_J",
    "inner_l2", "laplacian_apply", "make_context", "make_penalization", "mountain_pass_solve",
    "power_nonlinearity", "shooting_oracle", "shooting_oracle_1d", "truncation_threshold",
    "validate_hypotheses", "weighted_norm_sq",
]
