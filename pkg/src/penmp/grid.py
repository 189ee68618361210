"""Uniform tensor grids on the truncated box [-L, L]^dim in scaled coordinates.

Fields are plain numpy arrays of shape ``grid.shape`` that hold every node,
boundary included.  Boundary nodes carry the homogeneous Dirichlet value 0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

#: Largest relative downward adjustment of the spacing accepted by build_grid.
MAX_SPACING_ADJUST = 0.01


class GridError(ValueError):
    pass


@dataclass(frozen=True)
class Grid:
    dim: int
    half_width: float
    spacing: float
    points_per_axis: int
    requested_spacing: float = field(default=0.0, compare=False)

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.points_per_axis,) * self.dim

    @property
    def size(self) -> int:
        return self.points_per_axis**self.dim

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dim

    @cached_property
    def axis(self) -> np.ndarray:
        n = self.points_per_axis
        return -self.half_width + self.spacing * np.arange(n)

    @cached_property
    def coords(self) -> np.ndarray:
        """Node coordinates, shape ``shape + (dim,)``."""
        axes = np.meshgrid(*([self.axis] * self.dim), indexing="ij")
        return np.stack(axes, axis=-1)

    @cached_property
    def radius(self) -> np.ndarray:
        return np.sqrt(np.sum(self.coords**2, axis=-1))

    @cached_property
    def interior(self) -> tuple[slice, ...]:
        return (slice(1, -1),) * self.dim

    @cached_property
    def boundary_mask(self) -> np.ndarray:
        mask = np.ones(self.shape, dtype=bool)
        mask[self.interior] = False
        return mask

    def zeros(self) -> np.ndarray:
        return np.zeros(self.shape)

    def field_from(self, func) -> np.ndarray:
        """Sample ``func(coords)`` on the nodes and clamp the boundary to zero."""
        values = np.asarray(func(self.coords), dtype=float)
        values = np.broadcast_to(values, self.shape).copy()
        values[self.boundary_mask] = 0.0
        return values

    def check(self, u: np.ndarray) -> None:
        if np.shape(u) != self.shape:
            raise GridError(f"field shape {np.shape(u)} does not match grid {self.shape}")

    def metadata(self) -> dict:
        return {
            "dim": self.dim,
            "n": self.points_per_axis,
            "h": self.spacing,
            "L": self.half_width,
            "requested_h": self.requested_spacing or self.spacing,
        }


def build_grid(dim: int, half_width: float, spacing: float) -> Grid:
    """Build the grid with nodes aligned on ``±half_width``.

    The spacing is reduced to ``L / m`` with ``m = ceil(L / h)``.  A reduction
    of more than 1% is refused rather than silently accepted.
    """
    if dim not in (1, 2):
        raise GridError(f"dim must be 1 or 2, got {dim}")
    if not (half_width > 0 and spacing > 0):
        raise GridError("half_width and spacing must be positive")
    if half_width < 5 * spacing * (1 - 1e-12):
        raise GridError(f"half_width {half_width} < 5 * spacing {spacing}")
    ratio = half_width / spacing
    m = round(ratio)
    if abs(ratio - m) > 1e-9 * max(1.0, ratio):
        m = math.ceil(ratio)
    h = half_width / m
    if (spacing - h) / spacing > MAX_SPACING_ADJUST:
        raise GridError(
            f"aligning nodes with +-{half_width} needs spacing {h:.6g} "
            f"(> {MAX_SPACING_ADJUST:.0%} below requested {spacing})"
        )
    return Grid(dim=dim, half_width=float(half_width), spacing=h,
                points_per_axis=2 * m + 1, requested_spacing=float(spacing))


def laplacian_apply(grid: Grid, u: np.ndarray) -> np.ndarray:
    """Return ``-Δ_h u`` with the 3-/5-point stencil and zero Dirichlet data.

    The result vanishes on boundary nodes.
    """
    grid.check(u)
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    inv_h2 = 1.0 / grid.spacing**2
    if grid.dim == 1:
        out[1:-1] = (2.0 * u[1:-1] - u[:-2] - u[2:]) * inv_h2
    else:
        c = u[1:-1, 1:-1]
        out[1:-1, 1:-1] = (4.0 * c - u[:-2, 1:-1] - u[2:, 1:-1]
                           - u[1:-1, :-2] - u[1:-1, 2:]) * inv_h2
    return out


def inner_l2(grid: Grid, u: np.ndarray, v: np.ndarray) -> float:
    """Nodal quadrature ``h^dim * sum(u * v)`` for the L2 pairing."""
    grid.check(u)
    grid.check(v)
    return float(grid.cell_volume * np.vdot(np.ravel(u), np.ravel(v)))


def integrate(grid: Grid, u: np.ndarray) -> float:
    grid.check(u)
    return float(grid.cell_volume * np.sum(u))


def weighted_norm_sq(grid: Grid, u: np.ndarray, weight: np.ndarray | float) -> float:
    """Discrete ``∫ |∇u|² + W |u|²`` through the stencil: ``<-Δ_h u, u> + <W u, u>``.

    ``weight`` is the potential already sampled at the nodes (``V(εy)``) or a
    constant.
    """
    return inner_l2(grid, laplacian_apply(grid, u), u) + inner_l2(grid, weight * u, u)


def stencil_eigenvalue(spacing: float, wavenumber: float) -> float:
    """Eigenvalue of the 1D stencil ``-Δ_h`` on ``sin(wavenumber * y)``."""
    return (2.0 / spacing**2) * (1.0 - math.cos(wavenumber * spacing))
