"""Shooting oracle for the autonomous ground state ``-u'' - (N-1)/r u' + m u = u^(p-1)``.

Independent of the grid solver: fixed-step RK4 on the profile ODE, bisection on
the initial height ``u(0)`` until the trajectory neither crosses zero nor
turns back up, and trapezoidal quadrature of the energy along the way.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np


class BracketError(RuntimeError):
    pass


@dataclass(frozen=True)
class OracleResult:
    level: float
    height: float
    decay_radius: float
    bisection_steps: int


@numba.njit(cache=True)
def _rhs(r, u, v, m, p, dim):
    up = u if u > 0.0 else 0.0
    acc = m * u - up ** (p - 1.0)
    if dim == 2:
        acc -= v / r
    return v, acc


@numba.njit(cache=True)
def _density(r, u, v, m, p, dim):
    up = u if u > 0.0 else 0.0
    e = 0.5 * v * v + 0.5 * m * u * u - up**p / p
    if dim == 2:
        return 2.0 * math.pi * r * e
    return 2.0 * e


@numba.njit(cache=True)
def _shoot(h0, m, p, step, dim, r_max):
    """Return (status, r_stop, energy): +1 crossed zero, -1 turned back up, 0 undecided."""
    if dim == 2:
        # series start off the r = 0 singularity
        c = (m * h0 - h0 ** (p - 1.0)) / 4.0
        r = step
        u = h0 + c * r * r
        v = 2.0 * c * r
        energy = 0.5 * r * (_density(0.0, h0, 0.0, m, p, dim) + _density(r, u, v, m, p, dim))
    else:
        r = 0.0
        u = h0
        v = 0.0
        energy = 0.0
    d_prev = _density(r, u, v, m, p, dim)
    while r < r_max:
        k1u, k1v = _rhs(r, u, v, m, p, dim)
        k2u, k2v = _rhs(r + 0.5 * step, u + 0.5 * step * k1u, v + 0.5 * step * k1v, m, p, dim)
        k3u, k3v = _rhs(r + 0.5 * step, u + 0.5 * step * k2u, v + 0.5 * step * k2v, m, p, dim)
        k4u, k4v = _rhs(r + step, u + step * k3u, v + step * k3v, m, p, dim)
        u_new = u + step * (k1u + 2.0 * k2u + 2.0 * k3u + k4u) / 6.0
        v_new = v + step * (k1v + 2.0 * k2v + 2.0 * k3v + k4v) / 6.0
        r += step
        if u_new < 0.0:
            return 1, r, energy
        if v_new > 0.0:
            return -1, r, energy
        d_new = _density(r, u_new, v_new, m, p, dim)
        energy += 0.5 * step * (d_prev + d_new)
        d_prev = d_new
        u, v = u_new, v_new
    return 0, r, energy


def shooting_oracle(m: float, p: float, integrator_step: float = 1e-4, dim: int = 1,
                    rtol: float = 1e-15) -> OracleResult:
    """Ground-state level and height of the autonomous problem by shooting."""
    if not m > 0:
        raise ValueError("m must be positive")
    if not p > 2:
        raise ValueError("p must exceed 2")
    if dim not in (1, 2):
        raise ValueError("dim must be 1 or 2")
    if not integrator_step > 0:
        raise ValueError("integrator_step must be positive")
    r_max = 80.0 / math.sqrt(m)
    guess = (0.5 * p * m) ** (1.0 / (p - 2.0))
    lo, hi = guess, guess
    for _ in range(200):
        if _shoot(lo, m, p, integrator_step, dim, r_max)[0] == -1:
            break
        lo *= 0.5
    else:
        raise BracketError("no undershooting height found")
    for _ in range(200):
        if _shoot(hi, m, p, integrator_step, dim, r_max)[0] == 1:
            break
        hi *= 2.0
    else:
        raise BracketError("no overshooting height found")
    steps = 0
    while hi - lo > rtol * hi and steps < 200:
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        status = _shoot(mid, m, p, integrator_step, dim, r_max)[0]
        if status == 1:
            hi = mid
        elif status == -1:
            lo = mid
        else:
            lo = hi = mid
        steps += 1
    # the undershooting side decays monotonically up to its turning point
    status, r_stop, energy = _shoot(lo, m, p, integrator_step, dim, r_max)
    return OracleResult(level=float(energy), height=float(lo), decay_radius=float(r_stop),
                        bisection_steps=steps)


def shooting_oracle_1d(m: float, p: float, integrator_step: float = 1e-4) -> float:
    return shooting_oracle(m, p, integrator_step, dim=1).level


def scaled_level(c1: float, m: float, p: float, dim: int = 1) -> float:
    """Level at potential ``m`` from the level at ``m = 1`` via ``u = m^(1/(p-2)) w(sqrt(m) y)``."""
    return m ** (2.0 / (p - 2.0) + 1.0 - dim / 2.0) * c1
