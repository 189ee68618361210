"""Acceptance criteria, one test each; every test records a PASS/FAIL line.

The lines are printed immediately (visible with ``-s``) and repeated in the
terminal summary by the hook in ``conftest.py``.
"""
import math
import time
from pathlib import Path

import numpy as np
import pytest

from conftest import CATALOG_EPS, autonomous_ctx, smooth_field
from penmp.analysis import verify_level_bound, verify_norm_bound
from penmp.critical_point import MPConfig, mountain_pass_solve, nehari_level
from penmp.energy import make_context
from penmp.grid import build_grid
from penmp.io import format_sweep_csv, read_sweep_csv, sweep_record, SWEEP_COLUMNS
from penmp.model import catalog_potential, make_penalization, power_nonlinearity
from penmp.oracle import shooting_oracle

PINNED = Path(__file__).parent / "fixtures" / "catalog_1d_sweep.csv"
RESULTS: list[str] = []


def record(number: int, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


def test_criterion_1_autonomous_oracle():
    t0 = time.perf_counter()
    ctx = autonomous_ctx(1.0, half_width=20.0, spacing=0.01)
    rep = mountain_pass_solve(ctx, MPConfig(), "I")
    elapsed = time.perf_counter() - t0
    ref = shooting_oracle(1.0, 4.0, 1e-4).level
    err = abs(rep.level / (4 / 3) - 1)
    ok = rep.converged and err <= 1e-2 and abs(ref - 4 / 3) <= 1e-3 and elapsed < 60
    record(1, ok, f"c_inf = {rep.level:.8f} (rel err {err:.2e} vs 4/3), "
                  f"shooting {ref:.8f}, {elapsed:.2f} s")


def test_criterion_2_gradient_consistency():
    grid = build_grid(1, 20.0, 0.05)
    ctx = make_context(grid, catalog_potential(1), power_nonlinearity(4.0), 0.25)
    fn = ctx.functional_J
    worst, slopes = 0.0, []
    for seed in range(10):
        rng = np.random.default_rng(seed)
        u = smooth_field(grid, rng, centre_scale=8.0)
        v = smooth_field(grid, rng, centre_scale=8.0)
        exact = fn.directional(u, v)
        errs = []
        for d in (1e-3, 1e-4):
            fd = (fn.energy(u + d * v) - fn.energy(u - d * v)) / (2 * d)
            errs.append(abs(fd - exact) / abs(exact))
        worst = max(worst, errs[1])
        # rounding in the energy difference, relative to the derivative being checked
        floor = np.finfo(float).eps * abs(fn.energy(u)) / (1e-4 * abs(exact))
        if errs[1] > 100 * floor:
            slopes.append(math.log10(errs[0] / errs[1]))
    ok = worst <= 1e-6 and len(slopes) >= 5 and all(1.8 <= s <= 2.2 for s in slopes)
    record(2, ok, f"max rel err {worst:.2e} at delta 1e-4; Richardson orders "
                  f"{min(slopes):.3f}..{max(slopes):.3f} on {len(slopes)} pairs above rounding")


def test_criterion_3_level_bound(catalog_sweep):
    rows = [r for r in catalog_sweep.rows if r.converged]
    checks = [verify_level_bound(r, 1e-6) for r in rows]
    ok = len(rows) == len(CATALOG_EPS) and all(checks)
    record(3, ok, "c_eps <= c_inf (1 + 1e-6) on all rows; margins "
                  + ", ".join(f"{c.margin:.6f}" for c in checks))


def test_criterion_4_norm_bound_and_chain(catalog_sweep):
    rows = catalog_sweep.rows
    norms = [verify_norm_bound(r, 1e-6) for r in rows]
    ok = all(r.converged for r in rows) and all(norms) and all(r.chain_ok for r in rows)
    ratios = ", ".join(f"{r.norm_sq / r.bound_2k_cinfty:.4f}" for r in rows)
    record(4, ok, f"||u||^2 / (2 k c_inf) = {ratios}; identity chain ok on every row")


def test_criterion_5_boundary_decay(catalog_sweep):
    rows = catalog_sweep.rows
    bm = [r.boundary_max for r in rows]
    last = rows[-1]
    ok = (all(b < a for a, b in zip(bm, bm[1:])) and bm[-1] < last.threshold_a / 10
          and last.exterior_sup <= last.threshold_a and last.solves_original
          and last.residual_original <= 1e-6)
    record(5, ok, "boundary_max " + " > ".join(f"{b:.3e}" for b in bm)
                  + f"; final residual {last.residual_original:.2e}, "
                    f"solves_original={last.solves_original}")


def test_criterion_6_positivity(catalog_sweep):
    rows = catalog_sweep.rows
    c_rep = catalog_sweep.c_infty_report
    mins = [r.min_interior for r in rows] + [float(np.min(c_rep.u[1:-1]))]
    globals_ = [r.min_value for r in rows] + [c_rep.min_value]
    ok = all(m > 0 for m in mins) and all(g >= -1e-12 for g in globals_)
    record(6, ok, f"min interior value {min(mins):.3e}, global min {min(globals_):.3e}")


def test_criterion_7_penalization_structure():
    pen = make_penalization(catalog_potential(1), power_nonlinearity(4.0))
    rng = np.random.default_rng(0)
    s = rng.uniform(-2, 10, 20000)
    inside = rng.uniform(-1, 1, (20000, 1))
    outside = rng.choice([-1, 1], (20000, 1)) * rng.uniform(1 + 1e-9, 50, (20000, 1))
    f = pen.nonlinearity.f(s)
    same_inside = np.array_equal(pen.g(inside, s), f)
    same_outside = np.array_equal(pen.g(outside, s), pen.f_tilde(s))
    a = pen.a
    x = np.array([[3.0]])
    jump_g = float(abs(pen.g(x, a + 1e-12) - pen.g(x, a - 1e-12))[0])
    jump_G = float(abs(pen.G(x, a + 1e-12) - pen.G(x, a - 1e-12))[0])
    ok = (same_inside and same_outside and jump_g < 1e-10 and jump_G < 1e-10
          and pen.k == 4 and a == 0.5 and a == (pen.v0 / pen.k) ** (1 / (4 - 2)))
    record(7, ok, f"g = f inside, g = f~ outside on 20000 samples; jumps at a "
                  f"{jump_g:.1e}/{jump_G:.1e}; k = {pen.k}, a = {a}")


def test_criterion_8_nehari_cross_check():
    ctx = autonomous_ctx(1.0, half_width=20.0, spacing=0.01)
    mp = mountain_pass_solve(ctx, MPConfig(), "I")
    _, val, iters = nehari_level(ctx)
    rel = abs(val / mp.level - 1)
    record(8, rel <= 5e-3, f"Nehari {val:.10f} vs mountain pass {mp.level:.10f} "
                           f"(rel {rel:.2e}, {iters} Nehari iterations)")


def test_criterion_9_determinism_and_regression(catalog_run, catalog_sweep):
    from penmp.analysis import epsilon_sweep

    again = epsilon_sweep(catalog_run, CATALOG_EPS)
    prov = catalog_run.provenance()
    first = format_sweep_csv(catalog_sweep.rows, catalog_sweep.summary, prov)
    second = format_sweep_csv(again.rows, again.summary, prov)
    identical = first == second
    pinned, _ = read_sweep_csv(PINNED)
    worst = 0.0
    exact_fields = True
    for pin, r in zip(pinned, catalog_sweep.rows):
        fresh = dict(zip(SWEEP_COLUMNS, sweep_record(r)))
        for key in SWEEP_COLUMNS:
            if key in ("solves_original", "converged", "argmax"):
                if key == "argmax":
                    a = [float(t) for t in pin[key].split(";")]
                    b = [float(t) for t in fresh[key].split(";")]
                    exact_fields &= np.allclose(a, b, rtol=0, atol=1e-9)
                else:
                    exact_fields &= pin[key] == fresh[key]
                continue
            p, q = float(pin[key]), float(fresh[key])
            worst = max(worst, abs(p - q) / max(1.0, abs(p)))
    ok = identical and len(pinned) == len(catalog_sweep.rows) and exact_fields and worst <= 1e-9
    record(9, ok, f"repeat run byte-identical={identical}; max deviation from pinned CSV "
                  f"{worst:.1e}")
