import dataclasses
import math

import numpy as np
import pytest

from conftest import autonomous_ctx
from penmp.critical_point import (MPConfig, PathCollapse, Preconditioner, autonomous_level,
                                  bump, climb, dual_norm, make_endpoint, mountain_pass_solve,
                                  nehari_level, operator_matrix, precondition)
from penmp.energy import make_context
from penmp.grid import build_grid, integrate, stencil_eigenvalue
from penmp.model import (ModelError, Nonlinearity, catalog_potential, constant_potential,
                         power_nonlinearity)
from penmp.oracle import scaled_level, shooting_oracle


@pytest.fixture(scope="module")
def ground_1d():
    ctx = autonomous_ctx(1.0, half_width=20.0, spacing=0.01)
    return ctx, mountain_pass_solve(ctx, MPConfig(), "I")


def catalog_ctx(eps, L=None, h=0.02):
    grid = build_grid(1, L if L is not None else 20.0 / eps, h)
    return make_context(grid, catalog_potential(1), power_nonlinearity(4.0), eps)


# ----------------------------------------------------------------- config


@pytest.mark.parametrize("bad", [dict(path_points=8), dict(grad_tol=0.0), dict(armijo_c1=0.7),
                                 dict(backtrack=1.0), dict(precond="jacobi"),
                                 dict(cg_tol=-1.0)])
def test_config_rejects(bad):
    with pytest.raises(ValueError):
        MPConfig(**bad)


# ----------------------------------------------------------- precondition


@pytest.mark.parametrize("method", ["lu", "cg"])
def test_precondition_recovers_known_field(method):
    ctx = catalog_ctx(0.5, L=10.0, h=0.05)
    w = ctx.grid.field_from(lambda y: np.exp(-y[..., 0] ** 2) * np.cos(y[..., 0]))
    r = ctx.functional_J.linear_part(w)
    z = precondition(ctx, r, MPConfig(precond=method))
    assert np.max(np.abs(z - w)) < 1e-10


@pytest.mark.parametrize("method", ["lu", "cg"])
def test_precondition_eigenfield(method):
    L, h = 5.0, 0.05
    ctx = autonomous_ctx(1.0, half_width=L, spacing=h)
    r = ctx.grid.field_from(lambda y: np.sin(math.pi * y[..., 0] / L))
    z = precondition(ctx, r, MPConfig(precond=method), "I")
    lam = stencil_eigenvalue(h, math.pi / L)
    assert np.max(np.abs(z - r / (lam + 1))) < 1e-10


def test_precondition_zero_and_2d():
    ctx = autonomous_ctx(1.0, dim=2, half_width=3.0, spacing=0.1)
    assert np.all(precondition(ctx, ctx.grid.zeros(), functional="I") == 0)
    r = ctx.grid.field_from(lambda y: np.exp(-np.sum(y**2, axis=-1)))
    z_lu = precondition(ctx, r, MPConfig(), "I")
    z_cg = precondition(ctx, r, MPConfig(precond="cg"), "I")
    assert np.max(np.abs(z_lu - z_cg)) < 1e-10
    assert dual_norm(ctx.grid, z_lu, r) > 0


def test_cg_iteration_cap_reports_residual():
    ctx = autonomous_ctx(1.0, half_width=20.0, spacing=0.01)
    pre = Preconditioner(ctx.functional_I, "cg", 1e-14, max_iters=3)
    pre(ctx.grid.field_from(lambda y: np.exp(-y[..., 0] ** 2)))
    assert pre.last_iters == 3 and pre.last_residual > 1e-14


def test_operator_matrix_matches_stencil():
    ctx = catalog_ctx(0.5, L=3.0, h=0.1)
    A = operator_matrix(ctx.grid, ctx.functional_J.weight)
    u = ctx.grid.field_from(lambda y: np.exp(-y[..., 0] ** 2))
    out = ctx.functional_J.linear_part(u)
    assert np.allclose(A @ u[1:-1], out[1:-1], atol=1e-12)


# -------------------------------------------------------------- endpoint


def test_bump_unit_mass_centred():
    ctx = catalog_ctx(0.25)
    phi = bump(ctx)
    assert integrate(ctx.grid, phi) == pytest.approx(1.0, rel=1e-14)
    assert ctx.grid.axis[np.argmax(phi)] == 0.0


def test_endpoint_negative_and_doubling():
    ctx = autonomous_ctx(1.0, half_width=20.0, spacing=0.01)
    e, T = make_endpoint(ctx, functional="I")
    fn = ctx.functional_I
    assert fn.energy(e) < 0 and fn.energy(e / 2) >= 0
    assert math.log2(T) == int(math.log2(T))
    # E(t phi) = A t^2/2 - B t^4/4 crosses zero at sqrt(2A/B)
    phi = e / T
    A, B = fn.quadratic(phi), integrate(ctx.grid, phi**4)
    assert T / 2 <= math.sqrt(2 * A / B) < T


def test_endpoint_cap_without_superquadratic_growth():
    zero = Nonlinearity(lambda s: 0.0 * s, lambda s: 0.0 * s, theta=3.0, p=3.0)
    grid = build_grid(1, 10.0, 0.1)
    ctx = make_context(grid, constant_potential(1.0, 1), zero, 1.0, penalized=False)
    with pytest.raises(ModelError, match="never becomes negative"):
        make_endpoint(ctx, functional="I")


def test_climb_finds_ray_maximum():
    ctx = autonomous_ctx(1.0, half_width=10.0, spacing=0.05)
    fn = ctx.functional_I
    phi = ctx.grid.field_from(lambda y: np.exp(-y[..., 0] ** 2))
    v, val = climb(fn, phi, phi)
    # pure power: the ray maximum is the Nehari point
    A, B = fn.quadratic(phi), integrate(ctx.grid, phi**4)
    t_star = math.sqrt(A / B)
    assert np.allclose(v, t_star * phi, rtol=1e-10)
    assert val == pytest.approx(A * A / (4 * B), rel=1e-12)


# ----------------------------------------------------------- mountain pass


def test_autonomous_soliton_level(ground_1d):
    ctx, rep = ground_1d
    assert rep.converged and rep.grad_norm <= 1e-8
    assert rep.level == pytest.approx(4 / 3, rel=1e-2)
    assert rep.level == pytest.approx(ctx.functional_I.energy(rep.u), abs=1e-12)
    assert np.max(rep.u) == pytest.approx(math.sqrt(2), rel=1e-3)
    assert rep.norm_sq == pytest.approx(4 * rep.level, rel=1e-6)  # Nehari: c = (1/4)||u||^2


def test_level_history_non_increasing(ground_1d):
    _, rep = ground_1d
    hist = np.array(rep.level_history)
    assert np.all(np.diff(hist) <= 1e-12 * np.maximum(1.0, np.abs(hist[:-1])))


def test_nonnegative_solution(ground_1d):
    _, rep = ground_1d
    assert rep.min_value >= -1e-12
    assert np.min(rep.u[1:-1]) > 0


def test_scaling_identity_m4():
    ctx = autonomous_ctx(4.0, half_width=10.0, spacing=0.005)
    rep = mountain_pass_solve(ctx, MPConfig(), "I")
    assert rep.converged
    assert scaled_level(4 / 3, 4.0, 4.0) == pytest.approx(32 / 3)
    assert rep.level == pytest.approx(32 / 3, rel=1e-2)


def test_quadratic_nonlinearity_level():
    # p = 3: w = (3/2) sech^2(y/2), level 6/5
    ctx = autonomous_ctx(1.0, half_width=30.0, spacing=0.01, p=3.0)
    rep = mountain_pass_solve(ctx, MPConfig(), "I")
    assert rep.converged
    assert rep.level == pytest.approx(6 / 5, rel=1e-2)
    assert np.max(rep.u) == pytest.approx(1.5, rel=1e-3)


def test_autonomous_v_inf_two_against_shooting():
    ctx = catalog_ctx(1.0, L=20.0, h=0.01)
    w, c_inf, rep = autonomous_level(ctx)
    ref = shooting_oracle(2.0, 4.0, 1e-4).level
    assert c_inf == pytest.approx(ref, rel=1e-2)
    assert c_inf == pytest.approx(2**1.5 * 4 / 3, rel=1e-2)


def test_autonomous_2d_against_radial_shooting():
    ctx = autonomous_ctx(1.0, dim=2, half_width=12.0, spacing=0.125)
    rep = mountain_pass_solve(ctx, MPConfig(), "I")
    ref = shooting_oracle(1.0, 4.0, 1e-4, dim=2).level
    assert rep.converged
    assert rep.level == pytest.approx(ref, rel=2e-2)


def test_nehari_cross_check(ground_1d):
    ctx, rep = ground_1d
    _, val, _ = nehari_level(ctx)
    assert val == pytest.approx(rep.level, rel=5e-3)


def test_translation_sanity():
    ctx = autonomous_ctx(1.0, half_width=20.0, spacing=0.02)
    base = mountain_pass_solve(ctx, MPConfig(), "I")
    moved = mountain_pass_solve(ctx, MPConfig(bump_offset=(2 * ctx.grid.spacing,)), "I")
    assert abs(moved.level - base.level) < 1e-3 * base.level
    shift = ctx.grid.axis[np.argmax(moved.u)] - ctx.grid.axis[np.argmax(base.u)]
    assert shift == pytest.approx(2 * ctx.grid.spacing)


def test_determinism_bit_identical():
    ctx = catalog_ctx(0.5, h=0.05)
    cfg = MPConfig(seed=3)
    a = mountain_pass_solve(ctx, cfg)
    b = mountain_pass_solve(ctx, cfg)
    assert np.array_equal(a.u, b.u) and a.level == b.level and a.iters == b.iters


def test_plain_path_and_cg_agree():
    ctx = catalog_ctx(0.5, h=0.05)
    ref = mountain_pass_solve(ctx, MPConfig())
    plain = mountain_pass_solve(ctx, MPConfig(nehari_init=False))
    cg = mountain_pass_solve(ctx, MPConfig(precond="cg"))
    for rep in (plain, cg):
        assert rep.converged
        assert rep.level == pytest.approx(ref.level, rel=1e-10)


def test_penalized_level_positive_and_critical():
    ctx = catalog_ctx(0.25)
    rep = mountain_pass_solve(ctx)
    assert rep.converged and rep.level > 0
    r = ctx.functional_J.gradient(rep.u)
    z = precondition(ctx, r)
    assert dual_norm(ctx.grid, z, r) == pytest.approx(rep.grad_norm, rel=1e-12)


def test_iteration_cap_reported():
    ctx = catalog_ctx(0.5, h=0.05)
    rep = mountain_pass_solve(ctx, MPConfig(max_outer_iters=2, nehari_init=False))
    assert not rep.converged and rep.message == "iteration cap reached"
    assert rep.grad_norm > 1e-8


def test_path_collapse_on_non_positive_peak():
    ctx = autonomous_ctx(1.0, half_width=10.0, spacing=0.05)
    fn = ctx.functional_I
    e = -ctx.grid.field_from(lambda y: np.exp(-y[..., 0] ** 2))
    # an endpoint with E >= 0 and no hill in between: the peak is at most 0
    with pytest.raises((PathCollapse, ModelError)):
        mountain_pass_solve(ctx, MPConfig(nehari_init=False), "I", endpoint=(0 * e, 1.0))
    assert fn.energy(0 * e) == 0


def test_report_fields():
    ctx = catalog_ctx(0.5, h=0.05)
    rep = mountain_pass_solve(ctx)
    names = {f.name for f in dataclasses.fields(rep)}
    assert {"u", "level", "norm_sq", "grad_norm", "iters", "converged", "endpoint_scale",
            "path_max_index"} <= names
    assert rep.norm_sq == pytest.approx(ctx.functional_J.quadratic(rep.u))
