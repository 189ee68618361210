import numpy as np
import pytest

from penmp.analysis import epsilon_sweep
from penmp.config import config_from_dict
from penmp.energy import make_context
from penmp.grid import build_grid
from penmp.model import constant_potential, power_nonlinearity

CATALOG_EPS = [1.0, 0.5, 0.25, 0.125]


@pytest.fixture(scope="session")
def catalog_run():
    return config_from_dict({"sweep": {"eps_list": CATALOG_EPS}}, "catalog")


@pytest.fixture(scope="session")
def catalog_sweep(catalog_run):
    return epsilon_sweep(catalog_run, CATALOG_EPS)


@pytest.fixture(scope="session")
def cubic():
    return power_nonlinearity(4.0)


def autonomous_ctx(value=1.0, dim=1, half_width=20.0, spacing=0.01, p=4.0):
    grid = build_grid(dim, half_width, spacing)
    return make_context(grid, constant_potential(value, dim), power_nonlinearity(p), 1.0,
                        penalized=False)


def smooth_field(grid, rng, centre_scale=2.0, amplitude=1.0):
    """Random Gaussian-sum field, zero on the boundary."""
    out = grid.zeros()
    for _ in range(3):
        c = rng.uniform(-centre_scale, centre_scale, grid.dim)
        w = rng.uniform(0.5, 2.0)
        out += amplitude * rng.uniform(-0.5, 1.5) * np.exp(
            -np.sum((grid.coords - c) ** 2, axis=-1) / w**2)
    out[grid.boundary_mask] = 0.0
    return out


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
