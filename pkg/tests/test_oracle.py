import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from penmp.oracle import scaled_level, shooting_oracle, shooting_oracle_1d


def test_sech_soliton():
    res = shooting_oracle(1.0, 4.0, 1e-4)
    assert res.level == pytest.approx(4 / 3, abs=1e-3)
    assert res.height == pytest.approx(math.sqrt(2), abs=1e-4)
    assert shooting_oracle_1d(1.0, 4.0, 1e-4) == res.level


def test_sech_squared_soliton():
    # p = 3: w = (3/2) sech^2(y/2), I(w) = 6/5
    res = shooting_oracle(1.0, 3.0, 1e-4)
    assert res.height == pytest.approx(1.5, abs=1e-4)
    assert res.level == pytest.approx(6 / 5, abs=1e-3)


def test_scaling_identity_against_direct_shot():
    c1 = shooting_oracle(1.0, 4.0, 1e-4).level
    c4 = shooting_oracle(4.0, 4.0, 1e-4).level
    assert scaled_level(c1, 4.0, 4.0) == pytest.approx(8 * c1)
    assert c4 == pytest.approx(scaled_level(c1, 4.0, 4.0), rel=1e-6)
    assert c4 == pytest.approx(32 / 3, abs=1e-3)


def test_radial_2d_reference():
    res = shooting_oracle(1.0, 4.0, 1e-4, dim=2)
    # ground state of -Δw + w = w^3 in the plane: w(0) ≈ 2.2062, I = π·1.8623.. ≈ 5.8505
    assert res.height == pytest.approx(2.2062, abs=1e-3)
    assert res.level == pytest.approx(5.8505, abs=2e-3)
    # in 2D the level scales with m^(2/(p-2)) only
    c2 = shooting_oracle(2.0, 4.0, 1e-4, dim=2).level
    assert c2 == pytest.approx(scaled_level(res.level, 2.0, 4.0, dim=2), rel=1e-5)


def test_deterministic():
    assert shooting_oracle(1.0, 4.0, 1e-3) == shooting_oracle(1.0, 4.0, 1e-3)


@pytest.mark.parametrize("args", [(0.0, 4.0), (-1.0, 4.0), (1.0, 2.0), (1.0, 1.5)])
def test_preconditions(args):
    with pytest.raises(ValueError):
        shooting_oracle(*args)


def test_bad_dim_and_step():
    with pytest.raises(ValueError):
        shooting_oracle(1.0, 4.0, dim=3)
    with pytest.raises(ValueError):
        shooting_oracle(1.0, 4.0, integrator_step=0.0)


@settings(max_examples=12, deadline=None)
@given(st.floats(0.5, 3.0), st.floats(2.5, 6.0))
def test_scaling_property(m, p):
    base = shooting_oracle(1.0, p, 1e-3).level
    direct = shooting_oracle(m, p, 1e-3 / math.sqrt(m)).level
    assert direct == pytest.approx(scaled_level(base, m, p), rel=1e-4)
