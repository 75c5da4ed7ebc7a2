import numpy as np
import pytest
from hypothesis import given, strategies as st

from latbump import bumps
from latbump.errors import ConfigError


def dsl_bumps():
    return [
        bumps.std_bump(),
        bumps.std_bump(2),
        bumps.std_bump_scaled([0.25], 0.75),
        bumps.tensor([bumps.std_bump(), bumps.std_bump_scaled([0.0], 0.5)]),
        bumps.shift_sum(bumps.std_bump(), [[0], [1]]),
        bumps.plateau([[-0.25, 0.25]], [[-0.5, 0.5]]),
    ]


@pytest.mark.parametrize("b", dsl_bumps(), ids=lambda b: b.dsl["type"])
def test_zero_outside_support(b, rng):
    lo, hi = np.array(b.lo), np.array(b.hi)
    pts = lo + (hi - lo) * rng.uniform(-1, 2, size=(2000, b.d))
    outside = np.any((pts < lo) | (pts > hi), axis=1)
    vals = b.at(pts)
    assert np.all(vals[outside] == 0)
    assert np.all(np.isfinite(vals)) and np.isrealobj(vals)


@pytest.mark.parametrize("b", dsl_bumps(), ids=lambda b: b.dsl["type"])
def test_dsl_roundtrip(b, rng):
    c = bumps.from_json(b.to_json())
    pts = np.array(b.lo) - 0.5 + (np.array(b.hi) - np.array(b.lo) + 1) * rng.uniform(size=(200, b.d))
    np.testing.assert_array_equal(b.at(pts), c.at(pts))


@given(st.floats(-1, 1))
def test_plateau_is_one_inside_and_bounded(t):
    p = bumps.plateau([[-0.25, 0.25]], [[-0.5, 0.5]])
    v = float(p(t))
    if abs(t) <= 0.25:
        assert v == 1.0
    elif abs(t) >= 0.5:
        assert v == 0.0
    else:
        assert 0.0 <= v <= 1.0


def test_plateau_monotone_in_transition():
    t = np.linspace(0.25, 0.5, 501)
    v = bumps.plateau([[-0.25, 0.25]], [[-0.5, 0.5]])(t)
    assert np.all(np.diff(v) <= 0)


def test_bad_dsl():
    with pytest.raises(ConfigError):
        bumps.from_json({"type": "nope"})
    with pytest.raises(ConfigError):
        bumps.from_json({"type": "std_bump_scaled", "center": [0]})


def test_shift_sum_support():
    b = bumps.shift_sum(bumps.std_bump(), [[0], [1]])
    assert b.lo == (-1.0,) and b.hi == (2.0,)
    assert float(b(0.5)) == pytest.approx(2 * np.exp(-1 / 0.75))
