import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from latbump import bumps
from latbump.errors import GridError
from latbump.grid import (GridBox, SampledField, inverse_fourier, load_field, phased_sum,
                          quad, sample, save_field)
from latbump.witness import witness_theta


def test_gridbox_alignment():
    with pytest.raises(GridError):
        GridBox((0.3,), (1.0,), 8)
    with pytest.raises(GridError):
        GridBox((0.0,), (1.0,), 7)
    g = GridBox((-0.5,), (1.5,), 4)
    assert g.shape == (9,)
    assert np.allclose(g.axes()[0], np.arange(-2, 7) / 4)


def test_std_bump_samples():
    g = GridBox((-1.0,), (1.0,), 8)
    v = sample(bumps.std_bump(), g).values.real
    assert v[0] == 0 and v[-1] == 0
    assert v[8] == pytest.approx(np.exp(-1), abs=1e-15)


def test_disjoint_box_gives_zero():
    assert not np.any(sample(bumps.std_bump(), GridBox((2.0,), (4.0,), 8)).values)


def test_tensor_sample_is_outer_product():
    g2 = GridBox((-1.0, -1.0), (1.0, 1.0), 16)
    b = bumps.std_bump(1)
    two = sample(bumps.tensor([b, b]), g2).values
    one = sample(b, GridBox((-1.0,), (1.0,), 16)).values
    np.testing.assert_allclose(two, np.outer(one, one), atol=1e-15)


def test_quad_basics():
    assert quad(SampledField(GridBox((0.0,), (1.0,), 6), np.ones(7))) == pytest.approx(1.0)
    g = GridBox((-1.0,), (1.0,), 10)
    assert abs(quad(SampledField(g, g.axes()[0]))) < 1e-15


def test_quad_std_bump_refinement():
    b = bumps.std_bump()
    ref = quad(sample(b, GridBox((-1.0,), (1.0,), 4096))).real
    assert abs(quad(sample(b, GridBox((-1.0,), (1.0,), 256))).real - ref) <= 1e-8
    oracle = integrate.quad(lambda t: np.exp(-1 / (1 - t * t)), -1, 1, epsabs=1e-14)[0]
    assert abs(ref - oracle) < 1e-12


def test_quad_error_decreases_with_m():
    b = bumps.std_bump()
    ref = quad(sample(b, GridBox((-1.0,), (1.0,), 4096))).real
    errs = [abs(quad(sample(b, GridBox((-1.0,), (1.0,), m))).real - ref) for m in (32, 64, 128, 256)]
    for e0, e1 in zip(errs, errs[1:]):
        assert e1 <= e0 / 3.5 or e1 < 1e-15


def test_phased_sum_matches_direct(rng):
    v = rng.normal(size=(3, 37)) + 1j * rng.normal(size=(3, 37))
    out = phased_sum(v, -1.25, 8, -2.5, 4, 21, axis=1)
    j = np.arange(37)
    k = np.arange(21)
    ker = np.exp(2j * np.pi * np.outer(-2.5 + k / 4, -1.25 + j / 8))
    np.testing.assert_allclose(out, v @ ker.T, atol=1e-11)


def test_inverse_fourier_real_for_even_bump():
    out = inverse_fourier(bumps.std_bump(), GridBox((-2.5,), (2.5,), 8)).values
    assert np.abs(out.imag).max() < 1e-12


def test_inverse_fourier_conjugate_symmetric():
    b = bumps.std_bump_scaled([0.2], 0.5)
    out = inverse_fourier(b, GridBox((-3.0,), (3.0,), 8)).values
    np.testing.assert_allclose(out[::-1], np.conj(out), atol=1e-15)


def test_witness_theta_transform_against_direct_quadrature():
    theta = witness_theta()
    Q = GridBox.cube(1, 64)
    out = inverse_fourier(theta, Q).values
    x = Q.axes()[0]
    direct = [integrate.quad(lambda s: theta(s) * np.cos(2 * np.pi * xx * s), -0.25, 0.25,
                             epsabs=1e-14)[0] for xx in x[::8]]
    np.testing.assert_allclose(out[::8].real, direct, atol=1e-10)
    assert np.abs(out).min() > 0.1


def test_shift_modulates():
    b = bumps.std_bump()
    s = 0.25
    g = GridBox((-2.0,), (2.0,), 8)
    plain = inverse_fourier(b, g).values
    shifted = inverse_fourier(b.shifted([s]), g).values
    x = g.axes()[0]
    assert np.abs(shifted - np.exp(2j * np.pi * x * s) * plain).max() <= 1e-10


@given(st.integers(-4, 4), st.sampled_from([2, 4, 8]))
def test_field_json_roundtrip(lo, m):
    g = GridBox((lo - 0.5,), (lo + 1.5,), m)
    f = SampledField(g, np.arange(g.size) * (1 + 0.5j))
    assert np.array_equal(SampledField.from_json(f.to_json()).values, f.values)


@pytest.mark.parametrize("raw", [False, True])
def test_field_file_roundtrip(tmp_path, rng, raw):
    g = GridBox((-0.5, 0.0), (0.5, 1.0), 4)
    f = SampledField(g, rng.normal(size=g.shape) + 1j * rng.normal(size=g.shape))
    save_field(f, tmp_path / "f.json", raw=raw)
    back = load_field(tmp_path / "f.json")
    assert back.grid == g and np.array_equal(back.values, f.values)


def test_embed_strict():
    f = SampledField(GridBox((0.0,), (2.0,), 2), [0, 1, 1, 1, 0])
    out = f.embed(GridBox((0.0,), (1.5,), 2), strict=True)
    assert out.tolist() == [0, 1, 1, 1]
    with pytest.raises(GridError):
        f.embed(GridBox((0.0,), (1.0,), 2), strict=True)


def test_pure():
    b = bumps.std_bump()
    g = GridBox((-1.5,), (1.5,), 16)
    assert np.array_equal(inverse_fourier(b, g).values, inverse_fourier(b, g).values)
