import numpy as np
import pytest
from hypothesis import given, strategies as st

from latbump import bumps
from latbump.grid import GridBox, SampledField, sample
from latbump.lattice import LatticeMatrix
from latbump.operator import (BandLimitedInput, MultiplierField, amalgam_norm, apply_T,
                              assemble_sigma, band_limited, captured_fraction, default_x_grid,
                              empirical_bounds, empirical_operator_lower, lq_norm, parse_q,
                              random_band_limited)
from latbump.trilinear import bnorm_ascent
from latbump.witness import build_h, certify

STD2 = bumps.tensor([bumps.std_bump(), bumps.std_bump()])
SMALL2 = bumps.tensor([bumps.std_bump_scaled([0.0], 0.4)] * 2)
PLATEAU2 = bumps.plateau([[-0.5, 0.5]] * 2, [[-1.0, 1.0]] * 2)


def direct_inverse(spec: SampledField, x):
    xi = spec.grid.axes()[0]
    w = spec.grid.weights()[0]
    return np.exp(2j * np.pi * np.outer(x, xi)) @ (w * spec.values)


def test_single_entry_sigma_is_phi():
    s = assemble_sigma(LatticeMatrix.from_entries({(0, 0): 1.0}), STD2, 16)
    np.testing.assert_array_equal(s.samples, STD2(*s.grid.mesh()))


def test_disjoint_translates():
    A = LatticeMatrix.from_entries({(0, 0): 1.0, (3, 0): 1.0})
    s = assemble_sigma(A, SMALL2, 16)
    assert np.abs(s.samples).max() == pytest.approx(np.abs(SMALL2(*s.grid.mesh())).max())
    assert np.abs(s.samples).max() <= s.linf_bound()


def test_overlapping_plateau_against_pointwise_sum(rng):
    A = LatticeMatrix.from_dense(np.ones((2, 2)))
    s = assemble_sigma(A, PLATEAU2, 16)
    mesh = s.grid.mesh()
    for _ in range(10):
        i, j = rng.integers(0, s.grid.shape[0]), rng.integers(0, s.grid.shape[1])
        xi, eta = mesh[0][i, j], mesh[1][i, j]
        oracle = sum(PLATEAU2(xi - a, eta - b) for a in (0, 1) for b in (0, 1))
        assert s.samples[i, j] == pytest.approx(oracle, abs=1e-14)
    # centre of the 2x2 block is covered by all four plateaus at full height
    c = np.argmin(np.abs(mesh[0][:, 0] - 0.5)), np.argmin(np.abs(mesh[1][0] - 0.5))
    assert s.samples[c] == pytest.approx(4.0)
    assert np.abs(s.samples).max() <= s.linf_bound()


@given(st.dictionaries(st.tuples(st.integers(-2, 2), st.integers(-2, 2)),
                       st.floats(-2, 2).filter(lambda v: v != 0), min_size=1, max_size=5))
def test_sigma_vanishes_outside_minkowski_sum(entries):
    A = LatticeMatrix.from_entries(entries)
    s = assemble_sigma(A, STD2, 8)
    mlo, mhi, nlo, nhi = A.index_box()
    X, Y = s.grid.mesh()
    outside = (X < mlo[0] - 1) | (X > mhi[0] + 1) | (Y < nlo[0] - 1) | (Y > nhi[0] + 1)
    assert not np.any(s.samples[outside])
    assert np.abs(s.samples).max() <= s.linf_bound() + 1e-12


def test_declared_norm_checked():
    spec = sample(bumps.std_bump(), GridBox((-1.0,), (1.0,), 16))
    with pytest.raises(ValueError):
        BandLimitedInput(spec, 2 * spec.l2())


def test_identity_multiplier_gives_product(rng):
    Phi = bumps.plateau([[-2.0, 2.0]] * 2, [[-2.5, 2.5]] * 2)
    s = assemble_sigma(LatticeMatrix.from_entries({(0, 0): 1.0}), Phi, 16)
    f = random_band_limited(rng, GridBox((-1.5,), (1.5,), 16))
    g = random_band_limited(rng, GridBox((-1.0,), (1.5,), 16))
    xg = GridBox((-3.5,), (3.5,), 8)
    T = apply_T(s, f, g, xg).values
    x = xg.axes()[0]
    expect = direct_inverse(f.spectrum, x) * direct_inverse(g.spectrum, x)
    assert np.abs(T - expect).max() <= 1e-8


def test_separable_multiplier_factors(rng):
    u = bumps.std_bump_scaled([0.0], 1.0)
    v = bumps.std_bump_scaled([0.5], 1.5)
    s = assemble_sigma(LatticeMatrix.from_entries({(0, 0): 1.0}), bumps.tensor([u, v]), 16)
    f = random_band_limited(rng, s.xi_grid)
    g = random_band_limited(rng, s.eta_grid)
    xg = GridBox((-2.5,), (2.5,), 8)
    x = xg.axes()[0]
    uf = SampledField(f.spectrum.grid, u(f.spectrum.grid.axes()[0]) * f.spectrum.values)
    vg = SampledField(g.spectrum.grid, v(g.spectrum.grid.axes()[0]) * g.spectrum.values)
    expect = direct_inverse(uf, x) * direct_inverse(vg, x)
    assert np.abs(apply_T(s, f, g, xg).values - expect).max() <= 1e-8


def random_instance(rng, m=32):
    A = LatticeMatrix.from_dense(rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3)), -1, -1)
    s = assemble_sigma(A, STD2, m)
    return s, random_band_limited(rng, s.xi_grid), random_band_limited(rng, s.eta_grid)


def test_fast_matches_direct(rng):
    for _ in range(3):
        s, f, g = random_instance(rng)
        assert s.xi_grid.shape[0] >= 128
        xg = GridBox((-4.0,), (4.0,), 32)
        assert xg.shape[0] >= 256
        fast = apply_T(s, f, g, xg).values
        slow = apply_T(s, f, g, xg, method="direct").values
        assert np.abs(fast - slow).max() / np.abs(slow).max() <= 1e-8


def test_bilinearity(rng):
    s, f1, g = random_instance(rng, 16)
    f2 = random_band_limited(rng, s.xi_grid)
    a, b = 0.3 - 1.2j, 2.0 + 0.5j
    comb = band_limited(f1.spectrum * a + f2.spectrum * b)
    xg = default_x_grid(s, 4)
    lhs = apply_T(s, comb, g, xg).values
    rhs = a * apply_T(s, f1, g, xg).values + b * apply_T(s, f2, g, xg).values
    assert np.abs(lhs - rhs).max() <= 1e-10


@pytest.mark.parametrize("shift", [(0.5, 0.0), (0.5, -1.5), (-1.0, 2.5)])
def test_modulation_invariance(rng, shift):
    s, f, g = random_instance(rng, 16)
    x0, y0 = shift
    moved = MultiplierField(s.A, s.Phi, s.grid.shifted([-x0, -y0]), s.samples)
    fm = band_limited(SampledField(f.spectrum.grid.shifted([-x0]), f.spectrum.values))
    gm = band_limited(SampledField(g.spectrum.grid.shifted([-y0]), g.spectrum.values))
    xg = default_x_grid(s, 6)
    T = apply_T(s, f, g, xg)
    Tm = apply_T(moved, fm, gm, xg)
    x = xg.axes()[0]
    np.testing.assert_allclose(Tm.values, np.exp(-2j * np.pi * x * (x0 + y0)) * T.values, atol=1e-10)
    for q in (1, 2, "inf"):
        assert amalgam_norm(Tm, q).value == pytest.approx(amalgam_norm(T, q).value, abs=1e-8)


def test_amalgam_single_and_double_cube():
    one = SampledField(GridBox((-0.5,), (0.5,), 8), np.ones(9))
    for q in (1, 2, 3, "inf"):
        assert amalgam_norm(one, q).value == pytest.approx(1.0)
    two = SampledField(GridBox((-0.5,), (1.5,), 8), np.ones(17))
    assert amalgam_norm(two, 1).value == pytest.approx(2.0)
    assert amalgam_norm(two, 2).value == pytest.approx(np.sqrt(2))
    assert amalgam_norm(two, "inf").value == pytest.approx(1.0)


def test_amalgam_q2_is_l2(rng):
    s, f, g = random_instance(rng, 16)
    T = apply_T(s, f, g, default_x_grid(s, 5))
    assert amalgam_norm(T, 2).value == pytest.approx(T.l2(), abs=1e-10)


def test_amalgam_needs_cube_faces():
    from latbump.errors import GridError
    with pytest.raises(GridError):
        amalgam_norm(SampledField(GridBox((0.0,), (1.0,), 4), np.ones(5)), 2)


@given(st.integers(0, 2**32 - 1))
def test_amalgam_nonincreasing_in_q(seed):
    rng = np.random.default_rng(seed)
    g = GridBox((-2.5,), (3.5,), 4)
    f = SampledField(g, rng.normal(size=g.shape) * rng.exponential(size=g.shape))
    vals = [amalgam_norm(f, q).value for q in (1, "3/2", 2, 4, "inf")]
    assert all(b <= a * (1 + 1e-12) for a, b in zip(vals, vals[1:]))


def test_parse_q():
    assert parse_q("inf") == np.inf and parse_q("3/2") == 1.5 and parse_q(2) == 2.0
    with pytest.raises(ValueError):
        parse_q(0.5)
    assert lq_norm(np.array([3.0, 4.0]), 2) == pytest.approx(5.0)


def test_empirical_zero_sigma():
    s = assemble_sigma(LatticeMatrix.empty(), STD2, 8)
    assert empirical_operator_lower(s, 2, trials=3).value == 0


def test_empirical_monotone_in_trials():
    A = LatticeMatrix.from_dense(np.ones((2, 2)))
    s = assemble_sigma(A, STD2, 16)
    xg = default_x_grid(s, 4)
    v5 = empirical_operator_lower(s, 1, 5, seed=3, x_grid=xg).value
    v10 = empirical_operator_lower(s, 1, 10, seed=3, x_grid=xg).value
    assert v10 >= v5


def test_empirical_dominates_witness_pairing(kit):
    A = LatticeMatrix.from_entries({(0, 0): 1.0})
    est = bnorm_ascent(A)
    from latbump.witness import witness_pair
    s = assemble_sigma(A, kit.Phi, 32)
    xg = default_x_grid(s)
    best = empirical_operator_lower(s, "inf", 4, x_grid=xg, extra_pairs=[witness_pair(A, kit, est, s)])
    cert = certify(A, kit, {0: 1}, {0: 1}, {0: 1}, m=32, x_m=xg.m)
    h = build_h(kit, {0: 1}, xg.m)
    # |int_Q T h| <= ||T||_Q ||h||_Q, and the witness inputs carry norm ||theta||
    assert best.value >= abs(cert.pairing) / (cert.f_norm * cert.g_norm * h.l2()) - 1e-12
    assert best.value >= kit.c0


def test_captured_fraction(rng):
    s, f, g = random_instance(rng, 16)
    assert captured_fraction(s, f, g, default_x_grid(s)) >= 1 - 1e-6


def test_empirical_seeded_reproducible():
    A = LatticeMatrix.from_dense(np.ones((2, 2)))
    s = assemble_sigma(A, STD2, 16)
    a = empirical_bounds(s, [1, 2], 4, seed=9)
    b = empirical_bounds(s, [1, 2], 4, seed=9)
    assert all(a[q].value == b[q].value for q in a)
