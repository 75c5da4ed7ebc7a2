import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from latbump import bumps
from latbump.bump_analysis import check_condition_a
from latbump.grid import GridBox, SampledField, sample
from latbump.lattice import LatticeMatrix, random_unit_sequence
from latbump.operator import assemble_sigma, default_x_grid, empirical_operator_lower
from latbump.trilinear import bnorm_ascent, trilinear_value
from latbump.witness import (average_matrix, build_h, build_witness_inputs, certify,
                             localized_family, lower_bound_certificate, mask_matrix, pairing,
                             witness_pair)
from strategies import small_matrices

E0 = {0: 1.0}


def random_case(rng, radius=3):
    k = rng.integers(1, 6)
    mu = rng.integers(-radius, radius + 1, size=k)
    nu = rng.integers(-radius, radius + 1, size=k)
    ent = {(int(a), int(b)): complex(rng.normal(), rng.normal()) for a, b in zip(mu, nu)}
    A = LatticeMatrix.from_entries(ent)
    F = random_unit_sequence(rng, range(-radius, radius + 1), 1)
    G = random_unit_sequence(rng, range(-radius, radius + 1), 1)
    H = random_unit_sequence(rng, range(-2 * radius, 2 * radius + 1), 1)
    return A, F, G, H


def test_kit_invariants(kit):
    assert kit.theta.lo == (-0.25,) and kit.theta.hi == (0.25,)
    g = GridBox((-0.5,), (0.5,), 64)
    x = g.axes()[0]
    phi = kit.phi(x)
    assert np.all(phi[np.abs(x) <= 0.25] == 1)
    assert np.all(kit.phi(np.array([-0.75, 0.5, 0.6, 1.0])) == 0)
    assert kit.c0 > 1e-6
    assert kit.kappa == pytest.approx(1 / (kit.theta_l2 ** 2 * kit.h_l2_sup))


def test_inputs_from_single_translate(kit):
    f, g = build_witness_inputs(kit, E0, E0)
    assert f.norm == pytest.approx(kit.theta_l2, abs=1e-12)
    xi = f.spectrum.grid.axes()[0]
    np.testing.assert_array_equal(f.spectrum.values, kit.theta(xi))


def test_inputs_disjoint_translates(kit):
    f, _ = build_witness_inputs(kit, {0: 0.6, 5: 0.8}, E0)
    assert f.norm ** 2 == pytest.approx(kit.theta_l2 ** 2, abs=1e-10)
    xi = f.spectrum.grid.axes()[0]
    assert not np.any(kit.theta(xi) * kit.theta(xi - 5))


def test_h_for_e0_is_positive(kit):
    h = build_h(kit, E0)
    inv = kit.inverse_theta()
    np.testing.assert_allclose(h.values, 1 / inv.values ** 2)
    assert np.abs(h.values.imag).max() < 1e-9 * np.abs(h.values).max()
    assert h.values.real.min() > 0


def test_h_norm_bounds(kit, rng):
    for _ in range(20):
        H = random_unit_sequence(rng, range(-4, 5), 1)
        nh = build_h(kit, H).l2()
        assert kit.sup_inv ** -2 * (1 - 1e-9) <= nh <= kit.c0 ** -2 * (1 + 1e-9)


def test_h_linear_in_H(kit):
    H1, H2 = {0: 1.0}, {3: 1.0}
    c = 2 ** -0.5
    both = build_h(kit, {0: c, 3: c}).values
    np.testing.assert_allclose(both, c * build_h(kit, H1).values + c * build_h(kit, H2).values,
                               atol=1e-12)


def test_pairing_single_entry(kit):
    A = LatticeMatrix.from_entries({(0, 0): 1.0})
    # quadrature error is 6e-6 at m=64 and falls below 1e-6 from m=128 on
    assert pairing(A, kit, E0, E0, E0, m=128) == pytest.approx(1.0, abs=1e-6)
    assert pairing(A, kit, E0, E0, E0, m=64) == pytest.approx(1.0, abs=1e-5)


def test_pairing_zero_matrix(kit):
    assert pairing(LatticeMatrix.empty(), kit, E0, E0, E0) == 0


def test_pairing_random(kit, rng):
    for _ in range(5):
        A, F, G, H = random_case(rng)
        exact = trilinear_value(A, F, G, H)
        assert abs(pairing(A, kit, F, G, H, m=64) - exact) <= 1e-4 * (1 + abs(exact))


def test_pairing_error_shrinks(kit, rng):
    A, F, G, H = random_case(rng)
    exact = trilinear_value(A, F, G, H)
    errs = [abs(pairing(A, kit, F, G, H, m=m) - exact) for m in (32, 64, 128)]
    assert errs[1] * 3 <= errs[0] and errs[2] * 3 <= errs[1]


def test_pairing_translation_equivariant(kit, rng):
    A, F, G, H = random_case(rng, 2)
    s, t = 3, -2
    Ft = {(k[0] + s,): v for k, v in F.items()}
    Gt = {(k[0] + t,): v for k, v in G.items()}
    Ht = {(k[0] + s + t,): v for k, v in H.items()}
    p0 = pairing(A, kit, F, G, H)
    p1 = pairing(A.translated(s, t), kit, Ft, Gt, Ht)
    assert p1 == pytest.approx(p0, abs=1e-9)


def test_masked_pairing_hand_case(kit):
    A = LatticeMatrix.from_dense(np.ones((2, 2)))
    B = mask_matrix(A, {0}, None)
    F = {0: 0.6, 1: 0.8}
    G = {0: 2 ** -0.5, 1: 2 ** -0.5}
    H = {0: 0.6, 1: 0.8}
    # the mask on mu is absorbed into F: (alpha F) = (0.6, 0), unnormalised
    expect = trilinear_value(A, {0: 0.6}, G, H)
    assert pairing(B, kit, F, G, H) == pytest.approx(expect, abs=1e-5)


def test_certificate_single_entry(kit):
    A = LatticeMatrix.from_entries({(0, 0): 1.0})
    c = certify(A, kit, E0, E0, E0)
    assert c.certificate >= abs(c.pairing) / (kit.theta_l2 ** 2 * c.h_l2) - 1e-12
    assert abs(c.pairing - 1) < 1e-5


def test_certificate_scales(kit):
    A = LatticeMatrix.from_dense(np.array([[1.0, 0.5j], [-0.3, 2.0]]))
    est = bnorm_ascent(A)
    c = 1.7 - 0.4j
    base = lower_bound_certificate(A, kit, est)
    scaled = lower_bound_certificate(A.scaled(c), kit, est)
    assert scaled == pytest.approx(abs(c) * base, abs=1e-10)


def test_certificate_below_empirical(kit, rng):
    for _ in range(3):
        A, *_ = random_case(rng, 2)
        est = bnorm_ascent(A)
        sigma = assemble_sigma(A, kit.Phi, 32)
        xg = default_x_grid(sigma)
        cert = lower_bound_certificate(A, kit, est, m=32, x_m=xg.m)
        emp = empirical_operator_lower(sigma, "inf", 2, x_grid=xg,
                                       extra_pairs=[witness_pair(A, kit, est, sigma)])
        assert cert <= emp.value + 1e-10
        assert cert >= kit.kappa * est.lower - 1e-3


def test_mask_examples():
    A = LatticeMatrix.from_dense(np.arange(1, 10).reshape(3, 3), -1, -1)
    assert mask_matrix(A, None, None) == A
    assert mask_matrix(A, {(k,): 1 for k in (-1, 0, 1)}, lambda i: 1) == A
    row = mask_matrix(A, {0: 1}, None)
    assert set(row.mu[:, 0]) == {0} and len(row) == 3


@settings(max_examples=50)
@given(small_matrices(), st.sets(st.integers(-3, 3)), st.sets(st.integers(-3, 3)))
def test_mask_never_increases_bnorm(A, a, b):
    assert bnorm_ascent(mask_matrix(A, a, b)).lower <= bnorm_ascent(A).lower + 1e-8


@pytest.fixture(scope="module")
def dual_window():
    Phi = bumps.std_bump(2)
    rep = check_condition_a(Phi, ((-1.0, -1.0), (1.0, 1.0)), m=64)
    assert rep.verdict == "holds"
    return Phi, rep.theta_bump


def test_average_recovers_matrix(dual_window, rng):
    Phi, Theta = dual_window
    A = LatticeMatrix.from_dense(rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))

    def err(m):
        B = average_matrix(localized_family(A, Phi, Theta, m), m)
        keys = set(B.entries) | set(A.entries)
        return max(abs(B.entries.get(k, 0) - A.entries.get(k, 0)) for k in keys)
    # exact on the grid Theta was solved on; the 2m oracle sees the continuum R
    assert err(64) <= 1e-12
    assert err(128) <= 1e-5


def test_average_of_zero_family():
    g = GridBox((-0.5, -0.5), (0.5, 0.5), 8)
    fam = {((0,), (0,)): SampledField(g, np.zeros(g.shape)), ((1,), (0,)): SampledField(g.shifted([1, 0]), np.zeros(g.shape))}
    assert len(average_matrix(fam, 8)) == 0


def test_average_of_translated_profile():
    prof = bumps.std_bump(2)
    g = GridBox((-1.0, -1.0), (1.0, 1.0), 16)
    ref = sample(prof, g)
    c = 0.5 + 2j
    fam = {((mu,), (nu,)): SampledField(g.shifted([mu, nu]), c * ref.values)
           for mu in range(-1, 2) for nu in range(0, 2)}
    B = average_matrix(fam, 16)
    from latbump.grid import quad
    total = quad(ref)
    assert np.allclose(B.a, c * total, atol=1e-14) and len(B) == 6


def test_average_support_check():
    from latbump.errors import GridError
    g = GridBox((-3.0, -0.5), (3.0, 0.5), 4)
    vals = np.zeros(g.shape)
    vals[0, 0] = 1
    with pytest.raises(GridError):
        average_matrix({((0,), (0,)): SampledField(g, vals)}, 4, K=4.0)
