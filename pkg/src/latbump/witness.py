"""The extremal-input construction for the special bump Phi = phi (x) phi,
plus the matrix transforms (masking, averaging) used to pass to general
bumps.

Given unit sequences F, G, H the construction builds

    fhat = sum_mu F(mu) theta(. - mu),   ghat = sum_nu G(nu) theta(. - nu),
    (F^-1 theta)^2 h = sum_rho H(rho) e^{-2 pi i rho x}   on Q,

with supp theta in Q/2 and phi = 1 on Q/2, so that
int_Q T(f,g) h = sum a_{mu,nu} F(mu) G(nu) H(mu+nu).
"""

from __future__ import annotations

import itertools
from collections.abc import Iterable, Mapping
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .bumps import BumpSpec, plateau, std_bump_scaled, tensor
from .errors import GridError, NumericalError
from .grid import GridBox, SampledField, inverse_fourier, outward_box, quad, sample
from .lattice import LatticeMatrix, Sequence, as_index, as_sequence, seq_norm
from .operator import (BandLimitedInput, MultiplierField, apply_T, assemble_sigma,
                       band_limited, default_sigma_box)
from .trilinear import TrilinearEstimate

C0_THRESHOLD = 1e-6
UNIT_TOL = 1e-10


@lru_cache(maxsize=32)
def _inverse_theta_on_q(m: int) -> np.ndarray:
    vals = inverse_fourier(witness_theta(), GridBox.cube(1, m)).values.copy()
    vals.setflags(write=False)
    return vals


def witness_theta() -> BumpSpec:
    """``b(4 xi)`` with b the standard bump: supp = [-1/4, 1/4] = Q/2."""
    return std_bump_scaled([0.0], 0.25)


def witness_phi() -> BumpSpec:
    """1 on Q/2, 0 outside Q."""
    return plateau([[-0.25, 0.25]], [[-0.5, 0.5]])


@dataclass(frozen=True, eq=False)
class WitnessKit:
    theta: BumpSpec
    phi: BumpSpec
    Phi: BumpSpec
    m: int
    c0: float
    sup_inv: float
    theta_l2: float

    @property
    def kappa(self) -> float:
        """``c0^2 / ||theta||^2``: certificate >= kappa * |sum a F G H|."""
        return self.c0 ** 2 / self.theta_l2 ** 2

    @property
    def h_l2_sup(self) -> float:
        """sup of ||h||_{L^2(Q)} over unit H, i.e. c0^-2 by Parseval."""
        return self.c0 ** -2

    def inverse_theta(self, m: int | None = None) -> SampledField:
        m = self.m if m is None else m
        return SampledField(GridBox.cube(1, m), _inverse_theta_on_q(m))

    def constants(self) -> dict:
        return {"theta_l2": self.theta_l2, "c0": self.c0, "sup_inv_theta": self.sup_inv,
                "kappa": self.kappa, "h_l2_sup": self.h_l2_sup, "m": self.m}


def build_kit(m: int = 64) -> WitnessKit:
    theta = witness_theta()
    phi = witness_phi()
    inv = np.abs(_inverse_theta_on_q(m))
    c0 = float(inv.min())
    if c0 <= C0_THRESHOLD:
        raise NumericalError(f"min_Q |F^-1 theta| = {c0:.3e} is below {C0_THRESHOLD}")
    theta_l2 = sample(theta, GridBox.cube(1, m)).l2()
    return WitnessKit(theta, phi, tensor([phi, phi]), m, c0, float(inv.max()), theta_l2)


def _unit(seq, name: str) -> Sequence:
    seq = as_sequence(seq, 1)
    if abs(seq_norm(seq) - 1.0) > UNIT_TOL:
        raise ValueError(f"{name} must be a unit l^2 sequence (norm {seq_norm(seq)})")
    return seq


def _spectrum(kit: WitnessKit, F: Sequence, m: int, box: GridBox | None = None) -> BandLimitedInput:
    keys = [k[0] for k in F]
    if box is None:
        lo, hi = outward_box([min(keys) - 0.5], [max(keys) + 0.5])
        box = GridBox(lo, hi, m)
    xi = box.axes()[0]
    vals = np.zeros(len(xi), complex)
    for (mu,), c in F.items():
        vals += c * kit.theta(xi - mu)
    return band_limited(SampledField(box, vals))


def build_witness_inputs(kit: WitnessKit, F, G, m: int | None = None):
    """``fhat = sum F(mu) theta(. - mu)`` and likewise g (n = 1)."""
    m = kit.m if m is None else m
    F, G = _unit(F, "F"), _unit(G, "G")
    return _spectrum(kit, F, m), _spectrum(kit, G, m)


def build_h(kit: WitnessKit, H, m: int | None = None) -> SampledField:
    """``h = (sum H(rho) e^{-2 pi i rho x}) / (F^-1 theta)^2`` on the Q-grid."""
    m = kit.m if m is None else m
    H = _unit(H, "H")
    if kit.c0 <= C0_THRESHOLD:
        raise NumericalError("c0 below threshold; division unsafe")
    inv = kit.inverse_theta(m)
    x = inv.grid.axes()[0]
    trig = np.zeros(len(x), complex)
    for (rho,), c in H.items():
        trig += c * np.exp(-2j * np.pi * rho * x)
    return SampledField(inv.grid, trig / inv.values ** 2)


def _sigma_for(A: LatticeMatrix, kit: WitnessKit, f: BandLimitedInput, g: BandLimitedInput,
               m: int) -> MultiplierField:
    lo, hi = default_sigma_box(A, kit.Phi)
    lo = (min(lo[0], f.spectrum.grid.lo[0]), min(lo[1], g.spectrum.grid.lo[0]))
    hi = (max(hi[0], f.spectrum.grid.hi[0]), max(hi[1], g.spectrum.grid.hi[0]))
    return assemble_sigma(A, kit.Phi, m, box=(lo, hi))


@dataclass(frozen=True)
class Certificate:
    certificate: float
    pairing: complex
    h_l2: float
    f_norm: float
    g_norm: float
    q_mass: float


def certify(A: LatticeMatrix, kit: WitnessKit, F, G, H, m: int | None = None,
            x_m: int | None = None) -> Certificate:
    """All quantities of the construction on one Q-grid (spacing 1/x_m)."""
    if A.n != 1:
        raise GridError("the witness construction is implemented for n = 1")
    m = kit.m if m is None else m
    x_m = m if x_m is None else x_m
    f, g = build_witness_inputs(kit, F, G, m)
    h = build_h(kit, H, x_m)
    sigma = _sigma_for(A, kit, f, g, m)
    T = apply_T(sigma, f, g, h.grid)
    pair = quad(T * h)
    q_mass = T.l2()
    scale = f.norm * g.norm
    cert = q_mass / scale if scale else 0.0
    h_l2 = h.l2()
    if abs(pair) > q_mass * h_l2 * (1 + 1e-9) + 1e-14:
        raise AssertionError("Cauchy-Schwarz violated: |<T, h>| > ||T||_Q ||h||_Q")
    return Certificate(cert, pair, h_l2, f.norm, g.norm, q_mass)


def pairing(A: LatticeMatrix, kit: WitnessKit, F, G, H, m: int | None = None) -> complex:
    """``int_Q T_{sigma_{A,Phi}}(f, g) h dx``; equals sum a F G H up to quadrature."""
    return certify(A, kit, F, G, H, m).pairing


def lower_bound_certificate(A: LatticeMatrix, kit: WitnessKit, est: TrilinearEstimate,
                            m: int | None = None, x_m: int | None = None) -> float:
    """``||T(f,g)||_{L^2(Q)} / (||f|| ||g||)`` for inputs built from the
    estimate's witness: a lower bound for the (L^2, l^inf) multiplier norm."""
    w = est.witness
    if not w.F:
        return 0.0
    return certify(A, kit, w.F, w.G, w.H, m, x_m).certificate


def witness_pair(A: LatticeMatrix, kit: WitnessKit, est: TrilinearEstimate, sigma: MultiplierField):
    """The estimate's witness inputs laid out on sigma's frequency grids."""
    w = est.witness
    f = _spectrum(kit, as_sequence(w.F, 1), sigma.grid.m, sigma.xi_grid)
    g = _spectrum(kit, as_sequence(w.G, 1), sigma.grid.m, sigma.eta_grid)
    return f, g


def _mask(alpha, n: int):
    if alpha is None:
        return lambda idx: 1
    if callable(alpha):
        return alpha
    if isinstance(alpha, Mapping):
        table = {as_index(k, n): int(v) for k, v in alpha.items()}
        if any(v not in (0, 1) for v in table.values()):
            raise ValueError("masks take values in {0, 1}")
        return lambda idx: table.get(idx, 0)
    keep = {as_index(k, n) for k in alpha}
    return lambda idx: int(idx in keep)


def mask_matrix(A: LatticeMatrix, alpha, alpha_prime) -> LatticeMatrix:
    """``a_{mu,nu} alpha_mu alpha'_nu``.

    A mask is a mapping index -> {0,1} (absent = 0), an iterable of kept
    indices, a predicate, or ``None`` for all ones.
    """
    fa, fb = _mask(alpha, A.n), _mask(alpha_prime, A.n)
    keep = np.array([bool(fa(tuple(int(x) for x in mu)) and fb(tuple(int(x) for x in nu)))
                     for mu, nu in zip(A.mu, A.nu)], dtype=bool)
    if not len(A):
        return A
    return LatticeMatrix(A.n, A.mu[keep], A.nu[keep], A.a[keep])


def average_matrix(sigma_family: Mapping, m: int, K: float = 4.0) -> LatticeMatrix:
    """``B_{mu,nu} = iint sigma_{mu,nu}`` by quadrature.

    Each field must vanish outside (mu, nu) + KQ x KQ.
    """
    keys, vals = [], []
    n = None
    for (mu, nu), fld in sigma_family.items():
        if fld.grid.m != m:
            raise GridError("family field sampled with a different m")
        n = fld.grid.d // 2 if n is None else n
        mu, nu = as_index(mu, n), as_index(nu, n)
        centre = np.array(mu + nu, float)
        nz = np.nonzero(fld.values)
        if len(nz[0]):
            for ax, idx in enumerate(nz):
                pts = fld.grid.axes()[ax][idx]
                if np.abs(pts - centre[ax]).max() > K / 2 + 1e-12:
                    raise GridError(f"sigma_{mu},{nu} not supported in (mu,nu) + KQ x KQ")
        keys.append((mu, nu))
        vals.append(quad(fld))
    if not keys:
        return LatticeMatrix.empty()
    return LatticeMatrix(n, [k[0] for k in keys], [k[1] for k in keys], vals)


def sigma_pointwise(A: LatticeMatrix, Phi: BumpSpec, *coords) -> np.ndarray:
    """Direct evaluation of sigma_{A,Phi} at arbitrary points."""
    n = A.n
    coords = np.broadcast_arrays(*[np.asarray(c, float) for c in coords])
    out = np.zeros(coords[0].shape, complex)
    for mu, nu, a in zip(A.mu, A.nu, A.a):
        shift = np.concatenate([mu, nu])
        out += a * Phi(*[c - s for c, s in zip(coords, shift)])
    return out


def localized_family(A: LatticeMatrix, Phi: BumpSpec, Theta: BumpSpec, m: int,
                     indices: Iterable | None = None) -> dict:
    """``sigma_{mu,nu}(xi, eta) = Theta(xi - mu, eta - nu) sigma_{A,Phi}(xi, eta)``.

    By default (mu, nu) ranges over every index pair whose Theta-translate
    meets supp sigma.
    """
    n = A.n
    lo, hi = outward_box(Theta.lo, Theta.hi)
    if indices is None:
        reach = [int(np.ceil(max(abs(l), abs(h)) + max(abs(pl), abs(ph))))
                 for l, h, pl, ph in zip(Theta.lo, Theta.hi, Phi.lo, Phi.hi)]
        mlo, mhi, nlo, nhi = A.index_box()
        box_lo = np.concatenate([mlo, nlo]) - reach
        box_hi = np.concatenate([mhi, nhi]) + reach
        indices = [(t[:n], t[n:]) for t in itertools.product(
            *[range(a, b + 1) for a, b in zip(box_lo, box_hi)])]
    family = {}
    for mu, nu in indices:
        mu, nu = as_index(mu, n), as_index(nu, n)
        shift = np.array(mu + nu, float)
        grid = GridBox(tuple(np.add(lo, shift)), tuple(np.add(hi, shift)), m)
        mesh = grid.mesh()
        vals = Theta(*[c - s for c, s in zip(mesh, shift)]) * sigma_pointwise(A, Phi, *mesh)
        family[(mu, nu)] = SampledField(grid, vals)
    return family
