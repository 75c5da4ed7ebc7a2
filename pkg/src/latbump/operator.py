"""The lattice-bump multiplier sigma_{A,Phi}, its bilinear operator on
band-limited inputs, and (L^2, l^q) amalgam norms."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .bumps import BumpSpec, std_bump_scaled
from .errors import DimensionMismatch, GridError
from .grid import GridBox, SampledField, outward_box, phased_sum, sample, trapezoid_weights
from .lattice import LatticeMatrix


@dataclass(frozen=True, eq=False)
class MultiplierField:
    A: LatticeMatrix
    Phi: BumpSpec
    grid: GridBox
    samples: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.grid.d // 2

    @property
    def xi_grid(self) -> GridBox:
        return GridBox(self.grid.lo[: self.n], self.grid.hi[: self.n], self.grid.m)

    @property
    def eta_grid(self) -> GridBox:
        return GridBox(self.grid.lo[self.n:], self.grid.hi[self.n:], self.grid.m)

    def as_field(self) -> SampledField:
        return SampledField(self.grid, self.samples)

    def linf_bound(self) -> float:
        """(max translate overlap) * sup|Phi| * max|a|."""
        widths = np.subtract(self.Phi.hi, self.Phi.lo)
        overlap = int(np.prod(np.floor(widths) + 1))
        if not len(self.A):
            return 0.0
        lo, hi = outward_box(self.Phi.lo, self.Phi.hi)
        sup_phi = float(np.abs(self.Phi(*GridBox(lo, hi, self.grid.m).mesh())).max())
        return overlap * sup_phi * self.A.max_abs()


def default_sigma_box(A: LatticeMatrix, Phi: BumpSpec):
    n = A.n
    plo, phi_hi = np.array(Phi.lo), np.array(Phi.hi)
    if not len(A):
        return outward_box(plo, phi_hi)
    mlo, mhi, nlo, nhi = A.index_box()
    lo = np.concatenate([mlo + plo[:n], nlo + plo[n:]])
    hi = np.concatenate([mhi + phi_hi[:n], nhi + phi_hi[n:]])
    return outward_box(lo, hi)


def assemble_sigma(A: LatticeMatrix, Phi: BumpSpec, m: int, box=None) -> MultiplierField:
    """Samples of ``sum a_{mu,nu} Phi(xi - mu, eta - nu)`` on a cube-aligned grid.

    The default box is the index box of A plus supp Phi, rounded out to
    half-integers; a larger ``box=(lo, hi)`` may be requested.
    """
    if Phi.d != 2 * A.n:
        raise DimensionMismatch(f"Phi has d={Phi.d}, expected 2n={2 * A.n}")
    lo, hi = default_sigma_box(A, Phi)
    grid = GridBox(lo, hi, m)
    if box is not None:
        big = GridBox(tuple(np.atleast_1d(box[0])), tuple(np.atleast_1d(box[1])), m)
        if not big.contains(grid):
            raise GridError("requested sigma box does not contain supp sigma")
        grid = big
    samples = np.zeros(grid.shape, dtype=complex)
    axes = grid.axes()
    for mu, nu, a in zip(A.mu, A.nu, A.a):
        shift = np.concatenate([mu, nu])
        sl, sub = [], []
        for ax, s, l, h, start in zip(axes, shift, Phi.lo, Phi.hi, grid.start):
            k0 = int(np.ceil((l + s) * m - 1e-9)) - start
            k1 = int(np.floor((h + s) * m + 1e-9)) - start
            k0, k1 = max(k0, 0), min(k1, len(ax) - 1)
            sl.append(slice(k0, k1 + 1))
            sub.append(ax[k0:k1 + 1] - s)
        samples[tuple(sl)] += a * Phi(*np.meshgrid(*sub, indexing="ij"))
    samples.setflags(write=False)
    return MultiplierField(A, Phi, grid, samples)


@dataclass(frozen=True, eq=False)
class BandLimitedInput:
    """A function given by its spectrum; ``norm`` is its L^2 norm."""

    spectrum: SampledField
    norm: float

    def __post_init__(self):
        actual = self.spectrum.l2()
        if abs(actual - self.norm) > 1e-10 * max(1.0, actual):
            raise ValueError(f"declared norm {self.norm} != spectral norm {actual}")


def band_limited(spectrum: SampledField) -> BandLimitedInput:
    return BandLimitedInput(spectrum, spectrum.l2())


def apply_T(sigma: MultiplierField, f: BandLimitedInput, g: BandLimitedInput,
            x_grid: GridBox, method: str = "fft") -> SampledField:
    """``T(f,g)(x) = iint e^{2 pi i x(xi+eta)} sigma(xi,eta) fhat(xi) ghat(eta)`` (n = 1).

    ``method="fft"``: for every xi-node the eta-integral over all x is one
    inverse FFT (batched), then the xi-sum is accumulated in node order with
    the phase e^{2 pi i x xi}.  ``method="direct"`` sums the double
    quadrature for each x separately.
    """
    if sigma.n != 1 or x_grid.d != 1:
        raise DimensionMismatch("apply_T is implemented for n = 1")
    xg, eg = sigma.xi_grid, sigma.eta_grid
    for inp in (f, g):
        if inp.spectrum.grid.m != sigma.grid.m:
            raise GridError("spectrum grid is incommensurate with the sigma grid")
    width = x_grid.hi[0] - x_grid.lo[0]
    if width > sigma.grid.m:
        # spectra sampled at spacing 1/m make T exactly m-periodic in x
        raise GridError(f"x-box width {width} exceeds the alias period {sigma.grid.m}")
    fh = f.spectrum.embed(xg, strict=True)
    gh = g.spectrum.embed(eg, strict=True)
    wf = trapezoid_weights(xg.shape[0], xg.h) * fh
    wg = trapezoid_weights(eg.shape[0], eg.h) * gh
    rows = np.nonzero(wf)[0]
    cols = np.nonzero(wg)[0]
    M = x_grid.shape[0]
    if not len(rows) or not len(cols):
        return SampledField(x_grid, np.zeros(M, complex))
    c0, c1 = cols[0], cols[-1] + 1
    W = wf[rows, None] * sigma.samples[rows, c0:c1] * wg[None, c0:c1]
    xi = xg.axes()[0][rows]
    eta = eg.axes()[0][c0:c1]
    x = x_grid.axes()[0]
    if method == "fft":
        eta0 = (eg.start[0] + c0) / eg.m
        inner = phased_sum(W, eta0, eg.m, x_grid.lo[0], x_grid.m, M, axis=1)
        out = np.zeros(M, complex)
        for i, v in enumerate(xi):
            out += np.exp(2j * np.pi * v * x) * inner[i]
    elif method == "direct":
        s = xi[:, None] + eta[None, :]
        out = np.array([np.sum(W * np.exp(2j * np.pi * xk * s)) for xk in x])
    else:
        raise ValueError(f"unknown method {method!r}")
    return SampledField(x_grid, out)


def parse_q(q) -> float:
    if isinstance(q, str):
        s = q.strip().lower()
        if s in ("inf", "infinity", "oo", "∞"):
            return math.inf
        q = float(Fraction(s))
    q = float(q)
    if not q >= 1:
        raise ValueError(f"q must lie in [1, inf], got {q}")
    return q


def lq_norm(v: np.ndarray, q: float) -> float:
    v = np.abs(np.asarray(v, float)).ravel()
    if not len(v):
        return 0.0
    top = v.max()
    if top == 0:
        return 0.0
    if math.isinf(q):
        return float(top)
    return float(top * np.sum((v / top) ** q) ** (1.0 / q))


@dataclass(frozen=True, eq=False)
class AmalgamNorm:
    q: float
    per_cube: dict[tuple[int, ...], float]
    value: float


def _cube_weights(n_points: int, start: int, m: int) -> np.ndarray:
    cubes = (n_points - 1) // m
    W = np.zeros((cubes, n_points))
    for c in range(cubes):
        W[c, c * m:(c + 1) * m + 1] = trapezoid_weights(m + 1, 1.0 / m)
    return W


def cube_masses(f: SampledField) -> tuple[np.ndarray, list[np.ndarray]]:
    """``int_{nu+Q} |f|^2`` for every unit cube tiling the box, plus cube centres."""
    g = f.grid
    for l, h in zip(g.lo, g.hi):
        if abs((l - 0.5) - round(l - 0.5)) > 1e-12 or abs((h - 0.5) - round(h - 0.5)) > 1e-12:
            raise GridError("amalgam norms need a box whose faces are unit-cube faces")
    mass = np.abs(f.values) ** 2
    centres = []
    for ax in range(g.d - 1, -1, -1):
        W = _cube_weights(g.shape[ax], g.start[ax], g.m)
        mass = np.moveaxis(np.tensordot(mass, W, axes=([ax], [1])), -1, ax)
    for ax in range(g.d):
        centres.append(np.arange(mass.shape[ax]) + int(round(g.lo[ax] + 0.5)))
    return mass, centres


def amalgam_from_masses(mass: np.ndarray, q) -> float:
    return lq_norm(np.sqrt(np.maximum(mass, 0.0)), parse_q(q))


def amalgam_norm(f: SampledField, q) -> AmalgamNorm:
    """``|| (int_{nu+Q} |f|^2)^{1/2} ||_{l^q_nu}`` by per-cube trapezoid rules."""
    qv = parse_q(q)
    mass, centres = cube_masses(f)
    local = np.sqrt(np.maximum(mass, 0.0))
    per_cube = {}
    for idx in np.ndindex(*local.shape):
        per_cube[tuple(int(c[i]) for c, i in zip(centres, idx))] = float(local[idx])
    return AmalgamNorm(qv, per_cube, lq_norm(local, qv))


def default_x_grid(sigma: MultiplierField, half_width: int = 10) -> GridBox:
    """Box [-X-1/2, X+1/2] sampled finely enough for |T(f,g)|^2.

    T(f,g) has spectrum inside the Minkowski sum of the xi and eta ranges,
    so |T|^2 is band-limited to its width; m_x exceeds that width.  X is
    capped so the box stays inside one alias period (width m).
    """
    width = sum(h - l for l, h in zip(sigma.grid.lo, sigma.grid.hi))
    mx = 2 * int(np.ceil(width / 2)) + 2
    X = min(half_width, (sigma.grid.m - 2) // 2) + 0.5
    return GridBox((-X,), (X,), mx)


def random_band_limited(rng: np.random.Generator, box: GridBox, radius: float = 0.5) -> BandLimitedInput:
    """Unit-norm spectrum: random complex combination of bumps of the given
    radius centred on the half-integers that keep them inside ``box``."""
    lo, hi = box.lo[0] + radius, box.hi[0] - radius
    centres = np.arange(np.ceil(2 * lo), np.floor(2 * hi) + 1) / 2
    if not len(centres):
        centres = np.array([(box.lo[0] + box.hi[0]) / 2])
    coef = rng.normal(size=len(centres)) + 1j * rng.normal(size=len(centres))
    xi = box.axes()[0]
    vals = np.zeros(len(xi), complex)
    for c, a in zip(centres, coef):
        vals += a * std_bump_scaled([c], radius)(xi)
    spec = SampledField(box, vals)
    nrm = spec.l2()
    spec = SampledField(box, vals / nrm)
    return band_limited(spec)


@dataclass(frozen=True, eq=False)
class EmpiricalBound:
    q: float
    value: float
    f: BandLimitedInput | None = None
    g: BandLimitedInput | None = None
    trial: int = -1


def empirical_bounds(sigma: MultiplierField, qs, trials: int, seed: int = 0,
                     x_grid: GridBox | None = None, extra_pairs=()) -> dict[float, EmpiricalBound]:
    """Best ``||T(f,g)||_{(L^2,l^q)} / (||f|| ||g||)`` over ``extra_pairs``
    followed by ``trials`` random pairs (``default_rng([seed, t])``).

    Each output is evaluated once for every q.  Ties keep the earlier trial.
    """
    if trials < 0:
        raise ValueError("trials must be >= 0")
    qs = [parse_q(q) for q in qs]
    x_grid = default_x_grid(sigma) if x_grid is None else x_grid
    best = {q: EmpiricalBound(q, 0.0) for q in qs}
    if not len(sigma.A) or not np.any(sigma.samples):
        return best

    def pairs():
        for t, (f, g) in enumerate(extra_pairs):
            yield -1 - t, f, g
        for t in range(trials):
            rng = np.random.default_rng([seed, t])
            yield t, random_band_limited(rng, sigma.xi_grid), random_band_limited(rng, sigma.eta_grid)

    for t, f, g in pairs():
        out = apply_T(sigma, f, g, x_grid)
        mass, _ = cube_masses(out)
        scale = f.norm * g.norm
        for q in qs:
            v = amalgam_from_masses(mass, q) / scale
            if v > best[q].value:
                best[q] = EmpiricalBound(q, v, f, g, t)
    return best


def empirical_operator_lower(sigma: MultiplierField, q, trials: int, seed: int = 0,
                             x_grid: GridBox | None = None, extra_pairs=()) -> EmpiricalBound:
    """Monte-Carlo lower bound for the L^2 x L^2 -> (L^2, l^q) multiplier norm."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    return empirical_bounds(sigma, [q], trials, seed, x_grid, extra_pairs)[parse_q(q)]


def captured_fraction(sigma: MultiplierField, f: BandLimitedInput, g: BandLimitedInput,
                      x_grid: GridBox) -> float:
    """L^2 mass of T(f,g) on ``x_grid`` relative to one full alias period.

    The discrete T is m-periodic, so the period box [-m/2, m/2] carries the
    total mass; a doubled box would count aliased copies.
    """
    half = sigma.grid.m / 2
    full = GridBox((-half,), (half,), x_grid.m)
    small = apply_T(sigma, f, g, x_grid).l2()
    large = apply_T(sigma, f, g, full).l2()
    return (small / large) ** 2 if large else 1.0
