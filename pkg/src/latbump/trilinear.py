"""Estimating ``||A||_B``, the norm of the trilinear form

    (F, G, H) -> sum_{mu,nu} a_{mu,nu} F(mu) G(nu) H(mu + nu)

over unit vectors of l^2_0(Z^n).  Lower bounds come from alternating
ascent with explicit witnesses, upper bounds from three Cauchy-Schwarz
certificates; a brute-force random search serves as an oracle for tiny
instances.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .lattice import LatticeMatrix, Sequence, as_sequence, seq_norm

DEFAULT_TOL = 1e-10
DEFAULT_RESTARTS = 32
MAX_ITER = 5000


@dataclass(frozen=True)
class WitnessTriple:
    F: Sequence
    G: Sequence
    H: Sequence
    value: float

    def check(self, A: LatticeMatrix, atol: float = 1e-12) -> None:
        for name, s in (("F", self.F), ("G", self.G), ("H", self.H)):
            if abs(seq_norm(s) - 1.0) > atol:
                raise AssertionError(f"witness {name} is not a unit vector")
        if abs(abs(trilinear_value(A, self.F, self.G, self.H)) - self.value) > atol * max(1, self.value):
            raise AssertionError("witness value does not match the trilinear form")


@dataclass(frozen=True)
class TrilinearEstimate:
    lower: float
    witness: WitnessTriple
    upper: float
    restarts_used: int
    converged: bool
    history: tuple[float, ...] = field(default=(), repr=False)

    def to_json(self) -> dict:
        from .lattice import sequence_to_json
        w = self.witness
        return {"lower": self.lower, "upper": self.upper, "restarts_used": self.restarts_used,
                "converged": self.converged,
                "witness": {"F": sequence_to_json(w.F), "G": sequence_to_json(w.G),
                            "H": sequence_to_json(w.H), "value": w.value}}


def _enumerate(idx: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if not len(idx):
        return idx, np.zeros(0, dtype=int)
    keys, inv = np.unique(idx, axis=0, return_inverse=True)
    return keys, np.asarray(inv).ravel()


class TrilinearForm:
    """Compressed sparse form: rows (mu), columns (nu) and sums (mu + nu) are
    enumerated once and each entry carries its three integer positions."""

    def __init__(self, A: LatticeMatrix):
        self.A = A
        self.rows, self.i = _enumerate(A.mu)
        self.cols, self.j = _enumerate(A.nu)
        self.sums, self.k = _enumerate(A.mu + A.nu)
        self.a = A.a

    @property
    def sizes(self) -> tuple[int, int, int]:
        return len(self.rows), len(self.cols), len(self.sums)

    def value(self, F, G, H) -> complex:
        return complex(np.sum(self.a * F[self.i] * G[self.j] * H[self.k]))

    def values_batch(self, F, G, H) -> np.ndarray:
        """Rows of F, G, H are independent samples."""
        return (F[:, self.i] * G[:, self.j] * H[:, self.k]) @ self.a

    @staticmethod
    def _scatter(w, idx, size) -> np.ndarray:
        return (np.bincount(idx, weights=w.real, minlength=size)
                + 1j * np.bincount(idx, weights=w.imag, minlength=size))

    def coef_F(self, G, H) -> np.ndarray:
        return self._scatter(self.a * G[self.j] * H[self.k], self.i, len(self.rows))

    def coef_G(self, F, H) -> np.ndarray:
        return self._scatter(self.a * F[self.i] * H[self.k], self.j, len(self.cols))

    def coef_H(self, F, G) -> np.ndarray:
        return self._scatter(self.a * F[self.i] * G[self.j], self.k, len(self.sums))

    def to_sequences(self, F, G, H) -> tuple[Sequence, Sequence, Sequence]:
        def seq(keys, v):
            return {tuple(int(x) for x in key): complex(c) for key, c in zip(keys, v)}
        return seq(self.rows, F), seq(self.cols, G), seq(self.sums, H)

    def ascend(self, F, G, H, tol: float = DEFAULT_TOL, max_iter: int = MAX_ITER):
        """Alternating maximisation from (F, G, H).

        With two factors fixed the form is linear in the third, so the best
        unit vector is the normalised conjugate of the induced coefficients.
        Returns ``(F, G, H, trace, converged)`` where ``trace`` holds the
        objective after every single-factor update.
        """
        trace = [abs(self.value(F, G, H))]
        prev = trace[0]
        for _ in range(max_iter):
            c = self.coef_F(G, H)
            nc = np.linalg.norm(c)
            if nc == 0:
                return F, G, H, trace, True
            F = np.conj(c) / nc
            trace.append(nc)
            c = self.coef_G(F, H)
            nc = np.linalg.norm(c)
            if nc == 0:
                return F, G, H, trace, True
            G = np.conj(c) / nc
            trace.append(nc)
            c = self.coef_H(F, G)
            nc = np.linalg.norm(c)
            if nc == 0:
                return F, G, H, trace, True
            H = np.conj(c) / nc
            trace.append(nc)
            if nc - prev <= tol * nc:
                return F, G, H, trace, True
            prev = nc
        return F, G, H, trace, False


def _aligned(seq: Sequence, keys: np.ndarray) -> np.ndarray:
    return np.array([seq.get(tuple(int(x) for x in k), 0.0) for k in keys], dtype=complex)


def trilinear_value(A: LatticeMatrix, F, G, H) -> complex:
    """``sum a_{mu,nu} F(mu) G(nu) H(mu+nu)`` as a finite sum."""
    F, G, H = (as_sequence(s, A.n) for s in (F, G, H))
    total = 0j
    for mu, nu, a in zip(A.mu, A.nu, A.a):
        m = tuple(int(x) for x in mu)
        v = tuple(int(x) for x in nu)
        f = F.get(m)
        if f is None:
            continue
        g = G.get(v)
        if g is None:
            continue
        h = H.get(tuple(x + y for x, y in zip(m, v)))
        if h is None:
            continue
        total += a * f * g * h
    return total


def bnorm_upper(A: LatticeMatrix) -> float:
    """min of the l^2 norms of the row, column and anti-diagonal sup profiles."""
    if not len(A):
        return 0.0
    form = TrilinearForm(A)
    mag = np.abs(A.a)
    bounds = []
    for idx, size in ((form.i, len(form.rows)), (form.j, len(form.cols)), (form.k, len(form.sums))):
        prof = np.zeros(size)
        np.maximum.at(prof, idx, mag)
        top = prof.max()
        # scaled so tiny entries don't underflow when squared
        bounds.append(float(top * np.linalg.norm(prof / top)) if top > 0 else 0.0)
    return min(bounds)


def _empty_estimate() -> TrilinearEstimate:
    return TrilinearEstimate(0.0, WitnessTriple({}, {}, {}, 0.0), 0.0, 0, True)


def _random_unit(rng, size) -> np.ndarray:
    v = rng.normal(size=size) + 1j * rng.normal(size=size)
    return v / np.linalg.norm(v)


def bnorm_ascent(A: LatticeMatrix, restarts: int = DEFAULT_RESTARTS, seed: int = 0,
                 tol: float = DEFAULT_TOL, max_iter: int = MAX_ITER) -> TrilinearEstimate:
    """Seeded multi-restart alternating ascent.

    Restart ``r`` (r = 0..restarts-1) starts from complex Gaussian vectors
    drawn from ``default_rng([seed, r])``; one further restart starts from
    the constant nonnegative vectors (for nonnegative ``A`` it stays
    nonnegative throughout).  The best value wins, ties going to the lower
    restart index.
    """
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    if tol <= 0:
        raise ValueError("tol must be positive")
    if not len(A):
        return _empty_estimate()
    form = TrilinearForm(A)
    P, Qn, S = form.sizes
    best = None
    for r in range(restarts + 1):
        if r < restarts:
            rng = np.random.default_rng([seed, r])
            F0, G0, H0 = _random_unit(rng, P), _random_unit(rng, Qn), _random_unit(rng, S)
        else:
            F0, G0, H0 = (np.full(s, 1 / np.sqrt(s), dtype=complex) for s in (P, Qn, S))
        F, G, H, trace, conv = form.ascend(F0, G0, H0, tol, max_iter)
        val = abs(form.value(F, G, H))
        if best is None or val > best[0]:
            best = (val, r, F, G, H, trace, conv)
    val, _, F, G, H, trace, conv = best
    Fs, Gs, Hs = form.to_sequences(F, G, H)
    return TrilinearEstimate(float(val), WitnessTriple(Fs, Gs, Hs, float(val)),
                             bnorm_upper(A), restarts + 1, bool(conv), tuple(trace))


ORACLE_MAX_SUPPORT = 12


def bnorm_oracle(A: LatticeMatrix, budget: int = 10**6, seed: int = 0,
                 refine: int = 8, chunk: int = 50_000) -> float:
    """Dense random search over products of unit spheres, then local ascent
    from the ``refine`` best samples.  Tiny instances only."""
    if not len(A):
        return 0.0
    form = TrilinearForm(A)
    P, Qn, S = form.sizes
    if P + Qn + S > ORACLE_MAX_SUPPORT:
        raise ValueError(f"oracle instance too large: support sizes {P}+{Qn}+{S} > {ORACLE_MAX_SUPPORT}")
    rng = np.random.default_rng(seed)
    top_vals = np.zeros(0)
    top_pts: list[tuple] = []
    done = 0
    while done < budget:
        b = min(chunk, budget - done)
        half = b // 2
        batch = []
        for size in (P, Qn, S):
            v = rng.normal(size=(b, size)) + 0j
            v[half:] += 1j * rng.normal(size=(b - half, size))
            v /= np.linalg.norm(v, axis=1, keepdims=True)
            batch.append(v)
        vals = np.abs(form.values_batch(*batch))
        pick = np.argsort(vals)[-refine:]
        top_vals = np.concatenate([top_vals, vals[pick]])
        top_pts += [tuple(x[p] for x in batch) for p in pick]
        keep = np.argsort(top_vals)[-refine:]
        top_vals = top_vals[keep]
        top_pts = [top_pts[k] for k in keep]
        done += b
    best = float(top_vals.max())
    for F, G, H in top_pts:
        F, G, H, _, _ = form.ascend(F, G, H)
        best = max(best, abs(form.value(F, G, H)))
    return best


def w_matrix(decay: float, radius: int, n: int = 1) -> LatticeMatrix:
    """``W(mu,nu) = (1 + |mu| + |nu|)^(-decay)`` truncated to sup-norm <= radius."""
    rng1 = np.arange(-radius, radius + 1)
    pts = np.stack(np.meshgrid(*[rng1] * n, indexing="ij"), -1).reshape(-1, n)
    mu = np.repeat(pts, len(pts), axis=0)
    nu = np.tile(pts, (len(pts), 1))
    w = (1 + np.linalg.norm(mu, axis=1) + np.linalg.norm(nu, axis=1)) ** (-decay)
    return LatticeMatrix(n, mu, nu, w)


def w_truncation_scan(decay: float, radii, n: int = 1, restarts: int = DEFAULT_RESTARTS,
                      seed: int = 0, tol: float = DEFAULT_TOL) -> list[tuple[int, TrilinearEstimate]]:
    if decay <= 0:
        raise ValueError("decay must be positive")
    radii = list(radii)
    if radii != sorted(radii):
        raise ValueError("radii must be ascending")
    return [(R, bnorm_ascent(w_matrix(decay, R, n), restarts, seed, tol)) for R in radii]


def sequences_for(A: LatticeMatrix, F, G, H) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Align sequences with the compressed supports of ``A``'s form."""
    form = TrilinearForm(A)
    F, G, H = (as_sequence(s, A.n) for s in (F, G, H))
    return _aligned(F, form.rows), _aligned(G, form.cols), _aligned(H, form.sums)

