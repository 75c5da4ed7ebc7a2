"""Lattice-indexed coefficient families and finitely supported sequences."""

from __future__ import annotations

import json
from collections.abc import Iterable, Mapping
from pathlib import Path

import numpy as np

from .errors import ConfigError, DimensionMismatch

Index = tuple[int, ...]
Sequence = dict[Index, complex]


def as_index(key, n: int) -> Index:
    if isinstance(key, (int, np.integer)):
        key = (int(key),)
    idx = tuple(int(k) for k in key)
    if len(idx) != n:
        raise DimensionMismatch(f"index {idx} has length {len(idx)}, expected {n}")
    return idx


def as_sequence(seq, n: int) -> Sequence:
    """Coerce a mapping ``index -> value`` (int keys allowed when n == 1)."""
    if isinstance(seq, Mapping):
        items = seq.items()
    else:
        items = seq
    out: Sequence = {}
    for k, v in items:
        out[as_index(k, n)] = complex(v)
    return out


def seq_norm(seq: Mapping[Index, complex]) -> float:
    if not seq:
        return 0.0
    return float(np.linalg.norm(np.fromiter(seq.values(), complex, len(seq))))


def unit_vector(idx, n: int) -> Sequence:
    return {as_index(idx, n): 1.0 + 0j}


def random_unit_sequence(rng: np.random.Generator, support: Iterable, n: int) -> Sequence:
    keys = [as_index(k, n) for k in support]
    v = rng.normal(size=len(keys)) + 1j * rng.normal(size=len(keys))
    v /= np.linalg.norm(v)
    return dict(zip(keys, v))


def sequence_to_json(seq: Mapping[Index, complex]) -> list[dict]:
    return [{"idx": list(k), "re": float(np.real(v)), "im": float(np.imag(v))}
            for k, v in sorted(seq.items())]


def sequence_from_json(obj, n: int) -> Sequence:
    return {as_index(e["idx"], n): complex(e["re"], e.get("im", 0.0)) for e in obj}


class LatticeMatrix:
    """Finitely supported matrix ``(a_{mu,nu})`` on ``Z^n x Z^n``.

    Stored as three aligned arrays ``mu`` (K, n), ``nu`` (K, n) and ``a`` (K,),
    sorted lexicographically on ``(mu, nu)``.  Exact zeros are dropped.
    Instances are immutable.
    """

    __slots__ = ("n", "mu", "nu", "a")

    def __init__(self, n: int, mu, nu, a):
        n = int(n)
        if n < 1:
            raise DimensionMismatch("lattice dimension must be >= 1")
        mu = np.asarray(mu, dtype=np.int64).reshape(-1, n)
        nu = np.asarray(nu, dtype=np.int64).reshape(-1, n)
        a = np.asarray(a, dtype=complex).reshape(-1)
        if not (len(mu) == len(nu) == len(a)):
            raise DimensionMismatch("mu, nu and a must have equal length")
        if not np.all(np.isfinite(a)):
            raise ValueError("matrix entries must be finite")
        keep = a != 0
        mu, nu, a = mu[keep], nu[keep], a[keep]
        if len(a):
            key = np.concatenate([mu, nu], axis=1)
            order = np.lexsort(key.T[::-1])
            mu, nu, a, key = mu[order], nu[order], a[order], key[order]
            if np.any(np.all(key[1:] == key[:-1], axis=1)):
                raise ConfigError("duplicate (mu, nu) entry")
        for arr in (mu, nu, a):
            arr.setflags(write=False)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "nu", nu)
        object.__setattr__(self, "a", a)

    def __setattr__(self, name, value):
        raise AttributeError("LatticeMatrix is immutable")

    @classmethod
    def from_entries(cls, entries: Mapping, n: int = 1) -> LatticeMatrix:
        """Build from ``{(mu, nu): value}``; for n == 1 plain ints are accepted."""
        mus, nus, vals = [], [], []
        for (mu, nu), v in entries.items():
            mus.append(as_index(mu, n))
            nus.append(as_index(nu, n))
            vals.append(v)
        return cls(n, np.array(mus, dtype=np.int64).reshape(-1, n),
                   np.array(nus, dtype=np.int64).reshape(-1, n), vals)

    @classmethod
    def from_dense(cls, block, mu0=0, nu0=0) -> LatticeMatrix:
        """n == 1 helper: ``block[i, j]`` becomes ``a_{mu0+i, nu0+j}``."""
        block = np.asarray(block, dtype=complex)
        i, j = np.indices(block.shape)
        return cls(1, (i + mu0).ravel(), (j + nu0).ravel(), block.ravel())

    @classmethod
    def empty(cls, n: int = 1) -> LatticeMatrix:
        return cls(n, np.zeros((0, n)), np.zeros((0, n)), [])

    def __len__(self) -> int:
        return len(self.a)

    def __repr__(self) -> str:
        return f"LatticeMatrix(n={self.n}, nnz={len(self)}, radius={self.support_radius})"

    def __eq__(self, other) -> bool:
        return (isinstance(other, LatticeMatrix) and self.n == other.n
                and np.array_equal(self.mu, other.mu) and np.array_equal(self.nu, other.nu)
                and np.array_equal(self.a, other.a))

    __hash__ = None

    @property
    def entries(self) -> dict[tuple[Index, Index], complex]:
        return {(tuple(map(int, m)), tuple(map(int, v))): complex(x)
                for m, v, x in zip(self.mu, self.nu, self.a)}

    @property
    def support_radius(self) -> int:
        if not len(self):
            return 0
        return int(max(np.abs(self.mu).max(), np.abs(self.nu).max()))

    def is_nonnegative(self) -> bool:
        return bool(np.all(self.a.imag == 0) and np.all(self.a.real >= 0))

    def max_abs(self) -> float:
        return float(np.abs(self.a).max()) if len(self) else 0.0

    def l1(self) -> float:
        return float(np.abs(self.a).sum())

    def scaled(self, c: complex) -> LatticeMatrix:
        return LatticeMatrix(self.n, self.mu, self.nu, self.a * c)

    def translated(self, mu0, nu0) -> LatticeMatrix:
        """``b_{mu,nu} = a_{mu-mu0, nu-nu0}``."""
        mu0 = np.asarray(as_index(mu0, self.n))
        nu0 = np.asarray(as_index(nu0, self.n))
        return LatticeMatrix(self.n, self.mu + mu0, self.nu + nu0, self.a)

    def index_box(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Coordinate-wise (mu_lo, mu_hi, nu_lo, nu_hi)."""
        return self.mu.min(0), self.mu.max(0), self.nu.min(0), self.nu.max(0)

    def to_json(self) -> dict:
        return {"n": self.n, "entries": [
            {"mu": [int(x) for x in m], "nu": [int(x) for x in v],
             "re": float(c.real), "im": float(c.imag)}
            for m, v, c in zip(self.mu, self.nu, self.a)]}

    @classmethod
    def from_json(cls, obj) -> LatticeMatrix:
        try:
            n = int(obj["n"])
            ents = obj["entries"]
            mus = [as_index(e["mu"], n) for e in ents]
            nus = [as_index(e["nu"], n) for e in ents]
            vals = [complex(float(e.get("re", 0.0)), float(e.get("im", 0.0))) for e in ents]
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"malformed matrix JSON: {exc}") from exc
        if len(set(zip(mus, nus))) != len(mus):
            raise ConfigError("duplicate (mu, nu) entry")
        return cls(n, np.array(mus, dtype=np.int64).reshape(-1, n),
                   np.array(nus, dtype=np.int64).reshape(-1, n), vals)

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=1, sort_keys=True))

    @classmethod
    def load(cls, path) -> LatticeMatrix:
        return cls.from_json(json.loads(Path(path).read_text()))
