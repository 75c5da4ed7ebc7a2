"""Uniform cube-aligned grids, sampled fields, trapezoid quadrature and
FFT evaluation of Fourier integrals on such grids."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .bumps import BumpSpec
from .errors import DimensionMismatch, GridError


def _half_integer(v: float) -> bool:
    return abs(2 * v - round(2 * v)) < 1e-12


@dataclass(frozen=True)
class GridBox:
    """Closed box with endpoints in (1/2)Z sampled at spacing 1/m (m even).

    Grid points are ``k/m`` for integers ``k`` between ``lo*m`` and ``hi*m``, so
    every unit cube ``nu + Q`` meeting the box is tiled by whole cells.
    """

    lo: tuple[float, ...]
    hi: tuple[float, ...]
    m: int

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.lo))
        hi = tuple(float(v) for v in np.atleast_1d(self.hi))
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        if len(lo) != len(hi):
            raise DimensionMismatch("lo and hi differ in length")
        if int(self.m) != self.m or self.m < 2 or self.m % 2:
            raise GridError(f"m must be an even integer >= 2, got {self.m}")
        object.__setattr__(self, "m", int(self.m))
        if not all(_half_integer(v) for v in lo + hi):
            raise GridError(f"box endpoints must lie in (1/2)Z: {lo}, {hi}")
        if any(h < l for l, h in zip(lo, hi)):
            raise GridError("empty box")

    @classmethod
    def cube(cls, d: int, m: int, side: float = 1.0) -> GridBox:
        """The grid on ``side * Q`` in d dimensions."""
        return cls((-side / 2,) * d, (side / 2,) * d, m)

    @property
    def d(self) -> int:
        return len(self.lo)

    @property
    def start(self) -> tuple[int, ...]:
        return tuple(int(round(v * self.m)) for v in self.lo)

    @property
    def stop(self) -> tuple[int, ...]:
        return tuple(int(round(v * self.m)) for v in self.hi)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(b - a + 1 for a, b in zip(self.start, self.stop))

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def h(self) -> float:
        return 1.0 / self.m

    def axes(self) -> list[np.ndarray]:
        return [np.arange(a, b + 1) / self.m for a, b in zip(self.start, self.stop)]

    def mesh(self) -> list[np.ndarray]:
        return np.meshgrid(*self.axes(), indexing="ij")

    def weights(self) -> list[np.ndarray]:
        """Per-axis composite trapezoid weights."""
        return [trapezoid_weights(n, self.h) for n in self.shape]

    def shifted(self, s) -> GridBox:
        s = np.broadcast_to(np.asarray(s, float), (self.d,))
        return GridBox(tuple(np.add(self.lo, s)), tuple(np.add(self.hi, s)), self.m)

    def contains(self, other: GridBox) -> bool:
        return (self.d == other.d and all(a <= b for a, b in zip(self.start, other.start))
                and all(a >= b for a, b in zip(self.stop, other.stop)))

    def to_json(self) -> dict:
        return {"lo": list(self.lo), "hi": list(self.hi), "m": self.m}

    @classmethod
    def from_json(cls, obj) -> GridBox:
        return cls(tuple(obj["lo"]), tuple(obj["hi"]), int(obj["m"]))


def trapezoid_weights(n: int, h: float) -> np.ndarray:
    if n == 1:
        return np.zeros(1)
    w = np.full(n, h)
    w[0] = w[-1] = h / 2
    return w


def outward_box(lo, hi) -> tuple[tuple[float, ...], tuple[float, ...]]:
    """Smallest box with endpoints in (1/2)Z containing [lo, hi]."""
    lo = tuple(float(np.floor(2 * v + 1e-12) / 2) for v in np.atleast_1d(lo))
    hi = tuple(float(np.ceil(2 * v - 1e-12) / 2) for v in np.atleast_1d(hi))
    return lo, hi


@dataclass(frozen=True, eq=False)
class SampledField:
    grid: GridBox
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=complex)
        if vals.shape != self.grid.shape:
            if vals.size != self.grid.size:
                raise GridError(f"{vals.size} values for a grid of {self.grid.size} points")
            vals = vals.reshape(self.grid.shape)
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def __add__(self, other: SampledField) -> SampledField:
        if other.grid != self.grid:
            raise GridError("fields live on different grids")
        return SampledField(self.grid, self.values + other.values)

    def __mul__(self, c) -> SampledField:
        if isinstance(c, SampledField):
            if c.grid != self.grid:
                raise GridError("fields live on different grids")
            return SampledField(self.grid, self.values * c.values)
        return SampledField(self.grid, self.values * c)

    __rmul__ = __mul__

    def l2(self) -> float:
        return float(np.sqrt(quad(SampledField(self.grid, np.abs(self.values) ** 2)).real))

    def restrict(self, box: GridBox) -> SampledField:
        """Sub-field on a box contained in this one (same m)."""
        if box.m != self.grid.m or not self.grid.contains(box):
            raise GridError("restriction box is not a sub-grid")
        sl = tuple(slice(b - a, b - a + n)
                   for a, b, n in zip(self.grid.start, box.start, box.shape))
        return SampledField(box, self.values[sl])

    def embed(self, box: GridBox, strict: bool = True) -> np.ndarray:
        """Values on ``box`` (same m): zero-padded, and cropped where allowed.

        With ``strict``, nonzero samples falling outside ``box`` raise.
        """
        if box.m != self.grid.m or box.d != self.grid.d:
            raise GridError("incommensurate grids")
        out = np.zeros(box.shape, dtype=complex)
        src, dst = [], []
        for a, n, b, nb in zip(self.grid.start, self.grid.shape, box.start, box.shape):
            lo = max(a, b)
            hi = min(a + n, b + nb)
            if hi <= lo:
                if strict and np.any(self.values != 0):
                    raise GridError("field support lies outside the target box")
                return out
            src.append(slice(lo - a, hi - a))
            dst.append(slice(lo - b, hi - b))
        inner = self.values[tuple(src)]
        if strict:
            total = np.abs(self.values).sum()
            if np.abs(inner).sum() < total:
                raise GridError("field support exceeds the target box")
        out[tuple(dst)] = inner
        return out

    def to_json(self) -> dict:
        flat = self.values.ravel()
        return {"grid": self.grid.to_json(), "re": flat.real.tolist(), "im": flat.imag.tolist()}

    @classmethod
    def from_json(cls, obj) -> SampledField:
        grid = GridBox.from_json(obj["grid"])
        re = np.asarray(obj["re"], float)
        im = np.asarray(obj.get("im", np.zeros_like(re)), float)
        return cls(grid, re + 1j * im)


def save_field(field: SampledField, path, raw: bool = False) -> None:
    """JSON ``{grid, re, im}``; with ``raw`` the samples go to ``<path>.bin``
    as little-endian float64 (re, im) pairs and the JSON is a sidecar."""
    path = Path(path)
    if not raw:
        path.write_text(json.dumps(field.to_json()))
        return
    binpath = path.with_suffix(path.suffix + ".bin")
    pairs = np.empty((field.grid.size, 2), dtype="<f8")
    pairs[:, 0] = field.values.ravel().real
    pairs[:, 1] = field.values.ravel().imag
    binpath.write_bytes(pairs.tobytes())
    path.write_text(json.dumps({"grid": field.grid.to_json(), "raw": binpath.name}))


def load_field(path) -> SampledField:
    path = Path(path)
    obj = json.loads(path.read_text())
    if "raw" in obj:
        pairs = np.frombuffer((path.parent / obj["raw"]).read_bytes(), dtype="<f8").reshape(-1, 2)
        return SampledField(GridBox.from_json(obj["grid"]), pairs[:, 0] + 1j * pairs[:, 1])
    return SampledField.from_json(obj)


def sample(b: BumpSpec, g: GridBox) -> SampledField:
    if b.d != g.d:
        raise DimensionMismatch(f"bump has d={b.d}, grid has d={g.d}")
    return SampledField(g, b(*g.mesh()))


def apply_weights(values: np.ndarray, weights: list[np.ndarray]) -> complex:
    out = values
    for w in reversed(weights):
        out = out @ w
    return complex(out)


def quad(f: SampledField) -> complex:
    """Composite trapezoid rule over the field's box."""
    return apply_weights(f.values, f.grid.weights())


def phased_sum(values: np.ndarray, src0: float, src_m: int, dst0: float, dst_m: int,
               count: int, axis: int = -1) -> np.ndarray:
    """``S[k] = sum_j values[j] exp(2 pi i (dst0 + k/dst_m)(src0 + j/src_m))``.

    One FFT of length ``src_m * dst_m`` along ``axis``.  Source indices are
    folded modulo the FFT length and output indices wrap, both exactly, so
    no constraint links the source length, ``count`` and the FFT length.
    """
    L = int(src_m) * int(dst_m)
    v = np.moveaxis(np.asarray(values, dtype=complex), axis, -1)
    n = v.shape[-1]
    j = np.arange(n)
    v = v * np.exp(2j * np.pi * dst0 * (j / src_m))
    if n > L:
        pad = (-n) % L
        v = np.concatenate([v, np.zeros(v.shape[:-1] + (pad,), complex)], axis=-1)
        v = v.reshape(v.shape[:-1] + (-1, L)).sum(axis=-2)
    raw = np.fft.ifft(v, n=L, axis=-1) * L
    k = np.arange(count)
    out = raw[..., k % L]
    out = out * (np.exp(2j * np.pi * src0 * (k / dst_m)) * np.exp(2j * np.pi * dst0 * src0))
    return np.moveaxis(out, -1, axis)


def inverse_fourier(b: BumpSpec, target: GridBox, refine: int = 512) -> SampledField:
    """``x -> int b(xi) exp(2 pi i x.xi) d xi`` on the target grid.

    ``b`` is sampled on its support box at spacing ``1/refine`` (trapezoid
    weights), then transformed one axis at a time with :func:`phased_sum`.
    """
    if target.d != b.d:
        raise DimensionMismatch(f"bump has d={b.d}, target has d={target.d}")
    if int(refine) != refine or refine < 1:
        raise GridError("refine must be a positive integer")
    refine = int(refine)
    starts, axes, weights = [], [], []
    for l, h in zip(b.lo, b.hi):
        s = int(np.floor(l * refine))
        e = int(np.ceil(h * refine))
        starts.append(s / refine)
        axes.append(np.arange(s, e + 1) / refine)
        weights.append(trapezoid_weights(e - s + 1, 1.0 / refine))
    vals = b(*np.meshgrid(*axes, indexing="ij")).astype(complex)
    for ax, w in enumerate(weights):
        shape = [1] * b.d
        shape[ax] = -1
        vals = vals * w.reshape(shape)
    for ax in range(b.d):
        vals = phased_sum(vals, starts[ax], refine, target.lo[ax], target.m,
                          target.shape[ax], axis=ax)
    return SampledField(target, vals)
