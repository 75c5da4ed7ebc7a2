"""Compactly supported smooth bumps and the JSON bump DSL.

Every bump is a :class:`BumpSpec`: a dimension, a closed support box and a
vectorised evaluator ``fn(*coords)``.  Calling a BumpSpec zeroes everything
outside the box, so evaluators only need to be correct inside it.

DSL forms (``{"type": ...}``)::

    std_bump         {"d": 1}
    std_bump_scaled  {"center": [..], "radius": r | [..]}
    tensor           {"factors": [bump, ...]}
    shift_sum        {"base": bump, "shifts": [[..], ..], "weights": [..]}
    plateau          {"inner": [[lo, hi], ..], "outer": [[lo, hi], ..]}
"""

from __future__ import annotations

import json
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, DimensionMismatch


def std_bump_1d(t) -> np.ndarray:
    """``exp(-1/(1-t^2))`` on (-1, 1), zero elsewhere."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    inside = np.abs(t) < 1.0
    ti = t[inside]
    out[inside] = np.exp(-1.0 / (1.0 - ti * ti))
    return out


def _exp_ramp(s) -> np.ndarray:
    out = np.zeros_like(s)
    pos = s > 0
    out[pos] = np.exp(-1.0 / s[pos])
    return out


def smooth_step(s) -> np.ndarray:
    """C^inf step: 0 for s <= 0, 1 for s >= 1."""
    s = np.asarray(s, dtype=float)
    a = _exp_ramp(s)
    b = _exp_ramp(1.0 - s)
    return a / (a + b)


def plateau_1d(t, inner: tuple[float, float], outer: tuple[float, float]) -> np.ndarray:
    (a, b), (lo, hi) = inner, outer
    t = np.asarray(t, dtype=float)
    up = smooth_step((t - lo) / (a - lo)) if a > lo else (t >= lo).astype(float)
    down = smooth_step((hi - t) / (hi - b)) if hi > b else (t <= hi).astype(float)
    return up * down


@dataclass(frozen=True, eq=False)
class BumpSpec:
    d: int
    lo: tuple[float, ...]
    hi: tuple[float, ...]
    fn: Callable[..., np.ndarray] = field(repr=False)
    dsl: dict | None = field(default=None, repr=False)
    smoothness: str = "C-infinity (closed form)"

    def __post_init__(self):
        if len(self.lo) != self.d or len(self.hi) != self.d:
            raise DimensionMismatch("support box does not match dimension")
        if any(h < l for l, h in zip(self.lo, self.hi)):
            raise ValueError("empty support box")

    def __call__(self, *coords) -> np.ndarray:
        if len(coords) != self.d:
            raise DimensionMismatch(f"bump has d={self.d}, got {len(coords)} coordinates")
        coords = np.broadcast_arrays(*[np.asarray(c, dtype=float) for c in coords])
        inside = np.ones(coords[0].shape, dtype=bool)
        for c, l, h in zip(coords, self.lo, self.hi):
            inside &= (c >= l) & (c <= h)
        vals = np.asarray(self.fn(*coords))
        vals = np.broadcast_to(vals, inside.shape)
        return np.where(inside, vals, 0)

    def at(self, points) -> np.ndarray:
        """Evaluate at an (N, d) array of points."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        return self(*points.T)

    @property
    def support(self) -> tuple[np.ndarray, np.ndarray]:
        return np.array(self.lo), np.array(self.hi)

    def shifted(self, s) -> BumpSpec:
        """``x -> self(x - s)``."""
        s = tuple(float(v) for v in np.broadcast_to(np.asarray(s, float), (self.d,)))
        dsl = None
        if self.dsl is not None:
            dsl = {"type": "shift_sum", "base": self.dsl, "shifts": [list(s)], "weights": [1.0]}
        return BumpSpec(self.d, tuple(l + v for l, v in zip(self.lo, s)),
                        tuple(h + v for h, v in zip(self.hi, s)),
                        lambda *x: self.fn(*[xi - v for xi, v in zip(x, s)]), dsl)

    def to_json(self) -> dict:
        if self.dsl is None:
            raise ConfigError("this bump has no DSL form")
        return self.dsl


def std_bump(d: int = 1) -> BumpSpec:
    def fn(*x):
        out = std_bump_1d(x[0])
        for xi in x[1:]:
            out = out * std_bump_1d(xi)
        return out
    return BumpSpec(d, (-1.0,) * d, (1.0,) * d, fn, {"type": "std_bump", "d": d})


def std_bump_scaled(center, radius) -> BumpSpec:
    center = tuple(float(c) for c in np.atleast_1d(center))
    d = len(center)
    radius = tuple(float(r) for r in np.broadcast_to(np.asarray(radius, float), (d,)))
    if any(r <= 0 for r in radius):
        raise ValueError("radius must be positive")

    def fn(*x):
        out = std_bump_1d((x[0] - center[0]) / radius[0])
        for xi, c, r in zip(x[1:], center[1:], radius[1:]):
            out = out * std_bump_1d((xi - c) / r)
        return out
    return BumpSpec(d, tuple(c - r for c, r in zip(center, radius)),
                    tuple(c + r for c, r in zip(center, radius)), fn,
                    {"type": "std_bump_scaled", "center": list(center), "radius": list(radius)})


def tensor(factors: Sequence[BumpSpec]) -> BumpSpec:
    factors = list(factors)
    if not factors:
        raise ValueError("tensor needs at least one factor")
    dims = [f.d for f in factors]
    cuts = np.cumsum([0] + dims)

    def fn(*x):
        out = 1.0
        for f, a, b in zip(factors, cuts[:-1], cuts[1:]):
            out = out * f(*x[a:b])
        return out
    lo = tuple(v for f in factors for v in f.lo)
    hi = tuple(v for f in factors for v in f.hi)
    dsl = None
    if all(f.dsl is not None for f in factors):
        dsl = {"type": "tensor", "factors": [f.dsl for f in factors]}
    return BumpSpec(sum(dims), lo, hi, fn, dsl)


def shift_sum(base: BumpSpec, shifts, weights=None) -> BumpSpec:
    """``sum_i w_i base(x - s_i)``."""
    shifts = [tuple(float(v) for v in np.atleast_1d(s)) for s in shifts]
    if any(len(s) != base.d for s in shifts):
        raise DimensionMismatch("shift length must equal bump dimension")
    weights = [1.0] * len(shifts) if weights is None else [complex(w) for w in weights]
    if len(weights) != len(shifts):
        raise ValueError("one weight per shift")
    real = all(w.imag == 0 for w in weights)
    if real:
        weights = [w.real for w in weights]

    def fn(*x):
        out = 0.0
        for s, w in zip(shifts, weights):
            out = out + w * base(*[xi - si for xi, si in zip(x, s)])
        return out
    lo = tuple(min(base.lo[i] + s[i] for s in shifts) for i in range(base.d))
    hi = tuple(max(base.hi[i] + s[i] for s in shifts) for i in range(base.d))
    dsl = None
    if base.dsl is not None and real:
        dsl = {"type": "shift_sum", "base": base.dsl, "shifts": [list(s) for s in shifts],
               "weights": list(weights)}
    return BumpSpec(base.d, lo, hi, fn, dsl)


def plateau(inner, outer) -> BumpSpec:
    """Equal to 1 on the ``inner`` box, 0 outside ``outer``, smooth between."""
    inner = np.asarray(inner, dtype=float).reshape(-1, 2)
    outer = np.asarray(outer, dtype=float).reshape(-1, 2)
    if inner.shape != outer.shape:
        raise DimensionMismatch("inner and outer boxes differ in dimension")
    if np.any(inner[:, 0] < outer[:, 0]) or np.any(inner[:, 1] > outer[:, 1]):
        raise ValueError("inner box must lie inside outer box")
    d = len(inner)

    def fn(*x):
        out = 1.0
        for xi, ib, ob in zip(x, inner, outer):
            out = out * plateau_1d(xi, tuple(ib), tuple(ob))
        return out
    return BumpSpec(d, tuple(outer[:, 0]), tuple(outer[:, 1]), fn,
                    {"type": "plateau", "inner": inner.tolist(), "outer": outer.tolist()})


def product(a: BumpSpec, b: BumpSpec) -> BumpSpec:
    """Pointwise product; support is the box intersection."""
    if a.d != b.d:
        raise DimensionMismatch("product of bumps with different dimensions")
    lo = tuple(max(x, y) for x, y in zip(a.lo, b.lo))
    hi = tuple(min(x, y) for x, y in zip(a.hi, b.hi))
    if any(h < l for l, h in zip(lo, hi)):
        lo = hi = tuple(a.lo)
        return BumpSpec(a.d, lo, hi, lambda *x: 0.0)
    return BumpSpec(a.d, lo, hi, lambda *x: a(*x) * b(*x))


def from_json(obj) -> BumpSpec:
    try:
        kind = obj["type"]
        if kind == "std_bump":
            return std_bump(int(obj.get("d", 1)))
        if kind == "std_bump_scaled":
            return std_bump_scaled(obj["center"], obj["radius"])
        if kind == "tensor":
            return tensor([from_json(f) for f in obj["factors"]])
        if kind == "shift_sum":
            return shift_sum(from_json(obj["base"]), obj["shifts"], obj.get("weights"))
        if kind == "plateau":
            return plateau(obj["inner"], obj["outer"])
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"malformed bump JSON: {exc}") from exc
    raise ConfigError(f"unknown bump type {obj.get('type')!r}")


def load(path) -> BumpSpec:
    return from_json(json.loads(Path(path).read_text()))


def save(bump: BumpSpec, path) -> None:
    Path(path).write_text(json.dumps(bump.to_json(), indent=1, sort_keys=True))
