"""Dynamical map models T: X -> X, orbits and Bowen distances."""
from dataclasses import dataclass, field

import numpy as np

from .errors import PreconditionError, StructuralError
from .spaces import Circle, PointCloud, SymbolSpace, UnitInterval, wrap01


class MapModel:
    space = None
    continuous = True

    def apply_coords(self, coords):
        """Image of every row of ``coords`` (shape (N, dim))."""
        raise NotImplementedError

    def describe(self):
        raise NotImplementedError


@dataclass(frozen=True)
class TimesM(MapModel):
    m: int = 2
    space = Circle()

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 2:
            raise StructuralError("TimesM needs an integer m >= 2")

    def apply_coords(self, coords):
        return wrap01(self.m * np.asarray(coords, dtype=float))

    def describe(self):
        return {"type": "times_m", "m": self.m}


@dataclass(frozen=True)
class Rotation(MapModel):
    alpha: float = 0.0
    space = Circle()

    def __post_init__(self):
        if not 0.0 <= self.alpha < 1.0:
            raise StructuralError("rotation angle must lie in [0, 1)")

    def apply_coords(self, coords):
        return wrap01(np.asarray(coords, dtype=float) + self.alpha)

    def describe(self):
        return {"type": "rotation", "alpha": self.alpha}


@dataclass(frozen=True)
class Tent(MapModel):
    s: float = 2.0
    space = UnitInterval()

    def __post_init__(self):
        if not 0.0 < self.s <= 2.0:
            raise StructuralError("tent slope must lie in (0, 2]; larger slopes leave [0, 1]")

    def apply_coords(self, coords):
        x = np.asarray(coords, dtype=float)
        return np.clip(np.where(x <= 0.5, self.s * x, self.s * (1.0 - x)), 0.0, 1.0)

    def describe(self):
        return {"type": "tent", "s": self.s}


@dataclass(frozen=True)
class PiecewiseLinear(MapModel):
    """Continuous piecewise-linear interval map.

    ``breakpoints`` run from 0 to 1; ``slopes[i]`` applies on
    ``[breakpoints[i], breakpoints[i+1]]`` and ``start`` is the value at 0.
    """

    breakpoints: tuple = (0.0, 1.0)
    slopes: tuple = (1.0,)
    start: float = 0.0
    space = UnitInterval()
    values: tuple = field(init=False, repr=False)

    def __post_init__(self):
        b = np.asarray(self.breakpoints, dtype=float)
        s = np.asarray(self.slopes, dtype=float)
        if len(b) < 2 or b[0] != 0.0 or b[-1] != 1.0 or np.any(np.diff(b) <= 0):
            raise StructuralError("breakpoints must increase strictly from 0 to 1")
        if len(s) != len(b) - 1:
            raise StructuralError("need one slope per piece")
        v = self.start + np.concatenate([[0.0], np.cumsum(s * np.diff(b))])
        if np.any(v < -1e-12) or np.any(v > 1 + 1e-12):
            raise StructuralError("piecewise-linear map leaves [0, 1]")
        object.__setattr__(self, "breakpoints", tuple(b))
        object.__setattr__(self, "slopes", tuple(s))
        object.__setattr__(self, "values", tuple(np.clip(v, 0.0, 1.0)))

    def apply_coords(self, coords):
        x = np.asarray(coords, dtype=float)
        return np.interp(x, self.breakpoints, self.values)

    def describe(self):
        return {"type": "piecewise_linear", "breakpoints": list(self.breakpoints),
                "slopes": list(self.slopes), "start": self.start}


@dataclass(frozen=True)
class Contraction(MapModel):
    c: float = 0.5
    space = UnitInterval()

    def __post_init__(self):
        if not 0.0 < self.c < 1.0:
            raise StructuralError("contraction factor must lie in (0, 1)")

    def apply_coords(self, coords):
        return self.c * np.asarray(coords, dtype=float)

    def describe(self):
        return {"type": "contraction", "c": self.c}


@dataclass(frozen=True, eq=False)
class ConstantMap(MapModel):
    space: object = UnitInterval()
    target: object = 0.0

    def __post_init__(self):
        object.__setattr__(self, "_row", self.space.coerce(self.target))

    def apply_coords(self, coords):
        coords = np.asarray(coords, dtype=float)
        return np.broadcast_to(self._row, coords.shape).copy()

    def describe(self):
        t = self.space.to_point(self._row)
        return {"type": "constant", "target": list(t) if isinstance(t, tuple) else t}


@dataclass(frozen=True)
class Shift(MapModel):
    """Left shift on finite words.

    ``mode="pad"`` drops the first symbol and appends symbol 0; ``"cyclic"``
    rotates the word, which is exact on periodic words.
    """

    space: SymbolSpace = SymbolSpace()
    mode: str = "pad"

    def __post_init__(self):
        if not isinstance(self.space, SymbolSpace):
            raise StructuralError("shift acts on a symbol space")
        if self.mode not in ("pad", "cyclic"):
            raise StructuralError("shift mode must be 'pad' or 'cyclic'")

    def apply_coords(self, coords):
        w = np.asarray(coords, dtype=float)
        if self.mode == "cyclic":
            return np.roll(w, -1, axis=-1)
        out = np.zeros_like(w)
        out[..., :-1] = w[..., 1:]
        return out

    def describe(self):
        return {"type": "shift", "mode": self.mode}


@dataclass(frozen=True, eq=False)
class LookupTable(MapModel):
    """Explicit table over a cloud: point i maps to point ``images[i]``."""

    cloud: PointCloud = None
    images: tuple = ()
    continuous = False

    def __post_init__(self):
        images = np.asarray(self.images, dtype=np.int64)
        if self.cloud is None or images.shape != (len(self.cloud),):
            raise StructuralError("lookup table needs one image index per cloud point")
        if np.any(images < 0) or np.any(images >= len(self.cloud)):
            raise StructuralError("lookup image index out of range")
        object.__setattr__(self, "images", images)

    @property
    def space(self):
        return self.cloud.space

    def apply_coords(self, coords):
        idx = self.cloud.locate(coords)
        return self.cloud.coords[self.images[idx]].copy()

    def describe(self):
        return {"type": "lookup", "images": self.images.tolist()}


def apply(map_, x):
    row = map_.space.coerce(x)
    return map_.space.to_point(map_.apply_coords(row[None, :])[0])


def orbit(map_, x, n):
    """[x, T(x), ..., T^{n-1}(x)]."""
    if n < 1:
        raise PreconditionError("orbit length must be >= 1")
    rows = cloud_orbit(map_, map_.space.coerce(x)[None, :], n)[:, 0, :]
    return [map_.space.to_point(r) for r in rows]


def bowen_distance(map_, x, y, n):
    """max_{0 <= i < n} d(T^i x, T^i y)."""
    if n < 1:
        raise PreconditionError("n must be >= 1")
    space = map_.space
    pts = np.vstack([space.coerce(x), space.coerce(y)])
    orb = cloud_orbit(map_, pts, n)
    return float(space.dist(orb[:, 0, :], orb[:, 1, :]).max())


def cloud_orbit(map_, coords, n):
    """Stack of iterates, shape (n, N, dim), with ``out[0] == coords``."""
    coords = np.asarray(coords, dtype=float)
    out = np.empty((n,) + coords.shape)
    out[0] = coords
    for i in range(1, n):
        out[i] = map_.apply_coords(out[i - 1])
    return out
