"""Compact metric space models, points and finite point clouds.

Points are stored as float rows of length ``space.dim``: one coordinate for the
interval and the circle, one column per symbol for words, and the concatenation
of the factor rows for products.
"""
import itertools
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import PreconditionError, StructuralError

# Results of mod-1 arithmetic this close to 1.0 are folded back to 0.0.
WRAP_FIXUP = 1e-15
# Rough element budget for one vectorized block.
BLOCK = 1 << 21


def wrap01(x):
    r = np.mod(np.asarray(x, dtype=float), 1.0)
    r = np.where(r >= 1.0 - WRAP_FIXUP, 0.0, r)
    return r + 0.0


class SpaceModel:
    """Base class: subclasses provide ``dim``, ``dist`` and point conversions."""

    dim = 1
    one_dimensional = False

    def coerce(self, point):
        raise NotImplementedError

    def dist(self, a, b):
        raise NotImplementedError

    def normalize(self, coords):
        return coords

    def to_point(self, row):
        raise NotImplementedError

    def describe(self):
        raise NotImplementedError

    def coerce_many(self, points):
        if isinstance(points, np.ndarray) and points.ndim == 2 and points.shape[1] == self.dim:
            arr = points.astype(float)
            self._check(arr)
            return self.normalize(arr)
        rows = [self.coerce(p) for p in points]
        if not rows:
            return np.empty((0, self.dim))
        return np.vstack(rows)

    def _check(self, arr):
        pass


@dataclass(frozen=True)
class UnitInterval(SpaceModel):
    one_dimensional = True

    def coerce(self, point):
        x = np.asarray(point, dtype=float).reshape(-1)
        if x.shape != (1,):
            raise StructuralError(f"interval point must be a single real, got {point!r}")
        self._check(x)
        return self.normalize(x)

    def _check(self, arr):
        if np.any(arr < -1e-12) or np.any(arr > 1 + 1e-12) or not np.all(np.isfinite(arr)):
            raise StructuralError("interval coordinates must lie in [0, 1]")

    def normalize(self, coords):
        return np.clip(coords, 0.0, 1.0) + 0.0

    def dist(self, a, b):
        return np.abs(np.asarray(a)[..., 0] - np.asarray(b)[..., 0])

    def to_point(self, row):
        return float(row[0])

    def describe(self):
        return {"type": "interval"}


@dataclass(frozen=True)
class Circle(SpaceModel):
    """Unit-circumference circle with coordinates in [0, 1)."""

    one_dimensional = True

    def coerce(self, point):
        x = np.asarray(point, dtype=float).reshape(-1)
        if x.shape != (1,):
            raise StructuralError(f"circle point must be a single real, got {point!r}")
        self._check(x)
        return self.normalize(x)

    def _check(self, arr):
        if not np.all(np.isfinite(arr)):
            raise StructuralError("circle coordinates must be finite")

    def normalize(self, coords):
        return wrap01(coords)

    def dist(self, a, b):
        g = np.abs(np.asarray(a)[..., 0] - np.asarray(b)[..., 0])
        return np.minimum(g, 1.0 - g)

    def to_point(self, row):
        return float(row[0])

    def describe(self):
        return {"type": "circle"}


@dataclass(frozen=True)
class SymbolSpace(SpaceModel):
    """Words of length ``L`` over ``m`` symbols; d = 2**-j at the first mismatch j."""

    m: int = 2
    L: int = 8

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 2:
            raise StructuralError("symbol space needs an alphabet of size m >= 2")
        if int(self.L) != self.L or self.L < 1:
            raise StructuralError("symbol space needs word length L >= 1")

    @property
    def dim(self):
        return self.L

    def coerce(self, point):
        if isinstance(point, str):
            point = [int(ch) for ch in point]
        w = np.asarray(point, dtype=float).reshape(-1)
        if w.shape != (self.L,):
            raise StructuralError(f"symbol word must have length {self.L}, got {point!r}")
        self._check(w)
        return w

    def _check(self, arr):
        if np.any(arr != np.round(arr)) or np.any(arr < 0) or np.any(arr >= self.m):
            raise StructuralError(f"symbols must be integers in [0, {self.m})")

    def dist(self, a, b):
        diff = np.asarray(a) != np.asarray(b)
        first = diff.argmax(axis=-1)
        hit = np.take_along_axis(diff, first[..., None], axis=-1)[..., 0]
        return np.where(hit, np.ldexp(1.0, -first), 0.0)

    def to_point(self, row):
        return tuple(int(s) for s in row)

    def describe(self):
        return {"type": "symbol", "m": self.m, "L": self.L}

    def encode(self, coords):
        """Integer code of each word (base m, first symbol most significant)."""
        coords = np.asarray(coords, dtype=np.int64).reshape(-1, self.L)
        if self.L * np.log2(self.m) >= 62:
            raise StructuralError("word space too large to encode")
        powers = self.m ** np.arange(self.L - 1, -1, -1, dtype=np.int64)
        return coords @ powers


@dataclass(frozen=True)
class Product(SpaceModel):
    """Finite product with the max metric."""

    factors: tuple = ()

    def __post_init__(self):
        if len(self.factors) < 1:
            raise StructuralError("product needs at least one factor")
        object.__setattr__(self, "factors", tuple(self.factors))

    @property
    def dim(self):
        return sum(f.dim for f in self.factors)

    def _slices(self):
        start = 0
        for f in self.factors:
            yield f, slice(start, start + f.dim)
            start += f.dim

    def coerce(self, point):
        point = list(point)
        if len(point) != len(self.factors):
            raise StructuralError(f"product point needs {len(self.factors)} components, got {point!r}")
        return np.concatenate([f.coerce(p) for f, p in zip(self.factors, point)])

    def _check(self, arr):
        for f, sl in self._slices():
            f._check(arr[..., sl])

    def normalize(self, coords):
        out = np.array(coords, dtype=float, copy=True)
        for f, sl in self._slices():
            out[..., sl] = f.normalize(out[..., sl])
        return out

    def dist(self, a, b):
        a, b = np.asarray(a), np.asarray(b)
        parts = [f.dist(a[..., sl], b[..., sl]) for f, sl in self._slices()]
        return np.maximum.reduce(parts) if len(parts) > 1 else parts[0]

    def to_point(self, row):
        return tuple(f.to_point(row[sl]) for f, sl in self._slices())

    def describe(self):
        return {"type": "product", "factors": [f.describe() for f in self.factors]}


def distance(space, x, y):
    """d(x, y) for two points of ``space``."""
    return float(space.dist(space.coerce(x), space.coerce(y)))


class PointCloud:
    """A finite sample of a space, with its covering radius ``resolution``.

    Exact duplicates are merged at construction (first occurrence wins) so that
    distinct indices always sit at positive distance.
    """

    def __init__(self, space, points, resolution=None):
        coords = space.coerce_many(points)
        if len(coords) == 0:
            raise StructuralError("a point cloud needs at least one point")
        _, first = np.unique(coords, axis=0, return_index=True)
        coords = coords[np.sort(first)]
        coords.flags.writeable = False
        self.space = space
        self.coords = coords
        if resolution is None:
            resolution = float(self.nearest_neighbor_distances.max()) if len(coords) > 1 else 0.0
        if resolution < 0:
            raise StructuralError("resolution must be nonnegative")
        self.resolution = float(resolution)

    def __len__(self):
        return len(self.coords)

    def __repr__(self):
        return f"PointCloud({self.space!r}, n={len(self)}, resolution={self.resolution:.3g})"

    def point(self, i):
        return self.space.to_point(self.coords[i])

    @property
    def points(self):
        return [self.space.to_point(row) for row in self.coords]

    @cached_property
    def _sorted(self):
        order = np.argsort(self.coords[:, 0], kind="stable")
        return order, self.coords[order, 0]

    @cached_property
    def _lex(self):
        """Lexicographic order of symbol words and the sorted words."""
        order = np.lexsort(self.coords.T[::-1])
        return order, self.coords[order]

    def cylinders(self, depth):
        """For each point in lexicographic order, the [start, end) run sharing its first ``depth`` symbols."""
        order, srt = self._lex
        n = len(srt)
        if depth <= 0:
            return np.zeros(n, dtype=np.int64), np.full(n, n, dtype=np.int64)
        change = (srt[1:, :depth] != srt[:-1, :depth]).any(axis=1)
        group = np.concatenate([[0], np.cumsum(change)])
        return np.searchsorted(group, group, side="left"), np.searchsorted(group, group, side="right")

    @cached_property
    def nearest_neighbor_distances(self):
        n = len(self)
        if n < 2:
            return np.full(n, np.inf)
        space = self.space
        if space.one_dimensional:
            order, s = self._sorted
            gaps = np.diff(s)
            if isinstance(space, Circle):
                gaps = np.append(gaps, s[0] + 1.0 - s[-1])
                gaps = np.minimum(gaps, 1.0 - gaps)
                left = np.roll(gaps, 1)
                nn_sorted = np.minimum(left, gaps)
            else:
                nn_sorted = np.minimum(np.append(np.inf, gaps), np.append(gaps, np.inf))
            out = np.empty(n)
            out[order] = nn_sorted
            return out
        if isinstance(space, SymbolSpace):
            order, srt = self._lex
            gaps = space.dist(srt[1:], srt[:-1])
            nn_sorted = np.minimum(np.append(np.inf, gaps), np.append(gaps, np.inf))
            out = np.empty(n)
            out[order] = nn_sorted
            return out
        out = np.empty(n)
        rows = max(1, BLOCK // (n * space.dim))
        for a in range(0, n, rows):
            d = space.dist(self.coords[a:a + rows, None, :], self.coords[None, :, :])
            d[np.arange(d.shape[0]), np.arange(a, a + d.shape[0])] = np.inf
            out[a:a + rows] = d.min(axis=1)
        return out

    @property
    def min_separation(self):
        return float(self.nearest_neighbor_distances.min()) if len(self) > 1 else np.inf

    @cached_property
    def _symbol_index(self):
        return {int(c): i for i, c in enumerate(self.space.encode(self.coords))}

    def locate(self, coords, tol=1e-9):
        """Indices of the cloud points within ``tol`` of each query row."""
        q = self.space.normalize(np.asarray(coords, dtype=float).reshape(-1, self.space.dim))
        if len(q) == 0:
            return np.empty(0, dtype=np.int64)
        space = self.space
        if isinstance(space, SymbolSpace):
            table = self._symbol_index
            try:
                return np.array([table[int(c)] for c in space.encode(q)], dtype=np.int64)
            except KeyError:
                raise StructuralError("point not representable in cloud") from None
        if space.one_dimensional:
            order, s = self._sorted
            n = len(s)
            pos = np.searchsorted(s, q[:, 0])
            cands = np.stack([(pos - 1) % n, pos % n, np.zeros_like(pos), np.full_like(pos, n - 1)])
            d = space.dist(s[cands][..., None], q[None, :, :])
            best = d.argmin(axis=0)
            idx = cands[best, np.arange(len(q))]
            dbest = d[best, np.arange(len(q))]
        else:
            idx = np.empty(len(q), dtype=np.int64)
            dbest = np.empty(len(q))
            rows = max(1, BLOCK // (len(self) * space.dim))
            for a in range(0, len(q), rows):
                d = space.dist(q[a:a + rows, None, :], self.coords[None, :, :])
                idx[a:a + rows] = d.argmin(axis=1)
                dbest[a:a + rows] = d.min(axis=1)
            order = np.arange(len(self))
        if np.any(dbest > tol):
            raise StructuralError(
                f"point not representable in cloud (off by {float(dbest.max()):.3g} > {tol:g})")
        return order[idx] if space.one_dimensional else idx


def grid_cloud(space, n):
    """Deterministic equispaced sample of ``space`` with its covering radius."""
    if n < 2:
        raise PreconditionError("grid needs n >= 2")
    if isinstance(space, UnitInterval):
        return PointCloud(space, np.linspace(0.0, 1.0, n)[:, None], resolution=1.0 / (2 * (n - 1)))
    if isinstance(space, Circle):
        return PointCloud(space, (np.arange(n) / n)[:, None], resolution=1.0 / (2 * n))
    if isinstance(space, SymbolSpace):
        total = space.m ** space.L
        if n < total:
            raise PreconditionError(
                f"symbol grids enumerate all {total} words; n={n} is too small")
        words = np.array(list(itertools.product(range(space.m), repeat=space.L)), dtype=float)
        return PointCloud(space, words, resolution=0.0)
    raise StructuralError(f"grid_cloud does not support {type(space).__name__}")


def _offset_pairs(cloud, eps, circular):
    order, s = cloud._sorted
    n = len(s)
    k = np.arange(n)
    for o in range(1, n):
        if circular:
            fwd = np.empty(n)
            fwd[:n - o] = s[o:] - s[:n - o]
            fwd[n - o:] = s[:o] + 1.0 - s[n - o:]
            lo = fwd.min()
            if lo >= eps + 1e-12 or lo > 0.5 + 1e-12:
                return
            partner = (k + o) % n
            wrapped = k >= n - o
            # Each unordered pair is emitted from exactly one endpoint: the
            # inner direction when its raw gap is <= 1/2, the wrap otherwise.
            raw = np.where(wrapped, s - s[partner], s[partner] - s)
            d = np.minimum(raw, 1.0 - raw)
            keep = np.where(wrapped, raw > 0.5, raw <= 0.5) & (d < eps) & (d > 0)
            sel = np.flatnonzero(keep)
            yield order[sel], order[partner[sel]], d[sel]
        else:
            d = s[o:] - s[:n - o]
            keep = d < eps
            if not keep.any():
                return
            sel = np.flatnonzero(keep)
            yield order[sel], order[sel + o], d[sel]


def _block_pairs(cloud, eps):
    space, coords = cloud.space, cloud.coords
    n = len(coords)
    rows = max(1, BLOCK // (n * space.dim))
    for a in range(0, n - 1, rows):
        b = min(n, a + rows)
        d = space.dist(coords[a:b, None, :], coords[None, :, :])
        upper = np.arange(n)[None, :] > np.arange(a, b)[:, None]
        ii, jj = np.nonzero(upper & (d > 0) & (d < eps))
        yield ii + a, jj, d[ii, jj]


def cylinder_depth(eps):
    """Smallest j with 2**-j < eps: words within eps share their first j symbols."""
    return max(0, math.floor(-math.log2(eps)) + 1)


def _cylinder_pairs(cloud, eps):
    space = cloud.space
    order, srt = cloud._lex
    depth = cylinder_depth(eps)
    if depth >= space.L:
        return
    start, end = cloud.cylinders(depth)
    n = len(srt)
    k = np.arange(n)
    for o in range(1, int((end - start).max())):
        sel = np.flatnonzero(k + o < end)
        if len(sel) == 0:
            return
        d = space.dist(srt[sel], srt[sel + o])
        keep = (d > 0) & (d < eps)
        sel = sel[keep]
        yield order[sel], order[sel + o], d[keep]


def iter_pairs(cloud, eps, batch=1 << 20):
    """Yield ``(i, j, d)`` array chunks covering every unordered pair with 0 < d < eps once."""
    if cloud.space.one_dimensional:
        source = _offset_pairs(cloud, eps, isinstance(cloud.space, Circle))
    elif isinstance(cloud.space, SymbolSpace):
        source = _cylinder_pairs(cloud, eps)
    else:
        source = _block_pairs(cloud, eps)
    buf, size = [], 0
    for chunk in source:
        if len(chunk[0]) == 0:
            continue
        buf.append(chunk)
        size += len(chunk[0])
        if size >= batch:
            yield tuple(np.concatenate(parts) for parts in zip(*buf))
            buf, size = [], 0
    if buf:
        yield tuple(np.concatenate(parts) for parts in zip(*buf))


def pairs_within(cloud, eps):
    """All ordered pairs (i, j), i != j, with 0 < d < eps, sorted by (i, j).

    Returns three arrays ``(i, j, d)``.
    """
    if eps <= 0:
        raise PreconditionError("eps must be positive")
    ii, jj, dd = [np.empty(0, dtype=np.int64)], [np.empty(0, dtype=np.int64)], [np.empty(0)]
    for i, j, d in iter_pairs(cloud, eps):
        ii += [i, j]
        jj += [j, i]
        dd += [d, d]
    i, j, d = np.concatenate(ii), np.concatenate(jj), np.concatenate(dd)
    order = np.lexsort((j, i))
    return i[order], j[order], d[order]
