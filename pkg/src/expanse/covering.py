"""Bowen balls on a cloud and the greedy weighted cover built on them.

``B(x, n, r) = {y : d(T^i x, T^i y) < r for 0 <= i < n}``; with n = 1 this is
the ordinary open ball. Bowen distance is symmetric, so "y in B(x)" and
"x in B(y)" coincide; the greedy cover uses that to update gains locally.
"""
import heapq
import math

import numpy as np

from .maps import cloud_orbit
from .spaces import BLOCK, Circle, SymbolSpace, cylinder_depth, iter_pairs

def _exit_levels(orbit, space, radius, i, j, top):
    """Number of leading iterates (capped at ``top``) along which each pair stays within radius."""
    level = np.ones(len(i), dtype=np.int64)
    alive = np.arange(len(i))
    for t in range(1, top):
        if len(alive) == 0:
            break
        d = space.dist(orbit[t][i[alive]], orbit[t][j[alive]])
        alive = alive[d < radius]
        level[alive] += 1
    return level


def ball_masses(cloud, orbit, radius, weights, levels):
    """Mass of B(x, n, radius) for every cloud point x and every n in ``levels``.

    Returns an array of shape (len(levels), N).
    """
    levels = [int(n) for n in levels]
    top = max(levels)
    if orbit.shape[0] < top:
        raise ValueError("orbit too short for the requested levels")
    n = len(cloud)
    out = np.tile(weights, (len(levels), 1))
    for i, j, _ in iter_pairs(cloud, radius):
        lev = _exit_levels(orbit, cloud.space, radius, i, j, top)
        for row, m in enumerate(levels):
            sel = lev >= m
            if sel.any():
                a, b = i[sel], j[sel]
                out[row] += np.bincount(a, weights=weights[b], minlength=n)
                out[row] += np.bincount(b, weights=weights[a], minlength=n)
    return out


class BowenBalls:
    def __init__(self, cloud, orbit, radius):
        self.cloud = cloud
        self.orbit = orbit
        self.n = orbit.shape[0]
        self.radius = float(radius)
        self._window = self._window_width() if cloud.space.one_dimensional else None
        self._runs = None
        if isinstance(cloud.space, SymbolSpace):
            start, end = cloud.cylinders(min(cylinder_depth(self.radius), cloud.space.L))
            if (end - start).max() < len(cloud):
                self._runs = start, end

    @classmethod
    def ordinary(cls, cloud, radius):
        return cls(cloud, cloud.coords[None, :, :], radius)

    @classmethod
    def for_map(cls, map_, cloud, n, radius):
        return cls(cloud, cloud_orbit(map_, cloud.coords, n), radius)

    def masses(self, weights):
        return ball_masses(self.cloud, self.orbit, self.radius, weights, [self.n])[0]

    def _window_width(self):
        order, s = self.cloud._sorted
        n = len(s)
        r = self.radius
        if isinstance(self.cloud.space, Circle):
            ext = np.concatenate([s - 1.0, s, s + 1.0])
            k = np.arange(n) + n
            fwd = np.searchsorted(ext, s + r, side="left") - k - 1
            bwd = k - np.searchsorted(ext, s - r, side="right")
        else:
            k = np.arange(n)
            fwd = np.searchsorted(s, s + r, side="left") - k - 1
            bwd = k - np.searchsorted(s, s - r, side="right")
        w = int(max(fwd.max(), bwd.max())) + 1
        return None if 2 * w + 1 >= n else w

    def _candidates(self, centers):
        """Yield (center, y) candidate chunks that contain every ordinary-ball member."""
        cloud = self.cloud
        n = len(cloud)
        if self._window is not None:
            order, _ = cloud._sorted
            pos = np.empty(n, dtype=np.int64)
            pos[order] = np.arange(n)
            offs = np.arange(-self._window, self._window + 1)
            rows = max(1, BLOCK // len(offs))
            circular = isinstance(cloud.space, Circle)
            for a in range(0, len(centers), rows):
                c = centers[a:a + rows]
                q = pos[c][:, None] + offs[None, :]
                cc = np.broadcast_to(c[:, None], q.shape)
                if circular:
                    q = q % n
                    yield cc.ravel(), order[q.ravel()]
                else:
                    ok = (q >= 0) & (q < n)
                    yield cc[ok], order[q[ok]]
            return
        if self._runs is not None:
            order, _ = cloud._lex
            pos = np.empty(n, dtype=np.int64)
            pos[order] = np.arange(n)
            start, end = self._runs
            rows = max(1, BLOCK // int((end - start).max()))
            for a in range(0, len(centers), rows):
                c = centers[a:a + rows]
                lo, hi = start[pos[c]], end[pos[c]]
                size = hi - lo
                offs = np.arange(size.sum()) - np.repeat(np.cumsum(size) - size, size)
                yield np.repeat(c, size), order[np.repeat(lo, size) + offs]
            return
        rows = max(1, BLOCK // (n * cloud.space.dim))
        for a in range(0, len(centers), rows):
            c = centers[a:a + rows]
            d = cloud.space.dist(self.orbit[0][c, None, :], self.orbit[0][None, :, :])
            ci, y = np.nonzero(d < self.radius)
            yield c[ci], y

    def members(self, centers):
        """All pairs (c, y) with y in B(c, n, radius), for c in ``centers``."""
        centers = np.asarray(centers, dtype=np.int64).reshape(-1)
        cs, ys = [np.empty(0, dtype=np.int64)], [np.empty(0, dtype=np.int64)]
        space = self.cloud.space
        # cylinder candidates are exactly the ordinary ball, so level 0 is already checked
        first = 1 if self._runs is not None else 0
        for c, y in self._candidates(centers):
            keep = np.arange(len(c))
            for t in range(first, self.n):
                if len(keep) == 0:
                    break
                d = space.dist(self.orbit[t][c[keep]], self.orbit[t][y[keep]])
                keep = keep[d < self.radius]
            cs.append(c[keep])
            ys.append(y[keep])
        return np.concatenate(cs), np.concatenate(ys)


def _gains(balls, centers, weights, uncovered):
    c, y = balls.members(centers)
    live = uncovered[y]
    pos = np.searchsorted(centers, c[live])
    g = np.bincount(pos, weights=weights[y[live]], minlength=len(centers))
    return np.round(g, 12)


def greedy_cover(balls, weights, delta, masses=None):
    """Greedy cover of mass >= 1 - delta by balls centered at cloud points.

    Each step takes the ball with the largest uncovered mass, lowest index on
    ties (gains are compared after rounding to 12 decimals). Returns the
    chosen centers, an upper bound on the minimal count.

    Uncovered mass only shrinks as the cover grows, so stale gains are upper
    bounds and a lazy heap finds the same argmax as a full rescan. Stale
    entries are refreshed in batches.
    """
    weights = np.asarray(weights, dtype=float)
    gains = balls.masses(weights) if masses is None else np.asarray(masses, dtype=float)
    uncovered = weights > 0
    heap = [(-round(float(g), 12), i) for i, g in enumerate(gains.tolist()) if g > 0]
    heapq.heapify(heap)
    fresh = set()
    target = 1.0 - delta - 1e-12
    chosen = []
    total = 0.0
    batch = 16
    while total < target:
        if not heap:
            raise RuntimeError("greedy cover stalled before reaching the target mass")
        if heap[0][1] in fresh:
            s = heapq.heappop(heap)[1]
            _, mem = balls.members([s])
            mem = np.unique(mem[uncovered[mem]])
            chosen.append(s)
            uncovered[mem] = False
            total += math.fsum(weights[mem].tolist())
            fresh.clear()
            batch = 16
            continue
        stale, keep = [], []
        while heap and len(stale) < batch:
            item = heapq.heappop(heap)
            if item[1] in fresh:
                keep.append(item)
            else:
                stale.append(item[1])
        stale = np.array(sorted(stale), dtype=np.int64)
        for s, g in zip(stale.tolist(), _gains(balls, stale, weights, uncovered).tolist()):
            if g > 0:
                heapq.heappush(heap, (-g, s))
                fresh.add(s)
        for item in keep:
            heapq.heappush(heap, item)
        batch = min(batch * 2, 64)
    return chosen
