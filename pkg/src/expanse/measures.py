"""Finitely supported Borel probability measures on point clouds."""
import csv
import itertools
import math
from pathlib import Path

import numpy as np

from .errors import PreconditionError, StructuralError
from .report import fmt, parse_float
from .seeding import stream
from .spaces import Circle, PointCloud, Product, SymbolSpace, UnitInterval, grid_cloud

SNAP_TOL = 1e-9


class AtomicMeasure:
    """Atoms ``(index, weight)`` on a cloud; weights are positive and sum to 1."""

    def __init__(self, cloud, indices, weights):
        idx = np.asarray(indices, dtype=np.int64).reshape(-1)
        w = np.asarray(weights, dtype=float).reshape(-1)
        if idx.shape != w.shape or len(idx) == 0:
            raise StructuralError("need one positive weight per atom and at least one atom")
        if np.any(idx < 0) or np.any(idx >= len(cloud)):
            raise StructuralError("atom index out of range")
        if len(np.unique(idx)) != len(idx):
            raise StructuralError("atom indices must be distinct")
        if np.any(~(w > 0)) or not np.all(np.isfinite(w)):
            raise StructuralError("atom weights must be positive and finite")
        order = np.argsort(idx)
        self.cloud = cloud
        self.indices = idx[order]
        self.weights = w[order] / math.fsum(w)
        self.indices.flags.writeable = False
        self.weights.flags.writeable = False

    def __len__(self):
        return len(self.indices)

    def __repr__(self):
        return f"AtomicMeasure(atoms={len(self)}, max_atom={self.max_atom:.3g})"

    @property
    def atoms(self):
        return list(zip(self.indices.tolist(), self.weights.tolist()))

    @property
    def max_atom(self):
        return float(self.weights.max())

    def dense(self):
        out = np.zeros(len(self.cloud))
        out[self.indices] = self.weights
        return out

    def support_mask(self):
        out = np.zeros(len(self.cloud), dtype=bool)
        out[self.indices] = True
        return out


def dirac(cloud, index):
    if not 0 <= index < len(cloud):
        raise StructuralError(f"index {index} out of range for a cloud of {len(cloud)} points")
    return AtomicMeasure(cloud, [index], [1.0])


def uniform(cloud, indices=None):
    idx = np.arange(len(cloud)) if indices is None else np.unique(np.asarray(indices, dtype=np.int64))
    return AtomicMeasure(cloud, idx, np.ones(len(idx)))


def restrict(mu, indices):
    """Renormalized restriction of ``mu`` to the given point indices."""
    keep = np.isin(mu.indices, np.asarray(indices, dtype=np.int64))
    if not keep.any():
        raise PreconditionError("restriction has no mass")
    return AtomicMeasure(mu.cloud, mu.indices[keep], mu.weights[keep])


def convex_combine(terms):
    """sum_i t_i mu_i for ``terms = [(t_i, mu_i), ...]`` with t_i >= 0 summing to 1."""
    terms = list(terms)
    if not terms:
        raise StructuralError("empty combination")
    ts = [float(t) for t, _ in terms]
    if any(t < 0 for t in ts) or abs(math.fsum(ts) - 1.0) > 1e-12:
        raise PreconditionError("combination weights must be nonnegative and sum to 1")
    cloud = terms[0][1].cloud
    if any(mu.cloud is not cloud for _, mu in terms):
        raise StructuralError("all measures must live on the same cloud")
    acc = {}
    for t, (_, mu) in zip(ts, terms):
        if t == 0:
            continue
        for i, w in zip(mu.indices.tolist(), mu.weights.tolist()):
            acc.setdefault(i, []).append(t * w)
    idx = sorted(acc)
    return AtomicMeasure(cloud, idx, [math.fsum(acc[i]) for i in idx])


def mass_of(mu, indices):
    sel = np.isin(mu.indices, np.asarray(list(indices), dtype=np.int64))
    return math.fsum(mu.weights[sel].tolist())


def pushforward(map_, mu, tol=SNAP_TOL):
    cloud = mu.cloud
    images = map_.apply_coords(cloud.coords[mu.indices])
    target = cloud.locate(images, tol=tol)
    acc = {}
    for i, w in zip(target.tolist(), mu.weights.tolist()):
        acc.setdefault(i, []).append(w)
    idx = sorted(acc)
    return AtomicMeasure(cloud, idx, [math.fsum(acc[i]) for i in idx])


def invariance_defect(map_, mu):
    """Total-variation distance between ``mu`` and its pushforward."""
    nu = pushforward(map_, mu)
    return 0.5 * math.fsum(np.abs(mu.dense() - nu.dense()).tolist())


def _bernoulli_probs(space, p):
    probs = np.atleast_1d(np.asarray(p, dtype=float))
    if probs.size == 1:
        if space.m != 2:
            raise StructuralError("a scalar bernoulli parameter needs a binary alphabet")
        probs = np.array([probs[0], 1.0 - probs[0]])
    if probs.shape != (space.m,) or np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-12:
        raise StructuralError("bernoulli probabilities must be a distribution over the alphabet")
    return probs


def sample_measure(space, generator, n=1, seed=0, p=0.5, depth=None):
    """Build a ``(PointCloud, AtomicMeasure)`` pair from a named generator.

    ``uniform-iid`` draws ``n`` points, ``grid-uniform`` puts equal mass on an
    ``n``-point grid, ``bernoulli`` weights every word by the product of its
    symbol probabilities (``p`` is the probability of symbol 0), and
    ``cantor`` puts mass ``2**-depth`` on the left endpoints of the
    middle-thirds construction intervals.
    """
    if n < 1:
        raise PreconditionError("n must be >= 1")
    rng = stream(seed, f"sample_measure/{generator}")
    if generator == "uniform-iid":
        coords = _iid(space, n, rng)
        cloud = PointCloud(space, coords)
        idx = cloud.locate(coords, tol=0.0)
        w = np.bincount(idx, minlength=len(cloud)).astype(float)
        return cloud, AtomicMeasure(cloud, np.flatnonzero(w), w[w > 0])
    if generator == "grid-uniform":
        cloud = grid_cloud(space, n)
        return cloud, uniform(cloud)
    if generator == "bernoulli":
        if not isinstance(space, SymbolSpace):
            raise StructuralError("bernoulli measures live on symbol spaces")
        probs = _bernoulli_probs(space, p)
        cloud = grid_cloud(space, space.m ** space.L)
        w = np.prod(probs[cloud.coords.astype(np.int64)], axis=1)
        return cloud, AtomicMeasure(cloud, np.flatnonzero(w > 0), w[w > 0])
    if generator == "cantor":
        if not isinstance(space, UnitInterval):
            raise StructuralError("the cantor measure lives on the unit interval")
        if depth is None or depth < 0:
            raise PreconditionError("cantor measure needs depth >= 0")
        digits = np.array(list(itertools.product((0, 2), repeat=depth)), dtype=np.int64).reshape(-1, depth)
        num = digits @ (3 ** np.arange(depth - 1, -1, -1, dtype=np.int64))
        coords = (num / 3.0 ** depth)[:, None]
        cloud = PointCloud(space, coords, resolution=3.0 ** -depth)
        return cloud, uniform(cloud)
    raise StructuralError(f"unknown generator {generator!r}")


def _iid(space, n, rng):
    if isinstance(space, (UnitInterval, Circle)):
        return rng.random((n, 1))
    if isinstance(space, SymbolSpace):
        return rng.integers(0, space.m, size=(n, space.L)).astype(float)
    if isinstance(space, Product):
        return np.hstack([_iid(f, n, rng) for f in space.factors])
    raise StructuralError(f"cannot sample {type(space).__name__}")


def _columns(space):
    if space.one_dimensional:
        return ["x"]
    if isinstance(space, SymbolSpace):
        return [f"s{k}" for k in range(space.L)]
    return [f"c{k}" for k in range(space.dim)]


def write_measure_csv(path, mu):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    space = mu.cloud.space
    symbolic = isinstance(space, SymbolSpace)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(_columns(space) + ["weight"])
        for i, wt in zip(mu.indices, mu.weights):
            row = mu.cloud.coords[i]
            cells = [str(int(v)) for v in row] if symbolic else [fmt(float(v)) for v in row]
            w.writerow(cells + [fmt(float(wt))])
    return path


def read_measure_csv(path, space, resolution=None):
    """Load ``(cloud, measure)``; the cloud is the set of listed atoms."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != _columns(space) + ["weight"]:
        raise StructuralError(f"{path}: header must be {_columns(space) + ['weight']}")
    body = [r for r in rows[1:] if r]
    if not body:
        raise StructuralError(f"{path}: no atoms")
    coords = np.array([[parse_float(c) for c in r[:-1]] for r in body])
    weights = np.array([parse_float(r[-1]) for r in body])
    cloud = PointCloud(space, coords, resolution=resolution)
    idx = cloud.locate(space.coerce_many(coords), tol=0.0)
    w = np.bincount(idx, weights=weights, minlength=len(cloud))
    return cloud, AtomicMeasure(cloud, np.flatnonzero(w > 0), w[w > 0])
