"""Expansion exponents of maps and of atomic measures on point clouds.

For a cloud X, a map T and a measure mu, the profile at scale eps is

    lambda_hat(eps) = inf { log d(Tx, Ty) / d(x, y) : x in X, y in supp(mu), 0 < d(x, y) < eps }

(+inf when no pair qualifies, -inf when some pair collapses). The estimate is the largest profile value over the grid; a scale with no
pairs imposes no constraint and contributes +inf. On atomic measures "the bad
set is null" means "no atom is bad", so the profile is exact on the finite
model.
"""
import math
from dataclasses import dataclass

import numpy as np

from .errors import PreconditionError, StructuralError
from .measures import AtomicMeasure
from .report import write_csv
from .spaces import iter_pairs

FLOOR_FACTOR = 4.0


def _log(r):
    return math.log(r) if r > 0 else -math.inf


@dataclass
class EpsilonProfile:
    eps: np.ndarray
    lambda_hat: np.ndarray
    pair_count: np.ndarray
    resolution_floor: float

    def estimate(self):
        # a scale with no pairs imposes no constraint, so it contributes +inf
        return float(self.lambda_hat.max())

    def rows(self):
        return [(float(e), float(l), int(c)) for e, l, c in zip(self.eps, self.lambda_hat, self.pair_count)]

    def to_csv(self, path):
        return write_csv(path, ["eps", "lambda_hat", "pair_count"], self.rows())

    def to_dict(self):
        return {"estimate": self.estimate(), "resolution_floor": self.resolution_floor,
                "entries": [{"eps": e, "lambda_hat": l, "pair_count": c} for e, l, c in self.rows()]}


@dataclass(frozen=True)
class ExponentCertificate:
    """k > 1 and eps > 0 with d(Tx, Ty) >= k d(x, y) for every x and every support atom y within eps."""

    k: float
    eps: float
    checked_points: int = 0

    def __post_init__(self):
        if not (self.k > 1 and self.eps > 0):
            raise StructuralError("certificate needs k > 1 and eps > 0")

    def to_dict(self):
        return {"k": self.k, "eps": self.eps, "checked_points": self.checked_points}


def log_ratio(map_, space, x, y):
    """log(d(Tx, Ty) / d(x, y)); -inf when the images coincide."""
    a, b = space.coerce(x), space.coerce(y)
    d = float(space.dist(a, b))
    if d == 0:
        raise PreconditionError("log_ratio needs d(x, y) > 0")
    ta, tb = map_.apply_coords(np.vstack([a, b]))
    return _log(float(space.dist(ta, tb)) / d)


def check_eps_grid(cloud, eps_grid, floor_factor=FLOOR_FACTOR):
    eps = np.asarray(eps_grid, dtype=float).reshape(-1)
    if len(eps) == 0:
        raise PreconditionError("empty eps grid")
    if np.any(eps <= 0) or np.any(np.diff(eps) <= 0):
        raise PreconditionError("eps grid must be positive and strictly increasing")
    floor = floor_factor * cloud.resolution
    if eps[0] < floor:
        raise PreconditionError(
            f"eps={eps[0]:g} is below the resolution floor {floor:g} "
            f"({floor_factor:g} x resolution {cloud.resolution:g})")
    return eps, floor


def _check_map(map_, cloud):
    if map_.space != cloud.space:
        raise StructuralError(f"map acts on {map_.space!r} but the cloud lives in {cloud.space!r}")


def measure_pairs(cloud, images, supp, eps):
    """Yield ordered chunks ``(x, y, d, d_image)`` with y in ``supp`` and 0 < d < eps.

    Small supports are scanned atom by atom; otherwise every unordered pair is
    enumerated once and split by direction.
    """
    space = cloud.space
    n = len(cloud)
    atoms = np.flatnonzero(supp)
    if len(atoms) * 8 <= n:
        rows = max(1, (1 << 21) // (n * space.dim))
        for a in range(0, len(atoms), rows):
            ys = atoms[a:a + rows]
            d = space.dist(cloud.coords[ys, None, :], cloud.coords[None, :, :])
            yi, xi = np.nonzero((d > 0) & (d < eps))
            if len(xi) == 0:
                continue
            y = ys[yi]
            yield xi, y, d[yi, xi], space.dist(images[xi], images[y])
        return
    for i, j, d in iter_pairs(cloud, eps):
        dt = space.dist(images[i], images[j])
        fwd, bwd = supp[j], supp[i]
        yield (np.concatenate([i[fwd], j[bwd]]), np.concatenate([j[fwd], i[bwd]]),
               np.concatenate([d[fwd], d[bwd]]), np.concatenate([dt[fwd], dt[bwd]]))


def _profile(map_, cloud, supp, eps_grid, floor_factor):
    _check_map(map_, cloud)
    eps, floor = check_eps_grid(cloud, eps_grid, floor_factor)
    images = map_.apply_coords(cloud.coords)
    lo = np.full(len(eps), np.inf)
    count = np.zeros(len(eps), dtype=np.int64)
    for _, _, d, dt in measure_pairs(cloud, images, supp, eps[-1]):
        ratio = dt / d
        for k, e in enumerate(eps):
            m = d < e
            c = int(np.count_nonzero(m))
            if c:
                count[k] += c
                lo[k] = min(lo[k], float(ratio[m].min()))
    lam = np.array([math.inf if c == 0 else _log(r) for r, c in zip(lo, count)])
    return EpsilonProfile(eps, lam, count, floor)


def measure_expansion_profile(map_, cloud, mu, eps_grid, floor_factor=FLOOR_FACTOR):
    if mu.cloud is not cloud:
        raise StructuralError("measure does not live on this cloud")
    return _profile(map_, cloud, mu.support_mask(), eps_grid, floor_factor)


def map_expansion_profile(map_, cloud, eps_grid, floor_factor=FLOOR_FACTOR):
    return _profile(map_, cloud, np.ones(len(cloud), dtype=bool), eps_grid, floor_factor)


def verify_certificate(map_, cloud, mu, k, eps):
    """Scan every (x, support atom) pair within eps; return (ok, pairs checked)."""
    _check_map(map_, cloud)
    images = map_.apply_coords(cloud.coords)
    checked = 0
    for _, _, d, dt in measure_pairs(cloud, images, mu.support_mask(), eps):
        checked += len(d)
        if np.any(dt < k * d):
            return False, checked
    return True, checked


def positive_exponent_certificate(map_, cloud, mu, eps_grid, floor_factor=FLOOR_FACTOR,
                                  profile=None):
    """Certificate (k, eps) witnessing a positive exponent, or None.

    eps is the largest grid scale attaining the estimate and
    k = exp(estimate / 2), kept above 1 + 1e-9.
    """
    if profile is None:
        profile = measure_expansion_profile(map_, cloud, mu, eps_grid, floor_factor)
    est = profile.estimate()
    if not (0 < est < math.inf):
        return None
    hit = np.flatnonzero((profile.pair_count > 0) & (profile.lambda_hat == est))
    eps = float(profile.eps[hit[-1]])
    k = max(math.exp(est / 2), 1 + 1e-9)
    ok, checked = verify_certificate(map_, cloud, mu, k, eps)
    if not ok:
        return None
    return ExponentCertificate(k=k, eps=eps, checked_points=checked)


def violating_pairs(map_, cloud, lam, eps):
    """Ordered pairs with d < eps and d(Tx, Ty) < e^lam d(x, y), sorted by (d, x, y).

    For lam = -inf the collapsed pairs (image distance 0) are returned.
    """
    _check_map(map_, cloud)
    images = map_.apply_coords(cloud.coords)
    scale = math.exp(lam) if lam > -math.inf else None
    xs, ys, ds = [], [], []
    for x, y, d, dt in measure_pairs(cloud, images, np.ones(len(cloud), dtype=bool), eps):
        bad = dt < scale * d if scale is not None else dt == 0
        xs.append(x[bad])
        ys.append(y[bad])
        ds.append(d[bad])
    if not xs:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64), np.empty(0)
    x, y, d = np.concatenate(xs), np.concatenate(ys), np.concatenate(ds)
    order = np.lexsort((y, x, d))
    return x[order], y[order], d[order]


def witness_measure(map_, cloud, lam, eps_grid, K=20, floor_factor=FLOOR_FACTOR, profile=None):
    """Renormalized sum_{i<=K} 2^-i delta_{y_i} over the K closest violating pairs.

    Pairs are searched at the finest grid scale that sees any pair. Fewer than
    K violating pairs means every one of them is used. The truncation changes
    the weights by less than 2^-K.
    """
    if profile is None:
        profile = map_expansion_profile(map_, cloud, eps_grid, floor_factor)
    seen = np.flatnonzero(profile.pair_count > 0)
    if len(seen) == 0:
        raise PreconditionError("no pairs at any admissible scale")
    eps = float(profile.eps[seen[0]])
    x, y, d = violating_pairs(map_, cloud, lam, eps)
    if len(y) == 0:
        raise PreconditionError(f"lambda={lam:g} not above E(T): no violating pair within eps={eps:g}")
    y = y[:K]
    w = np.ldexp(1.0, -np.arange(1, len(y) + 1))
    mass = np.bincount(y, weights=w, minlength=len(cloud))
    idx = np.flatnonzero(mass > 0)
    return AtomicMeasure(cloud, idx, mass[idx])


def exponent_estimate(map_, cloud, eps_grid, mu=None, floor_factor=FLOOR_FACTOR):
    if mu is None:
        return map_expansion_profile(map_, cloud, eps_grid, floor_factor).estimate()
    return measure_expansion_profile(map_, cloud, mu, eps_grid, floor_factor).estimate()
