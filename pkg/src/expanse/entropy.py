"""Katok spanning-set entropy and exact block entropy on symbolic systems.

Katok's formula reads the entropy off the exponential growth in n of
r_mu(n, gamma, delta), the least number of Bowen balls B(x, n, gamma) covering
mass 1 - delta, as gamma -> 0. We count with the greedy cover and fit the
growth rate over the window of n where Bowen balls are still larger than the
cloud's own scale. All entropies are in nats.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from .capacity import fit_line, mass_floor
from .covering import BowenBalls, ball_masses, greedy_cover
from .errors import PreconditionError, StructuralError
from .exponents import measure_expansion_profile
from .maps import cloud_orbit
from .measures import invariance_defect
from .report import write_csv
from .spaces import SymbolSpace

DEFAULT_DELTA = 0.02


def _check(map_, cloud, mu, gamma, delta):
    if mu.cloud is not cloud:
        raise StructuralError("measure does not live on this cloud")
    if map_.space != cloud.space:
        raise StructuralError("map and cloud live in different spaces")
    if gamma < 2 * cloud.resolution:
        raise PreconditionError(
            f"gamma={gamma:g} is below the scale floor {2 * cloud.resolution:g} (2 x resolution)")
    if not 0 <= delta < 1:
        raise PreconditionError("delta must lie in [0, 1)")
    if delta < mass_floor(mu):
        raise PreconditionError(f"delta={delta:g} is below the mass floor {mass_floor(mu):g} (largest atom)")


def spanning_count(map_, cloud, mu, n, gamma, delta=DEFAULT_DELTA):
    """Greedy upper bound on r_mu(n, gamma, delta)."""
    _check(map_, cloud, mu, gamma, delta)
    if n < 1:
        raise PreconditionError("n must be >= 1")
    balls = BowenBalls.for_map(map_, cloud, n, gamma)
    return len(greedy_cover(balls, mu.dense(), delta))


def effective_scale(cloud):
    """Scale under which a Bowen ball holds a single point: resolution, or half the closest spacing."""
    return max(cloud.resolution, 0.5 * cloud.min_separation if len(cloud) > 1 else 0.0)


def saturation_bound(gamma, cloud, exponent):
    """Largest n before B(x, n, gamma) ~ exp(-(n-1) E) gamma drops under the cloud scale."""
    if not (0 < exponent < math.inf):
        return math.inf
    scale = effective_scale(cloud)
    if scale <= 0:
        return math.inf
    return math.log(gamma / scale) / exponent


@dataclass
class EntropyReport:
    samples: dict              # gamma -> [(n, r_hat), ...]
    fits: dict                 # gamma -> (slope, intercept, residual)
    windows: dict              # gamma -> admissible n values
    estimate: float
    gamma_grid: list
    n_range: list
    delta: float
    exponent: float
    invariance_defect: float
    notes: list = field(default_factory=list)

    @property
    def gamma_trend(self):
        return [(g, self.fits[g][0]) for g in sorted(self.gamma_grid, reverse=True)]

    def rows(self):
        return [(g, n, r) for g in self.gamma_grid for n, r in self.samples[g]]

    def to_csv(self, path):
        return write_csv(path, ["gamma", "n", "r_hat"], self.rows())

    def to_dict(self):
        return {
            "estimate": self.estimate,
            "delta": self.delta,
            "gamma_grid": list(self.gamma_grid),
            "n_range": list(self.n_range),
            "exponent": self.exponent,
            "invariance_defect": self.invariance_defect,
            "fits": [{"gamma": g, "slope": s, "intercept": c, "residual": r, "window": self.windows[g]}
                     for g, (s, c, r) in self.fits.items()],
            "notes": list(self.notes),
        }


def katok_entropy_estimate(map_, cloud, mu, n_range, gamma_grid, delta=DEFAULT_DELTA, exponent=None):
    """Growth rate of log r_hat in n per gamma; the estimate is the rate at the smallest gamma.

    ``exponent`` (the measure's expansion exponent) sets the saturation window;
    when omitted it is estimated on the gamma grid itself.
    """
    gammas = sorted((float(g) for g in gamma_grid), reverse=True)
    ns = sorted({int(n) for n in n_range})
    if not gammas or not ns or ns[0] < 1:
        raise PreconditionError("need a nonempty gamma grid and n values >= 1")
    for g in gammas:
        _check(map_, cloud, mu, g, delta)
    if exponent is None:
        exponent = measure_expansion_profile(map_, cloud, mu, sorted(gammas), floor_factor=2.0).estimate()
    notes = []
    try:
        defect = invariance_defect(map_, mu)
    except StructuralError:
        defect = math.nan
        notes.append("pushforward leaves the cloud; invariance not checkable")
    weights = mu.dense()
    orbit = cloud_orbit(map_, cloud.coords, ns[-1])
    samples, fits, windows = {}, {}, {}
    for g in gammas:
        masses = ball_masses(cloud, orbit, g, weights, ns)
        samples[g] = []
        for row, n in enumerate(ns):
            balls = BowenBalls(cloud, orbit[:n], g)
            samples[g].append((n, len(greedy_cover(balls, weights, delta, masses=masses[row]))))
        bound = saturation_bound(g, cloud, exponent)
        window = [n for n in ns if n <= bound]
        if len(window) < 2:
            raise PreconditionError(
                f"resolution too coarse for requested gamma={g:g}: saturation at n <= {bound:.3g}")
        windows[g] = window
        r = dict(samples[g])
        fits[g] = fit_line(window, np.log([r[n] for n in window]))
    return EntropyReport(samples=samples, fits=fits, windows=windows, estimate=fits[gammas[-1]][0],
                         gamma_grid=gammas, n_range=ns, delta=delta, exponent=exponent,
                         invariance_defect=defect, notes=notes)


def block_entropy(cloud, mu, n):
    """(n, H_n, H_n / n) for the join of the one-symbol partition over n shifts.

    The atoms of that join are the length-n cylinders, so H_n is the Shannon
    entropy (nats, 0 log 0 = 0) of the word measure's first-n-symbol marginal.
    """
    space = cloud.space
    if not isinstance(space, SymbolSpace):
        raise StructuralError("block entropy needs a symbol space")
    if mu.cloud is not cloud:
        raise StructuralError("measure does not live on this cloud")
    if not 1 <= n <= space.L:
        raise PreconditionError(f"block length n={n} must lie in [1, {space.L}]")
    words = cloud.coords[mu.indices, :n].astype(np.int64)
    codes = words @ (space.m ** np.arange(n - 1, -1, -1, dtype=np.int64))
    acc = {}
    for c, w in zip(codes.tolist(), mu.weights.tolist()):
        acc.setdefault(c, []).append(w)
    probs = [math.fsum(ws) for ws in acc.values()]
    h = -math.fsum(p * math.log(p) for p in probs if p > 0)
    h = max(h, 0.0)
    return n, h, h / n


@dataclass
class BlockEntropyReport:
    entries: list      # [(n, H_n, H_n / n), ...]

    @property
    def limit(self):
        return self.entries[-1][2]

    @property
    def trend(self):
        rates = [e[2] for e in self.entries]
        return [b - a for a, b in zip(rates, rates[1:])]

    def to_csv(self, path):
        return write_csv(path, ["n", "H_n", "H_n_over_n"], self.entries)

    def to_dict(self):
        return {"limit": self.limit, "trend": self.trend,
                "entries": [{"n": n, "H_n": h, "H_n_over_n": r} for n, h, r in self.entries]}


def block_entropy_report(cloud, mu, n_values):
    return BlockEntropyReport([block_entropy(cloud, mu, n) for n in sorted(set(n_values))])
