"""Ball-covering counts N_mu(X, beta, delta) and the upper-capacity estimator.

N_mu(X, beta, delta) is the least number of open beta-balls covering mass at
least 1 - delta. We use cloud-centered balls and the greedy cover, which only
over-count by a bounded factor; the factor drops out of the log-log slope.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from .covering import BowenBalls, greedy_cover
from .errors import PreconditionError, StructuralError
from .report import write_csv

SCALE_FLOOR_FACTOR = 2.0


def fit_line(x, y):
    """Least-squares line; returns (slope, intercept, rms residual)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) < 2:
        raise PreconditionError("need at least two points for a slope")
    slope, intercept = np.polyfit(x, y, 1)
    res = y - (slope * x + intercept)
    return float(slope), float(intercept), float(np.sqrt(np.mean(res ** 2)))


def mass_floor(mu):
    # A single atom never saturates: every ball around it already holds all the mass.
    return mu.max_atom if len(mu) > 1 else 0.0


def _check_measure(cloud, mu):
    if mu.cloud is not cloud:
        raise StructuralError("measure does not live on this cloud")


def greedy_cover_count(cloud, mu, beta, delta):
    """Greedy upper bound on the number of open beta-balls covering mass >= 1 - delta."""
    _check_measure(cloud, mu)
    if not beta > 0:
        raise PreconditionError("beta must be positive")
    if not 0 <= delta < 1:
        raise PreconditionError("delta must lie in [0, 1)")
    return len(greedy_cover(BowenBalls.ordinary(cloud, beta), mu.dense(), delta))


@dataclass
class CapacityReport:
    samples: dict          # delta -> [(beta, N_hat), ...], beta descending
    fits: dict             # delta -> (slope, intercept, residual)
    estimate: float
    beta_range: tuple
    delta_grid: list
    scale_floor: float
    mass_floor: float
    skipped_betas: list = field(default_factory=list)

    def rows(self):
        return [(d, b, n) for d in self.delta_grid for b, n in self.samples[d]]

    def to_csv(self, path):
        return write_csv(path, ["delta", "beta", "N_hat"], self.rows())

    def to_dict(self):
        return {
            "estimate": self.estimate,
            "beta_range": list(self.beta_range),
            "delta_grid": list(self.delta_grid),
            "scale_floor": self.scale_floor,
            "mass_floor": self.mass_floor,
            "skipped_betas": list(self.skipped_betas),
            "fits": [{"delta": d, "slope": s, "intercept": c, "residual": r}
                     for d, (s, c, r) in self.fits.items()],
        }


def _geometric(betas):
    betas = np.sort(np.asarray(betas, dtype=float))[::-1]
    if len(betas) >= 2:
        ratios = betas[1:] / betas[:-1]
        if np.any(ratios >= 1) or np.ptp(ratios) > 1e-6 * ratios.mean():
            raise PreconditionError("beta grid must be geometric with ratio < 1")
    return betas


def capacity_estimate(cloud, mu, beta_grid, delta_grid):
    """Slope of log N_hat against -log beta, per delta; the estimate is the slope at the smallest delta.

    Betas under the scale floor (2 x resolution) are dropped; deltas under the
    mass floor (largest atom) are rejected.
    """
    _check_measure(cloud, mu)
    betas = _geometric(beta_grid)
    if np.any(betas <= 0):
        raise PreconditionError("beta grid must be positive")
    scale_floor = SCALE_FLOOR_FACTOR * cloud.resolution
    keep = betas >= scale_floor
    skipped = betas[~keep].tolist()
    betas = betas[keep]
    if len(betas) < 3:
        raise PreconditionError(
            f"insufficient scale range: {len(betas)} beta values above the scale floor {scale_floor:g}")
    deltas = sorted((float(d) for d in delta_grid), reverse=True)
    floor = mass_floor(mu)
    if not deltas or any(not 0 <= d < 1 for d in deltas):
        raise PreconditionError("delta grid must be nonempty with values in [0, 1)")
    if deltas[-1] < floor:
        raise PreconditionError(f"delta={deltas[-1]:g} is below the mass floor {floor:g} (largest atom)")
    weights = mu.dense()
    samples = {d: [] for d in deltas}
    for beta in betas:
        balls = BowenBalls.ordinary(cloud, beta)
        masses = balls.masses(weights)
        for d in deltas:
            samples[d].append((float(beta), len(greedy_cover(balls, weights, d, masses=masses))))
    fits = {}
    for d in deltas:
        b, n = zip(*samples[d])
        fits[d] = fit_line(-np.log(b), np.log(n))
    return CapacityReport(samples=samples, fits=fits, estimate=fits[deltas[-1]][0],
                          beta_range=(float(betas.min()), float(betas.max())), delta_grid=deltas,
                          scale_floor=scale_floor, mass_floor=floor, skipped_betas=skipped)
