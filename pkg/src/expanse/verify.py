"""Theorem-level checks with quantitative margins.

Every checker returns a TheoremReport whose verdict is "pass" exactly when
margin >= -tolerance, "fail" otherwise, and "not-applicable" when the
hypotheses cannot be met on the given input (margin is then nan).
"""
import math
from dataclasses import dataclass, field

import numpy as np

from .capacity import capacity_estimate, fit_line
from .entropy import DEFAULT_DELTA, katok_entropy_estimate
from .errors import PreconditionError, StructuralError
from .exponents import (
    FLOOR_FACTOR,
    check_eps_grid,
    map_expansion_profile,
    measure_expansion_profile,
    positive_exponent_certificate,
    witness_measure,
)
from .maps import cloud_orbit
from .measures import convex_combine, invariance_defect, uniform
from .report import dumps
from .seeding import stream
from .spaces import iter_pairs

ATTAINMENT_TOL = 0.02
WITNESS_OFFSET = 0.01
RATE_TOL = 0.1
ENTROPY_TOL = 0.1
INVARIANCE_TOL = 1e-9
ERGODIC = "ergodicity is assumed, not verified"


@dataclass
class TheoremReport:
    theorem: str
    verdict: str
    margin: float
    tolerance: float
    inputs: dict = field(default_factory=dict)
    quantities: dict = field(default_factory=dict)
    caveats: list = field(default_factory=list)

    @property
    def passed(self):
        return self.verdict == "pass"

    def to_dict(self):
        return {"theorem": self.theorem, "verdict": self.verdict, "margin": self.margin,
                "tolerance": self.tolerance, "inputs": self.inputs,
                "quantities": self.quantities, "caveats": list(self.caveats)}

    def to_json(self):
        return dumps(self.to_dict())


def _report(theorem, margin, tolerance, inputs, quantities, caveats=()):
    verdict = "pass" if margin >= -tolerance else "fail"
    return TheoremReport(theorem, verdict, float(margin), float(tolerance), inputs, quantities, list(caveats))


def _not_applicable(theorem, inputs, quantities, caveats):
    return TheoremReport(theorem, "not-applicable", math.nan, 0.0, inputs, quantities, list(caveats))


def _diff(a, b):
    # a - b with inf - inf read as 0: equal profile values never count as a gap
    return 0.0 if a == b else a - b


def _inputs(map_, cloud, **extra):
    out = {"map": map_.describe(), "space": cloud.space.describe(), "cloud_size": len(cloud),
           "resolution": cloud.resolution}
    out.update(extra)
    return out


def _same_cloud(cloud, measures):
    for mu in measures:
        if mu.cloud is not cloud:
            raise StructuralError("all measures must live on the checked cloud")


def _grid(eps_grid):
    return [float(e) for e in np.atleast_1d(eps_grid)]


def check_theorem_A(map_, cloud, family, eps_grid, tolerance=ATTAINMENT_TOL,
                    floor_factor=FLOOR_FACTOR, add_witness=True):
    """E(T) against the minimum of E_mu(T) over a measure family.

    The family is completed with the full-support uniform measure (if missing)
    and, unless ``add_witness`` is False, with the witness measure built at
    lambda = E(T) + 0.01. margin_lower = min E_mu - E(T) must be >= 0 exactly;
    margin_attain = tolerance - (min E_mu - E(T)) checks that the minimum is
    attained. The reported margin is the smaller of the two.
    """
    family = list(family)
    _same_cloud(cloud, family)
    caveats = []
    profile = map_expansion_profile(map_, cloud, eps_grid, floor_factor)
    e_map = profile.estimate()
    if not any(len(mu) == len(cloud) for mu in family):
        family.insert(0, uniform(cloud))
        caveats.append("full-support uniform measure added to the family")
    if add_witness:
        lam = e_map + WITNESS_OFFSET
        try:
            family.append(witness_measure(map_, cloud, lam, eps_grid, floor_factor=floor_factor, profile=profile))
        except PreconditionError as exc:
            caveats.append(f"no witness measure: {exc}")
    if len(family) < 2:
        raise PreconditionError("Theorem A check needs at least two measures")
    values = [measure_expansion_profile(map_, cloud, mu, eps_grid, floor_factor).estimate() for mu in family]
    best = min(values)
    gap = _diff(best, e_map)
    lower, attain = gap, tolerance - gap
    caveats.append(f"max atom weight over the family: {max(mu.max_atom for mu in family):.3g}")
    caveats.append(f"resolution floor: {profile.resolution_floor:.3g}")
    quantities = {
        "E_map": e_map,
        "E_mu": values,
        "min_E_mu": best,
        "argmin": int(np.argmin(values)),
        "margin_lower": lower,
        "margin_attain": attain,
    }
    inputs = _inputs(map_, cloud, eps_grid=_grid(eps_grid),
                     measures=[{"atoms": len(mu), "max_atom": mu.max_atom} for mu in family])
    return _report("A", min(lower, attain), 0.0, inputs, quantities, caveats)


def check_convex_law(map_, cloud, mu, nu, t, eps_grid, floor_factor=FLOOR_FACTOR):
    """The profile of t mu + (1 - t) nu equals the pointwise min of the two profiles."""
    if not 0 < t < 1:
        raise PreconditionError("convex law needs 0 < t < 1")
    _same_cloud(cloud, [mu, nu])
    mix = convex_combine([(t, mu), (1 - t, nu)])
    pm = measure_expansion_profile(map_, cloud, mu, eps_grid, floor_factor)
    pn = measure_expansion_profile(map_, cloud, nu, eps_grid, floor_factor)
    px = measure_expansion_profile(map_, cloud, mix, eps_grid, floor_factor)
    expected = np.minimum(pm.lambda_hat, pn.lambda_hat)
    gaps = [abs(_diff(a, b)) for a, b in zip(px.lambda_hat.tolist(), expected.tolist())]
    margin = -max(gaps)
    quantities = {"lambda_mix": px.lambda_hat.tolist(), "lambda_min": expected.tolist(),
                  "E_mix": px.estimate(), "E_mu": pm.estimate(), "E_nu": pn.estimate()}
    inputs = _inputs(map_, cloud, eps_grid=_grid(eps_grid), t=float(t))
    return _report("law-convex", margin, 0.0, inputs, quantities)


def check_monotone_law(map_, cloud, mu, nu, eps_grid, floor_factor=FLOOR_FACTOR):
    """supp(mu) inside supp(nu) forces lambda_mu >= lambda_nu at every scale."""
    _same_cloud(cloud, [mu, nu])
    if not np.all(np.isin(mu.indices, nu.indices)):
        raise PreconditionError("monotone law needs supp(mu) inside supp(nu)")
    pm = measure_expansion_profile(map_, cloud, mu, eps_grid, floor_factor)
    pn = measure_expansion_profile(map_, cloud, nu, eps_grid, floor_factor)
    diffs = [_diff(a, b) for a, b in zip(pm.lambda_hat.tolist(), pn.lambda_hat.tolist())]
    quantities = {"lambda_mu": pm.lambda_hat.tolist(), "lambda_nu": pn.lambda_hat.tolist(),
                  "differences": diffs}
    inputs = _inputs(map_, cloud, eps_grid=_grid(eps_grid), atoms_mu=len(mu), atoms_nu=len(nu))
    return _report("law-monotone", min(diffs), 0.0, inputs, quantities)


def check_isometry_law(map_, cloud, eps_grid, floor_factor=FLOOR_FACTOR, tolerance=1e-9):
    """A distance-preserving map has exponent 0."""
    e_map = map_expansion_profile(map_, cloud, eps_grid, floor_factor).estimate()
    margin = -abs(e_map) if math.isfinite(e_map) else -math.inf
    return _report("law-isometry", margin, tolerance, _inputs(map_, cloud, eps_grid=_grid(eps_grid)),
                   {"E_map": e_map})


@dataclass
class PhiMassCurve:
    x: object
    eps: float
    entries: list      # [(n, mass), ...] for n = 1..n_max

    def masses(self):
        return np.array([m for _, m in self.entries])

    def to_dict(self):
        return {"x": self.x, "eps": self.eps, "entries": [{"n": n, "mass": m} for n, m in self.entries]}


def _phi_masses(map_, cloud, mu, centers, eps, n_max):
    """Mass of the truncated closed shadowing set for each center index; shape (len(centers), n_max)."""
    space = cloud.space
    atoms = cloud_orbit(map_, cloud.coords[mu.indices], n_max)
    heads = cloud_orbit(map_, cloud.coords[np.asarray(centers, dtype=np.int64)], n_max)
    out = np.empty((len(centers), n_max))
    for row in range(len(centers)):
        alive = np.ones(len(mu), dtype=bool)
        for i in range(n_max):
            alive &= space.dist(heads[i, row][None, :], atoms[i]) <= eps
            out[row, i] = math.fsum(mu.weights[alive].tolist())
    return out


def phi_mass_curve(map_, cloud, mu, x, eps, n_max):
    """mu-mass of {y : d(T^i x, T^i y) <= eps for 0 <= i < n}, n = 1..n_max.

    ``x`` is a cloud index or a point of the cloud.
    """
    if mu.cloud is not cloud:
        raise StructuralError("measure does not live on this cloud")
    if eps < 2 * cloud.resolution:
        raise PreconditionError(f"eps={eps:g} is below the scale floor {2 * cloud.resolution:g} (2 x resolution)")
    if n_max < 1:
        raise PreconditionError("n_max must be >= 1")
    if isinstance(x, (int, np.integer)):
        idx = int(x)
        if not 0 <= idx < len(cloud):
            raise StructuralError(f"index {idx} out of range")
    else:
        idx = int(cloud.locate(cloud.space.coerce(x)[None, :])[0])
    masses = _phi_masses(map_, cloud, mu, [idx], eps, n_max)[0]
    return PhiMassCurve(cloud.space.to_point(cloud.coords[idx]), float(eps),
                        [(n + 1, float(m)) for n, m in enumerate(masses)])


def decay_rate(masses, floor):
    """-slope of log mass over the levels still at least 4 x floor (nan with fewer than two)."""
    masses = np.asarray(masses, dtype=float)
    n = np.arange(1, len(masses) + 1)
    keep = masses >= 4 * floor
    if keep.sum() < 2:
        return math.nan
    return -fit_line(n[keep], np.log(masses[keep]))[0]


def check_theorem_B(map_, cloud, mu, eps_grid, n_max, x_sample_count, seed=0,
                    floor_factor=FLOOR_FACTOR, rate_tol=RATE_TOL):
    """Shadowing sets at half the certificate scale must lose their mass geometrically.

    Passes when every sampled curve is below the nonatomicity floor
    (2 x max atom weight) at n_max and every decay rate is at least
    log k - rate_tol. margin = min(floor clearance, rate clearance).
    """
    if mu.cloud is not cloud:
        raise StructuralError("measure does not live on this cloud")
    inputs = _inputs(map_, cloud, eps_grid=_grid(eps_grid), n_max=int(n_max),
                     x_sample_count=int(x_sample_count), seed=int(seed), atoms=len(mu))
    caveats = [f"max atom weight: {mu.max_atom:.3g}"]
    try:
        defect = invariance_defect(map_, mu)
    except StructuralError:
        defect = math.nan
        caveats.append("pushforward leaves the cloud; invariance not checkable")
    if defect > INVARIANCE_TOL:
        raise PreconditionError(f"measure is not invariant: defect {defect:.3g} > {INVARIANCE_TOL:g}")
    cert = positive_exponent_certificate(map_, cloud, mu, eps_grid, floor_factor)
    quantities = {"invariance_defect": defect, "certificate": None if cert is None else cert.to_dict()}
    if cert is None:
        caveats.append("no positive-exponent certificate on this grid")
        return _not_applicable("B", inputs, quantities, caveats)
    eps = cert.eps / 2
    floor = 2 * mu.max_atom
    rng = stream(seed, "check_theorem_B")
    count = min(int(x_sample_count), len(mu))
    centers = np.sort(rng.choice(mu.indices, size=count, replace=False))
    curves = _phi_masses(map_, cloud, mu, centers, eps, int(n_max))
    rates = [decay_rate(c, floor) for c in curves]
    hits = [int(np.argmax(c < floor)) + 1 if (c < floor).any() else None for c in curves]
    floor_margin = float(floor - curves[:, -1].max())
    target = math.log(cert.k) - rate_tol
    rate_margin = min((r - target if math.isfinite(r) else -math.inf) for r in rates)
    quantities.update({
        "phi_eps": eps,
        "nonatomicity_floor": floor,
        "centers": centers.tolist(),
        "decay_rates": rates,
        "floor_hit_n": hits,
        "floor_margin": floor_margin,
        "rate_margin": rate_margin,
        "curves": curves.tolist(),
    })
    caveats.append(f"resolution floor: {floor_factor * cloud.resolution:.3g}")
    return _report("B", min(floor_margin, rate_margin), 0.0, inputs, quantities, caveats)


def check_theorem_C(map_, cloud, mu, eps_grid, beta_grid, delta_grid, n_range, gamma_grid,
                    delta=DEFAULT_DELTA, tolerance=ENTROPY_TOL, floor_factor=FLOOR_FACTOR):
    """h_mu >= capacity x max(E_mu, 0), with ``tolerance`` nats of estimator slack.

    margin = h - dim * max(E_mu, 0) + tolerance; the verdict needs margin >= 0.
    A nonpositive exponent makes the check vacuous.
    """
    if mu.cloud is not cloud:
        raise StructuralError("measure does not live on this cloud")
    if not map_.continuous:
        raise PreconditionError("Theorem C needs a continuous map")
    check_eps_grid(cloud, eps_grid, floor_factor)
    caveats = [ERGODIC, f"max atom weight: {mu.max_atom:.3g}"]
    try:
        defect = invariance_defect(map_, mu)
    except StructuralError:
        defect = math.nan
        caveats.append("pushforward leaves the cloud; invariance not checkable")
    if defect > INVARIANCE_TOL:
        raise PreconditionError(f"measure is not invariant: defect {defect:.3g} > {INVARIANCE_TOL:g}")
    e_mu = measure_expansion_profile(map_, cloud, mu, eps_grid, floor_factor).estimate()
    if not math.isfinite(e_mu):
        raise PreconditionError(f"measure exponent must be finite, got {e_mu}")
    cap = capacity_estimate(cloud, mu, beta_grid, delta_grid)
    ent = katok_entropy_estimate(map_, cloud, mu, n_range, gamma_grid, delta=delta, exponent=e_mu)
    h, dim = ent.estimate, cap.estimate
    rhs = dim * max(e_mu, 0.0)
    if e_mu <= 0:
        caveats.append("nonpositive right-hand side: the inequality holds trivially")
    caveats.append(f"resolution floor: {floor_factor * cloud.resolution:.3g}")
    quantities = {"entropy": h, "capacity": dim, "E_mu": e_mu, "rhs": rhs,
                  "invariance_defect": defect, "entropy_report": ent.to_dict(),
                  "capacity_report": cap.to_dict()}
    inputs = _inputs(map_, cloud, eps_grid=_grid(eps_grid), beta_grid=_grid(beta_grid),
                     delta_grid=_grid(delta_grid), gamma_grid=_grid(gamma_grid),
                     n_range=[int(n) for n in n_range], delta=float(delta), tolerance=float(tolerance))
    margin = h - rhs + tolerance
    if e_mu <= 0:
        margin = max(margin, 0.0)
    return _report("C", margin, 0.0, inputs, quantities, caveats)


def check_contraction_chain(map_, cloud, certificate, n, gamma):
    """Pairs that stay gamma-close for n steps while expanding by k each step started k^-(n-1) gamma close.

    Scans every unordered cloud pair with 0 < d < gamma.
    """
    if not 0 < gamma < certificate.eps:
        raise PreconditionError(f"contraction chain needs 0 < gamma < eps = {certificate.eps:g}")
    if n < 1:
        raise PreconditionError("n must be >= 1")
    space = cloud.space
    k = certificate.k
    bound = k ** (-(n - 1)) * gamma
    orbit = cloud_orbit(map_, cloud.coords, n + 1)
    tested = violations = 0
    worst = math.inf
    for i, j, d in iter_pairs(cloud, gamma):
        alive = np.ones(len(i), dtype=bool)
        prev = d
        for t in range(1, n + 1):
            cur = space.dist(orbit[t][i], orbit[t][j])
            alive &= cur >= k * prev
            if t < n:
                alive &= cur < gamma
            prev = cur
        if alive.any():
            gap = bound - d[alive]
            tested += int(alive.sum())
            violations += int((gap < 0).sum())
            worst = min(worst, float(gap.min()))
    caveats = [] if tested else ["no pair meets the expansion chain; the check is vacuous"]
    margin = worst if tested else 0.0
    quantities = {"k": k, "bound": bound, "pairs_tested": tested, "violations": violations,
                  "min_gap": worst if tested else None}
    inputs = _inputs(map_, cloud, n=int(n), gamma=float(gamma), certificate=certificate.to_dict())
    return _report("contraction-chain", margin, 0.0, inputs, quantities, caveats)
