import math

import numpy as np
from hypothesis import given, strategies as st

from expanse.covering import BowenBalls, ball_masses, greedy_cover
from expanse.maps import LookupTable, Shift, TimesM, cloud_orbit
from expanse.spaces import Circle, PointCloud, Product, SymbolSpace, UnitInterval


def member_matrix(cloud, orbit, radius):
    out = np.ones((len(cloud), len(cloud)), dtype=bool)
    for step in orbit:
        out &= cloud.space.dist(step[:, None, :], step[None, :, :]) < radius
    return out


def reference_greedy(members, weights, delta):
    """Eager greedy: rescan every gain each step, lowest index on ties."""
    uncovered = weights > 0
    chosen, total = [], 0.0
    while total < 1 - delta - 1e-12:
        gains = [round(math.fsum(weights[row & uncovered].tolist()), 12) for row in members]
        s = int(np.argmax(gains))
        chosen.append(s)
        new = members[s] & uncovered
        total += math.fsum(weights[new].tolist())
        uncovered &= ~new
    return chosen


@st.composite
def systems(draw):
    kind = draw(st.sampled_from(["interval", "circle", "symbol", "product", "times2"]))
    n = draw(st.integers(1, 45))
    rng = np.random.default_rng(draw(st.integers(0, 2 ** 32 - 1)))
    if kind == "symbol":
        cloud = PointCloud(SymbolSpace(2, 7), rng.integers(0, 2, size=(n, 7)).astype(float))
    elif kind == "product":
        cloud = PointCloud(Product((Circle(), UnitInterval())), rng.random((n, 2)))
    else:
        cloud = PointCloud(UnitInterval() if kind == "interval" else Circle(), rng.random((n, 1)))
    m = len(cloud)
    if kind == "times2":
        map_ = TimesM(2)
    elif kind == "symbol" and draw(st.booleans()):
        map_ = Shift(cloud.space)
    else:
        map_ = LookupTable(cloud, tuple(rng.integers(0, m, size=m).tolist()))
    weights = rng.random(m) * (rng.random(m) < 0.8)
    if weights.sum() == 0:
        weights[0] = 1.0
    weights = weights / weights.sum()
    radius = draw(st.sampled_from([0.05, 0.1, 0.2, 0.3, 0.6]))
    levels = sorted(set(draw(st.lists(st.integers(1, 4), min_size=1, max_size=3))))
    return cloud, map_, weights, radius, levels


@given(systems())
def test_ball_masses_match_brute_force(system):
    cloud, map_, w, r, levels = system
    orbit = cloud_orbit(map_, cloud.coords, max(levels))
    got = ball_masses(cloud, orbit, r, w, levels)
    for row, n in enumerate(levels):
        assert np.allclose(got[row], member_matrix(cloud, orbit[:n], r) @ w, atol=1e-12)


@given(systems())
def test_members_match_brute_force(system):
    cloud, map_, w, r, levels = system
    balls = BowenBalls.for_map(map_, cloud, max(levels), r)
    M = member_matrix(cloud, balls.orbit, r)
    c, y = balls.members(np.arange(len(cloud)))
    got = np.zeros_like(M)
    got[c, y] = True
    assert np.array_equal(got, M)
    assert len(c) == M.sum()


@given(systems(), st.sampled_from([0.0, 0.05, 0.3]))
def test_lazy_greedy_matches_eager_reference(system, delta):
    cloud, map_, w, r, levels = system
    balls = BowenBalls.for_map(map_, cloud, max(levels), r)
    M = member_matrix(cloud, balls.orbit, r)
    chosen = greedy_cover(balls, w, delta)
    assert chosen == reference_greedy(M, w, delta)
    covered = M[chosen].any(axis=0)
    assert math.fsum(w[covered].tolist()) >= 1 - delta - 1e-12


def test_greedy_on_circle_grid_is_optimal_for_uniform():
    n = 64
    cloud = PointCloud(Circle(), (np.arange(n) / n)[:, None])
    balls = BowenBalls.ordinary(cloud, 0.1)
    # each open ball of radius 0.1 holds 13 consecutive points
    assert len(greedy_cover(balls, np.full(n, 1 / n), 0.0)) == math.ceil(64 / 13)
