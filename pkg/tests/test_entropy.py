import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from expanse.capacity import greedy_cover_count
from expanse.entropy import (block_entropy, block_entropy_report, katok_entropy_estimate, saturation_bound,
                             spanning_count)
from expanse.errors import PreconditionError, StructuralError
from expanse.maps import ConstantMap, Rotation, TimesM
from expanse.measures import sample_measure, uniform
from expanse.spaces import Circle, SymbolSpace, grid_cloud


def binary_entropy(p):
    return -sum(q * math.log(q) for q in (p, 1 - p) if q > 0)


def test_n1_is_the_plain_cover_count():
    c = grid_cloud(Circle(), 512)
    mu = uniform(c)
    assert spanning_count(TimesM(3), c, mu, 1, 0.05, 0.02) == greedy_cover_count(c, mu, 0.05, 0.02)


def test_rotation_count_is_constant_in_n():
    c = grid_cloud(Circle(), 1000)
    counts = [spanning_count(Rotation(0.137), c, uniform(c), n, 0.0505) for n in (1, 3, 7)]
    assert len(set(counts)) == 1


def test_doubling_count_roughly_doubles():
    c = grid_cloud(Circle(), 4096)
    mu = uniform(c)
    r = [spanning_count(TimesM(2), c, mu, n, 0.1, 0.05) for n in range(2, 9)]
    ratios = [b / a for a, b in zip(r, r[1:])]
    assert all(1.7 <= q <= 2.3 for q in ratios), ratios


def test_counts_nondecreasing_in_n():
    c = grid_cloud(Circle(), 2049)
    r = [spanning_count(TimesM(3), c, uniform(c), n, 0.08) for n in range(1, 6)]
    assert r == sorted(r)


def test_katok_estimate_for_doubling():
    c = grid_cloud(Circle(), 8191)
    rep = katok_entropy_estimate(TimesM(2), c, uniform(c), range(1, 9), [0.1, 0.05], delta=0.05)
    assert rep.exponent == pytest.approx(math.log(2))
    assert rep.invariance_defect == 0
    assert rep.estimate == pytest.approx(math.log(2), abs=0.1)
    assert max(rep.windows[0.05]) <= saturation_bound(0.05, c, math.log(2))


def test_constant_map_has_zero_entropy():
    c = grid_cloud(Circle(), 500)
    rep = katok_entropy_estimate(ConstantMap(Circle(), 0.25), c, uniform(c), range(1, 6), [0.1, 0.05])
    assert rep.estimate == pytest.approx(0, abs=1e-12)


def test_resolution_too_coarse():
    c = grid_cloud(Circle(), 64)
    with pytest.raises(PreconditionError, match="resolution too coarse"):
        katok_entropy_estimate(TimesM(2), c, uniform(c), range(3, 7), [0.05])
    with pytest.raises(PreconditionError, match="scale floor"):
        spanning_count(TimesM(2), c, uniform(c), 2, 0.01)


@settings(max_examples=30)
@given(st.floats(0.05, 0.95), st.integers(1, 6))
def test_block_entropy_of_bernoulli_is_linear(p, n):
    cloud, mu = sample_measure(SymbolSpace(2, 6), "bernoulli", p=p)
    m, h, rate = block_entropy(cloud, mu, n)
    assert m == n
    assert h == pytest.approx(n * binary_entropy(p), rel=1e-9)
    assert rate == pytest.approx(binary_entropy(p), rel=1e-9)


def test_block_entropy_degenerate_and_errors():
    cloud, mu = sample_measure(SymbolSpace(2, 5), "bernoulli", p=1.0)
    assert block_entropy(cloud, mu, 3)[1] == 0
    cloud, mu = sample_measure(SymbolSpace(2, 5), "bernoulli", p=0.5)
    rep = block_entropy_report(cloud, mu, [1, 2, 5])
    assert rep.limit == pytest.approx(math.log(2))
    assert np.allclose(rep.trend, 0)
    with pytest.raises(PreconditionError):
        block_entropy(cloud, mu, 6)
    c = grid_cloud(Circle(), 8)
    with pytest.raises(StructuralError):
        block_entropy(c, uniform(c), 1)
