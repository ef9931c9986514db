import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from expanse.errors import PreconditionError, StructuralError
from expanse.maps import Rotation, Shift, TimesM
from expanse.measures import (AtomicMeasure, convex_combine, dirac, invariance_defect, mass_of, pushforward,
                              read_measure_csv, restrict, sample_measure, uniform, write_measure_csv)
from expanse.spaces import Circle, Product, SymbolSpace, UnitInterval, grid_cloud

weights = st.lists(st.floats(0.01, 10), min_size=1, max_size=20)


@given(weights)
def test_weights_normalize(ws):
    c = grid_cloud(Circle(), 32)
    mu = AtomicMeasure(c, range(len(ws)), ws)
    assert math.fsum(mu.weights.tolist()) == pytest.approx(1.0, abs=1e-15)
    assert mu.max_atom == pytest.approx(max(ws) / sum(ws))


def test_measure_validation():
    c = grid_cloud(Circle(), 4)
    for idx, w in (([0, 0], [1, 1]), ([0], [0.0]), ([5], [1]), ([], []), ([0], [math.inf])):
        with pytest.raises(StructuralError):
            AtomicMeasure(c, idx, w)
    with pytest.raises(StructuralError):
        dirac(c, 4)


def test_atoms_sorted_and_dense():
    c = grid_cloud(Circle(), 5)
    mu = AtomicMeasure(c, [3, 1], [1, 3])
    assert mu.atoms == [(1, 0.75), (3, 0.25)]
    assert mu.dense().tolist() == [0, 0.75, 0, 0.25, 0]


@given(weights, weights, st.floats(0, 1))
def test_convex_combination_weights(a, b, t):
    c = grid_cloud(Circle(), 64)
    mu = AtomicMeasure(c, range(len(a)), a)
    nu = AtomicMeasure(c, range(10, 10 + len(b)), b)
    if 0 < t < 1:
        mix = convex_combine([(t, mu), (1 - t, nu)])
        assert np.allclose(mix.dense(), t * mu.dense() + (1 - t) * nu.dense())
        assert set(mix.indices.tolist()) == set(mu.indices.tolist()) | set(nu.indices.tolist())


def test_convex_combination_errors():
    c = grid_cloud(Circle(), 8)
    mu = uniform(c)
    with pytest.raises(PreconditionError):
        convex_combine([(0.5, mu), (0.6, mu)])
    with pytest.raises(StructuralError):
        convex_combine([(0.5, mu), (0.5, uniform(grid_cloud(Circle(), 8)))])


def test_restrict_and_mass_of():
    c = grid_cloud(Circle(), 8)
    mu = uniform(c)
    half = restrict(mu, [0, 1, 2, 3])
    assert half.atoms == [(i, 0.25) for i in range(4)]
    assert mass_of(mu, [0, 1, 2]) == pytest.approx(3 / 8)
    with pytest.raises(PreconditionError):
        restrict(dirac(c, 0), [1])


def test_pushforward_and_invariance():
    odd = grid_cloud(Circle(), 255)
    assert invariance_defect(TimesM(2), uniform(odd)) == 0
    even = grid_cloud(Circle(), 256)
    assert invariance_defect(TimesM(2), uniform(even)) == pytest.approx(0.5)
    push = pushforward(TimesM(2), dirac(even, 3))
    assert push.atoms == [(6, 1.0)]
    assert invariance_defect(Rotation(5 / 256), uniform(even)) == 0
    with pytest.raises(StructuralError):
        pushforward(Rotation(0.001), uniform(even))


@given(st.floats(0.05, 0.95))
def test_bernoulli_weights_are_products(p):
    cloud, mu = sample_measure(SymbolSpace(2, 4), "bernoulli", p=p)
    w = mu.dense()
    for i, word in enumerate(cloud.coords.astype(int)):
        zeros = int((word == 0).sum())
        assert w[i] == pytest.approx(p ** zeros * (1 - p) ** (4 - zeros), rel=1e-12)
    assert invariance_defect(Shift(SymbolSpace(2, 4), "cyclic"), mu) == pytest.approx(0, abs=1e-15)


def test_bernoulli_degenerate_and_multisymbol():
    cloud, mu = sample_measure(SymbolSpace(2, 5), "bernoulli", p=1.0)
    assert len(mu) == 1 and cloud.space.to_point(cloud.coords[mu.indices[0]]) == (0,) * 5
    cloud, mu = sample_measure(SymbolSpace(3, 3), "bernoulli", p=[0.2, 0.3, 0.5])
    assert len(mu) == 27
    with pytest.raises(StructuralError):
        sample_measure(SymbolSpace(3, 3), "bernoulli", p=0.2)


def test_cantor_measure():
    cloud, mu = sample_measure(UnitInterval(), "cantor", depth=3)
    assert len(mu) == 8
    assert sorted(np.round(cloud.coords[:, 0] * 27).astype(int).tolist()) == [0, 2, 6, 8, 18, 20, 24, 26]
    assert cloud.resolution == pytest.approx(1 / 27)


def test_uniform_iid_is_seeded():
    a, _ = sample_measure(Product((Circle(), UnitInterval())), "uniform-iid", n=50, seed=4)
    b, _ = sample_measure(Product((Circle(), UnitInterval())), "uniform-iid", n=50, seed=4)
    c, _ = sample_measure(Product((Circle(), UnitInterval())), "uniform-iid", n=50, seed=5)
    assert np.array_equal(a.coords, b.coords) and not np.array_equal(a.coords, c.coords)
    with pytest.raises(StructuralError):
        sample_measure(Circle(), "gaussian", n=3)


@pytest.mark.parametrize("space, gen, kw", [
    (Circle(), "uniform-iid", {"n": 20}),
    (SymbolSpace(2, 4), "bernoulli", {"p": 0.3}),
    (UnitInterval(), "cantor", {"depth": 4}),
])
def test_csv_roundtrip(tmp_path, space, gen, kw):
    cloud, mu = sample_measure(space, gen, seed=1, **kw)
    path = write_measure_csv(tmp_path / "m.csv", mu)
    cloud2, mu2 = read_measure_csv(path, space)
    assert np.array_equal(cloud2.coords, cloud.coords[mu.indices])
    assert np.allclose(mu2.weights, mu.weights, rtol=0, atol=1e-15)


def test_csv_header_checked(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("y,weight\n0.5,1\n")
    with pytest.raises(StructuralError):
        read_measure_csv(p, Circle())
