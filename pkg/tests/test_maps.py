import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from expanse.errors import PreconditionError, StructuralError
from expanse.maps import (ConstantMap, Contraction, LookupTable, PiecewiseLinear, Rotation, Shift, Tent, TimesM,
                          apply, bowen_distance, cloud_orbit, orbit)
from expanse.spaces import Circle, PointCloud, SymbolSpace, UnitInterval, grid_cloud

unit = st.floats(0, 1, allow_nan=False, exclude_max=True)


@given(unit, st.integers(2, 7))
def test_times_m_matches_modular_formula(x, m):
    y = apply(TimesM(m), x)
    assert 0 <= y < 1
    assert math.isclose(y, (m * x) % 1.0, abs_tol=1e-12) or math.isclose(abs(y - (m * x) % 1.0), 1, abs_tol=1e-12)


@given(unit, unit)
def test_rotation(x, a):
    y = apply(Rotation(a), x)
    assert 0 <= y < 1
    assert min(abs(y - (x + a) % 1), 1 - abs(y - (x + a) % 1)) < 1e-12


@given(st.floats(0, 1), st.floats(0.1, 2.0))
def test_tent_agrees_with_piecewise_linear(x, s):
    tent = Tent(s)
    pl = PiecewiseLinear((0.0, 0.5, 1.0), (s, -s), 0.0)
    assert apply(tent, x) == pytest.approx(apply(pl, x), abs=1e-12)
    assert apply(tent, x) == pytest.approx(s * min(x, 1 - x), abs=1e-12)


def test_map_parameter_validation():
    for bad in (lambda: TimesM(1), lambda: TimesM(2.5), lambda: Rotation(1.0), lambda: Tent(2.5),
                lambda: Contraction(1.0), lambda: PiecewiseLinear((0.0, 0.4), (1.0,)),
                lambda: PiecewiseLinear((0.0, 1.0), (2.0,)), lambda: Shift(SymbolSpace(2, 4), "wrap")):
        with pytest.raises(StructuralError):
            bad()


def test_contraction_and_constant():
    assert apply(Contraction(0.25), 0.8) == pytest.approx(0.2)
    const = ConstantMap(Circle(), 0.3)
    assert apply(const, 0.9) == pytest.approx(0.3)
    assert const.describe() == {"type": "constant", "target": 0.3}


def test_shift_modes():
    s = SymbolSpace(2, 5)
    assert apply(Shift(s), "10110") == (0, 1, 1, 0, 0)
    assert apply(Shift(s, "cyclic"), "10110") == (0, 1, 1, 0, 1)


@given(st.lists(st.integers(0, 1), min_size=6, max_size=6), st.lists(st.integers(0, 1), min_size=6, max_size=6))
def test_shift_doubles_small_distances(a, b):
    s = SymbolSpace(2, 6)
    d = float(s.dist(np.array(a, float), np.array(b, float)))
    shifted = Shift(s).apply_coords(np.array([a, b], float))
    dt = float(s.dist(shifted[0], shifted[1]))
    if 0 < d < 0.5:
        assert dt == 2 * d


def test_lookup_table():
    cloud = PointCloud(UnitInterval(), np.array([[0.0], [0.5], [1.0]]))
    lt = LookupTable(cloud, (2, 2, 0))
    assert lt.apply_coords(cloud.coords)[:, 0].tolist() == [1.0, 1.0, 0.0]
    assert not lt.continuous
    with pytest.raises(StructuralError):
        LookupTable(cloud, (0, 3, 1))
    with pytest.raises(StructuralError):
        lt.apply_coords(np.array([[0.25]]))


def test_orbit_and_bowen_distance():
    assert orbit(TimesM(2), 0.125, 4) == pytest.approx([0.125, 0.25, 0.5, 0.0])
    # doubling the gap each step: 0.01, 0.02, 0.04, 0.08
    assert bowen_distance(TimesM(2), 0.1, 0.11, 4) == pytest.approx(0.08)
    assert bowen_distance(Rotation(0.3), 0.1, 0.2, 10) == pytest.approx(0.1)
    with pytest.raises(PreconditionError):
        orbit(TimesM(2), 0.1, 0)


@given(unit, unit, st.integers(1, 8))
def test_bowen_distance_is_max_over_orbit(x, y, n):
    ox, oy = orbit(TimesM(3), x, n), orbit(TimesM(3), y, n)
    expect = max(min(abs(a - b), 1 - abs(a - b)) for a, b in zip(ox, oy))
    assert bowen_distance(TimesM(3), x, y, n) == pytest.approx(expect, abs=1e-12)


def test_cloud_orbit_shape():
    c = grid_cloud(Circle(), 16)
    orb = cloud_orbit(TimesM(2), c.coords, 5)
    assert orb.shape == (5, 16, 1)
    assert np.array_equal(orb[0], c.coords)
