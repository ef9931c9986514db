import csv
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from expanse.capacity import capacity_estimate, fit_line, greedy_cover_count, mass_floor
from expanse.errors import PreconditionError, StructuralError
from expanse.measures import AtomicMeasure, dirac, sample_measure, uniform
from expanse.spaces import Circle, UnitInterval, grid_cloud


def test_fit_line_recovers_exact_line():
    s, c, r = fit_line([0, 1, 2, 3], [1, 3, 5, 7])
    assert s == pytest.approx(2) and c == pytest.approx(1) and r == pytest.approx(0, abs=1e-12)
    with pytest.raises(PreconditionError):
        fit_line([1], [1])


@given(st.integers(0, 2 ** 32 - 1), st.sampled_from([0.02, 0.05, 0.1]))
def test_cover_count_nonincreasing_in_delta(seed, beta):
    # the greedy run for a larger delta is a prefix of the run for a smaller one
    rng = np.random.default_rng(seed)
    c = grid_cloud(Circle(), 200)
    mu = AtomicMeasure(c, np.arange(200), rng.random(200) + 0.01)
    counts = [greedy_cover_count(c, mu, beta, d) for d in (0.0, 0.05, 0.2, 0.5)]
    assert counts == sorted(counts, reverse=True)


def test_cover_count_uniform_circle():
    c = grid_cloud(Circle(), 1000)
    # radius off the grid spacing: each ball holds exactly 101 consecutive points
    assert greedy_cover_count(c, uniform(c), 0.0505, 0.0) == math.ceil(1000 / 101)


def test_lebesgue_slope_is_one():
    c = grid_cloud(Circle(), 4095)
    rep = capacity_estimate(c, uniform(c), [0.1 * 2 ** -k for k in range(6)], [0.01, 0.05])
    assert rep.estimate == pytest.approx(1.0, abs=0.05)
    assert rep.delta_grid == [0.05, 0.01]


def test_dirac_slope_is_zero():
    c = grid_cloud(UnitInterval(), 257)
    rep = capacity_estimate(c, dirac(c, 7), [0.2, 0.1, 0.05, 0.025], [0.0])
    assert rep.estimate == pytest.approx(0, abs=1e-12)
    assert mass_floor(dirac(c, 7)) == 0


def test_cantor_mass_floor_rejected():
    c, mu = sample_measure(UnitInterval(), "cantor", depth=6)
    assert mass_floor(mu) == pytest.approx(2 ** -6)
    with pytest.raises(PreconditionError, match="mass floor"):
        capacity_estimate(c, mu, [0.3, 0.1, 0.1 / 3], [0.0])


def test_scale_floor_drops_small_betas():
    c = grid_cloud(Circle(), 100)
    rep = capacity_estimate(c, uniform(c), [0.4, 0.2, 0.1, 0.05, 0.025, 0.0125, 0.00625], [0.02])
    assert rep.skipped_betas == [0.00625]
    with pytest.raises(PreconditionError, match="insufficient scale range"):
        capacity_estimate(c, uniform(c), [0.02, 0.01, 0.005], [0.02])


def test_grid_must_be_geometric():
    c = grid_cloud(Circle(), 100)
    with pytest.raises(PreconditionError, match="geometric"):
        capacity_estimate(c, uniform(c), [0.4, 0.2, 0.15], [0.02])
    with pytest.raises(StructuralError):
        capacity_estimate(c, uniform(grid_cloud(Circle(), 100)), [0.4, 0.2, 0.1], [0.02])


def test_csv_layout(tmp_path):
    c = grid_cloud(Circle(), 255)
    rep = capacity_estimate(c, uniform(c), [0.2, 0.1, 0.05], [0.1, 0.01])
    rows = list(csv.reader(open(rep.to_csv(tmp_path / "cap.csv"))))
    assert rows[0] == ["delta", "beta", "N_hat"]
    assert len(rows) == 1 + 6
    assert rows[1][:2] == ["0.1", "0.2"]
