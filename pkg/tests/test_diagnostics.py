"""Entropy functionals, distances and the conservation ledger."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mixbgk.diagnostics import (
    ConservationLedger,
    entropy,
    l1_distance,
    reduced_entropy_array,
    relative_entropy,
)
from mixbgk.discretization import DiscreteDistribution, VelocityGrid, project_maxwellian, reduced_maxwellian
from mixbgk.errors import DomainError, GridMismatchError
from mixbgk.model import Moments

GRID64 = VelocityGrid.cube(3, 64, -8.0, 8.0)
SMALL = VelocityGrid.cube(3, 8, -3.0, 3.0)


def test_entropy_of_zero():
    assert entropy(DiscreteDistribution(SMALL, np.zeros(SMALL.shape))) == 0.0


def test_entropy_of_maxwellian_matches_gaussian_integral():
    f = project_maxwellian(Moments(1.0, [0, 0, 0], 1.0), GRID64, 1.0)
    exact = -1.5 * (np.log(2 * np.pi) + 1.0)
    assert exact == pytest.approx(-4.257, abs=1e-3)
    assert entropy(f) == pytest.approx(exact, abs=1e-6)


def test_entropy_scaling_law():
    f = DiscreteDistribution(SMALL, np.random.default_rng(0).random(SMALL.shape))
    c = 2.7
    assert entropy(f.scaled(c)) == pytest.approx(c * entropy(f) + c * np.log(c) * f.density, rel=1e-13)


def test_relative_entropy_identity_and_gaussian_value():
    f = project_maxwellian(Moments(1.0, [0, 0, 0], 1.0), GRID64, 1.0)
    assert relative_entropy(f, f) == 0.0
    g = project_maxwellian(Moments(1.0, [0, 0, 0], 1.5), GRID64, 1.0)
    r = 1.0 / 1.5
    exact = 1.5 * (r - 1.0 - np.log(r))
    assert relative_entropy(f, g) == pytest.approx(exact, abs=1e-6)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_relative_entropy_nonnegative_for_equal_density(seed):
    rng = np.random.default_rng(seed)
    a = rng.random(SMALL.shape) + 1e-3
    b = rng.random(SMALL.shape) + 1e-3
    b *= a.sum() / b.sum()
    assert relative_entropy(DiscreteDistribution(SMALL, a), DiscreteDistribution(SMALL, b)) >= -1e-14


def test_relative_entropy_support_violation():
    a = np.ones(SMALL.shape)
    b = np.ones(SMALL.shape)
    b[0, 0, 0] = 0.0
    with pytest.raises(DomainError):
        relative_entropy(DiscreteDistribution(SMALL, a), DiscreteDistribution(SMALL, b))


def test_l1_distance_properties():
    rng = np.random.default_rng(5)
    f, g, h = (DiscreteDistribution(SMALL, rng.random(SMALL.shape)) for _ in range(3))
    assert l1_distance(f, f) == 0.0
    assert l1_distance(f, h) <= l1_distance(f, g) + l1_distance(g, h) + 1e-15
    other = VelocityGrid.cube(3, 8, -4.0, 4.0)
    with pytest.raises(GridMismatchError):
        l1_distance(f, DiscreteDistribution(other, np.ones(other.shape)))


def test_reduced_entropy_equals_full_entropy_for_maxwellians():
    target = Moments(1.2, [0.3, 0, 0], 0.9)
    full = entropy(project_maxwellian(target, GRID64, 1.0))
    rp = reduced_maxwellian(target, VelocityGrid.cube(1, 64, -8.0, 8.0), 1.0)
    red = reduced_entropy_array(rp.g.values, rp.h, rp.g.grid.weight)
    assert red == pytest.approx(full, abs=1e-9)


def test_ledger_tracks_drift_and_entropy():
    led = ConservationLedger.start(0.0, [1.0, 2.0], [0.5, 0, 0], 3.0, -1.0, [1.0, 1.0])
    led.update(0.1, [1.0, 2.0], [0.5, 0, 0], 3.0, -1.1)
    assert all(v == 0.0 for v in led.max_drift.values())
    led.update(0.2, [1.0 + 1e-9, 2.0], [0.5, 0, 0], 3.0, -1.05, record=True)
    assert led.max_drift["mass1"] == pytest.approx(1e-9, rel=1e-6)
    assert led.max_entropy_increase == pytest.approx(0.05)
    assert len(led.samples) == 2
    rows = led.check(1e-12, 1e-10, 1e-10)
    failing = {name for name, _, _, ok in rows if not ok}
    assert failing == {"mass1 drift per step", "mass1 drift cumulative", "entropy increase per step"}


def test_ledger_reference_fixed():
    led = ConservationLedger.start(0.0, [1.0, 1.0], [0, 0, 0], 1.0, 0.0, [1.0, 1.0])
    led.update(1.0, [2.0, 1.0], [0, 0, 0], 1.0, 0.0)
    assert tuple(led.masses) == (1.0, 1.0)
    assert led.max_drift["mass1"] == 1.0
