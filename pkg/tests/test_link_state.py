import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from v2vchan.link_state import (
    ConfigurationError,
    LinkState,
    NotAvailable,
    StateDistribution,
    p_los,
    p_nlos,
    p_nlosv,
    sample_state,
    state_distribution,
)

MODELS = [("3gpp", None), ("extended", "low"), ("extended", "medium"), ("extended", "high")]


# Hand evaluations of the tabulated closed forms.
def test_gpp_highway_los():
    assert p_los("3gpp", "highway", None, 100) == pytest.approx(2.1013e-6 * 1e4 - 0.2 + 1.0193, abs=1e-12)
    assert p_los("3gpp", "highway", None, 100) == pytest.approx(0.8403, abs=1e-4)
    assert p_los("3gpp", "highway", None, 500) == pytest.approx(0.54 - 0.001 * 25, abs=1e-12)


def test_gpp_urban_los_clamped():
    assert 1.05 * math.exp(-0.0228) > 1
    assert p_los("3gpp", "urban", None, 2) == 1.0


def test_extended_values():
    assert p_los("extended", "urban", "low", 100) == pytest.approx(0.8548 * math.exp(-0.64), abs=1e-12)
    assert p_los("extended", "urban", "low", 100) == pytest.approx(0.4507, abs=1e-4)
    nlosv = (1 / 3.12) * math.exp(-((math.log(100) - 5.0063) ** 2) / 2.4544)
    assert p_nlosv("extended", "urban", "medium", 100) == pytest.approx(nlosv, abs=1e-12)
    assert nlosv == pytest.approx(0.3002, abs=1e-4)
    assert p_nlos("extended", "highway", "low", 200) == pytest.approx(
        -2.9e-7 * 4e4 + 0.00059 * 200 + 0.0017, abs=1e-12
    )
    assert p_nlosv("extended", "highway", "low", 200) == pytest.approx(1 - 0.76 - 0.1081, abs=1e-9)
    assert p_nlos("extended", "urban", "low", 100) == pytest.approx(0.3270, abs=1e-4)
    assert p_nlosv("3gpp", "highway", None, 100) == pytest.approx(0.1597, abs=1e-4)


def test_gpp_nlos_not_available():
    with pytest.raises(NotAvailable):
        p_nlos("3gpp", "urban", None, 100)


def test_extended_requires_density():
    with pytest.raises(ConfigurationError):
        p_los("extended", "urban", None, 100)


def test_state_distribution_examples():
    d = state_distribution("3gpp", "highway", None, 100)
    assert (d.p_los, d.p_nlosv, d.p_nlos) == pytest.approx((0.8403, 0.1597, 0.0), abs=1e-4)
    assert d.p_los + d.p_nlosv + d.p_nlos == 1.0
    d = state_distribution("extended", "urban", "high", 100)
    assert (d.p_los, d.p_nlosv, d.p_nlos) == pytest.approx((0.1637, 0.3834, 0.4529), abs=1e-4)


@given(
    m=st.sampled_from(MODELS),
    scenario=st.sampled_from(["urban", "highway"]),
    d=st.floats(1e-3, 1e4),
)
def test_probabilities_clamped(m, scenario, d):
    model, density = m
    fns = [p_los, p_nlosv] + ([p_nlos] if model == "extended" else [])
    for fn in fns:
        assert 0.0 <= fn(model, scenario, density, d) <= 1.0
    dist = state_distribution(model, scenario, density, d)
    assert abs(dist.p_los + dist.p_nlosv + dist.p_nlos - 1.0) <= 1e-12


def test_gpp_highway_branch_continuity():
    left = 2.1013e-6 * 475**2 - 0.002 * 475 + 1.0193
    assert left == pytest.approx(0.5434, abs=1e-4)
    assert abs(p_los("3gpp", "highway", None, 475) - p_los("3gpp", "highway", None, 475 + 1e-9)) <= 0.005


@pytest.mark.parametrize("model,density", [("3gpp", None), ("extended", "low"), ("extended", "medium"), ("extended", "high")])
def test_urban_los_non_increasing(model, density):
    d = np.linspace(0.5, 1e4, 20_000)
    assert np.all(np.diff(p_los(model, "urban", density, d)) <= 0)


@pytest.mark.parametrize("scenario", ["urban", "highway"])
def test_density_ordering(scenario):
    d = np.linspace(50, 400, 351)
    lo, med, hi = (p_los("extended", scenario, x, d) for x in ("low", "medium", "high"))
    assert np.all(lo >= med) and np.all(med >= hi)


@pytest.mark.parametrize("density", ["low", "medium", "high"])
def test_urban_nlosv_interior_peak(density):
    at = lambda d: p_nlosv("extended", "urban", density, d)
    assert at(50) > at(5) and at(50) > at(400)


class TestSampling:
    def test_degenerate(self, rng):
        assert {sample_state(StateDistribution(1, 0, 0), rng) for _ in range(200)} == {LinkState.LOS}
        assert {sample_state(StateDistribution(0, 0, 1), rng) for _ in range(200)} == {LinkState.NLOS}

    def test_frequencies(self, rng):
        from v2vchan.link_state import sample_states

        draws = sample_states(np.array([0.5, 0.3, 0.2]), rng, size=100_000)
        freqs = np.bincount(draws, minlength=3) / draws.size
        np.testing.assert_allclose(freqs, [0.5, 0.3, 0.2], atol=0.01)

    def test_invalid_distribution(self):
        with pytest.raises(ValueError):
            StateDistribution(0.5, 0.5, 0.5)
