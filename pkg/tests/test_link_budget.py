import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from v2vchan.link_budget import (
    RadioConfig,
    array_gain_db,
    is_received,
    max_path_loss_db,
    noise_power_dbm,
    snr_db,
)


def test_defaults():
    r = RadioConfig()
    assert (r.tx_power, r.bandwidth, r.carrier, r.noise_figure, r.array_elements, r.snr_threshold) == (
        21.0, 1e9, 63.0, 13.0, 32, 0.0,
    )


@pytest.mark.parametrize("n,gain", [(1, 0.0), (32, 15.05), (4, 6.02)])
def test_array_gain(n, gain):
    assert array_gain_db(n) == pytest.approx(gain, abs=0.005)


def test_array_gain_rejects_zero():
    with pytest.raises(ValueError):
        array_gain_db(0)
    with pytest.raises(ValueError):
        RadioConfig(array_elements=0)


@pytest.mark.parametrize("bw,nf,expected", [(1, 0, -174), (1e9, 13, -71), (1e8, 13, -81)])
def test_noise_power(bw, nf, expected):
    assert noise_power_dbm(bw, nf) == pytest.approx(expected)


def test_snr_examples():
    assert snr_db(122.10, RadioConfig()) == pytest.approx(0.0, abs=0.01)
    assert snr_db(92, RadioConfig(array_elements=1)) == pytest.approx(0.0)
    assert snr_db(0, RadioConfig(array_elements=1)) == pytest.approx(92.0)


def test_max_path_loss():
    assert max_path_loss_db(RadioConfig(array_elements=1)) == pytest.approx(92.0)
    assert max_path_loss_db(RadioConfig()) == pytest.approx(92 + 20 * math.log10(32))
    assert max_path_loss_db(RadioConfig()) == pytest.approx(122.10, abs=0.01)


def test_reception_boundary():
    assert is_received(0.0, 0.0)
    assert not is_received(-0.01, 0.0)
    assert is_received(20, 0)


@given(st.floats(0, 300), st.floats(0.001, 50))
def test_snr_strictly_decreasing(pl, delta):
    r = RadioConfig()
    assert snr_db(pl + delta, r) < snr_db(pl, r)


@given(st.integers(1, 2**12))
def test_doubling_array(n):
    gain = snr_db(100, RadioConfig(array_elements=2 * n)) - snr_db(100, RadioConfig(array_elements=n))
    assert gain == pytest.approx(20 * math.log10(2), abs=1e-9)


def test_reception_monotone():
    snr = np.linspace(-10, 10, 101)
    rx = is_received(snr, 0.5).astype(int)
    assert np.all(np.diff(rx) >= 0)
