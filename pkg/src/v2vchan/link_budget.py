"""SNR link budget and the packet-reception decision."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

THERMAL_NOISE_DBM_HZ = -174.0


@dataclass(frozen=True)
class RadioConfig:
    tx_power: float = 21.0  # dBm
    bandwidth: float = 1e9  # Hz
    carrier: float = 63.0  # GHz
    noise_figure: float = 13.0  # dB
    array_elements: int = 32
    snr_threshold: float = 0.0  # dB

    def __post_init__(self):
        if not self.bandwidth > 0:
            raise ValueError("bandwidth must be positive")
        if not self.carrier > 0:
            raise ValueError("carrier frequency must be positive")
        if int(self.array_elements) != self.array_elements or self.array_elements < 1:
            raise ValueError("array_elements must be an integer >= 1")


def array_gain_db(n: int) -> float:
    """Ideal boresight beamforming gain of an ``n``-element array."""
    if n < 1:
        raise ValueError("array needs at least one element")
    return 10.0 * np.log10(n)


def noise_power_dbm(bandwidth: float, nf: float) -> float:
    return THERMAL_NOISE_DBM_HZ + 10.0 * np.log10(bandwidth) + nf


def snr_db(total_pl, radio: RadioConfig):
    # both endpoints carry an N-element array
    return (
        radio.tx_power
        + 2.0 * array_gain_db(radio.array_elements)
        - total_pl
        - noise_power_dbm(radio.bandwidth, radio.noise_figure)
    )


def max_path_loss_db(radio: RadioConfig) -> float:
    """Largest path loss still received at the radio's SNR threshold."""
    return float(snr_db(0.0, radio) - radio.snr_threshold)


def is_received(snr, threshold: float):
    return np.asarray(snr) >= threshold
