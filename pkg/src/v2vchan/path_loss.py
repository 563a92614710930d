"""Deterministic path loss, oxygen absorption, shadowing and vehicle blockage.

Shadowing and the NLOSv blockage attenuation are "lognormal with standard
deviation X dB", i.e. zero-mean (resp. mean ``mu_a``) Gaussians in dB.
Distances are in meters and carrier frequencies in GHz throughout.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable

import numpy as np

from .link_state import LinkState, ModelKind, NotAvailable, state_probabilities
from .scenario import Scenario


class DomainError(ValueError):
    pass


@dataclass(frozen=True)
class OxygenTable:
    """Piecewise-linear specific attenuation (dB/km) versus frequency (GHz).

    Zero outside the tabulated span.
    """

    freq_ghz: tuple[float, ...]
    omega_db_per_km: tuple[float, ...]

    def __post_init__(self):
        f = np.asarray(self.freq_ghz, dtype=float)
        w = np.asarray(self.omega_db_per_km, dtype=float)
        if f.ndim != 1 or f.shape != w.shape or f.size < 2:
            raise ValueError("oxygen table needs two equal-length columns of >= 2 rows")
        if np.any(np.diff(f) <= 0):
            raise ValueError("oxygen table frequencies must be strictly increasing")
        if np.any(w < 0):
            raise ValueError("oxygen attenuation must be non-negative")

    def omega(self, fc):
        return np.interp(fc, self.freq_ghz, self.omega_db_per_km, left=0.0, right=0.0)

    @classmethod
    def from_rows(cls, rows: Iterable[tuple[float, float]]) -> "OxygenTable":
        rows = list(rows)
        return cls(tuple(float(r[0]) for r in rows), tuple(float(r[1]) for r in rows))


def read_oxygen_csv(source) -> OxygenTable:
    """Parse a ``freq_ghz,omega_db_per_km`` CSV from a path or an open text file."""
    if isinstance(source, (str, Path)):
        with open(source, newline="") as fh:
            return read_oxygen_csv(fh)
    reader = csv.DictReader(source)
    if reader.fieldnames != ["freq_ghz", "omega_db_per_km"]:
        raise ValueError(f"unexpected oxygen table header {reader.fieldnames}")
    return OxygenTable.from_rows((r["freq_ghz"], r["omega_db_per_km"]) for r in reader)


def _load_default_table() -> OxygenTable:
    with resources.files("v2vchan").joinpath("data/oxygen_38901.csv").open() as fh:
        return read_oxygen_csv(fh)


DEFAULT_OXYGEN = _load_default_table()


def oxygen_loss(d, fc, table: OxygenTable = DEFAULT_OXYGEN):
    d = np.asarray(d, dtype=float)
    if np.any(d < 0):
        raise DomainError("distance must be non-negative")
    return d * table.omega(fc) / 1000.0


def _check(d, fc):
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0) or np.any(np.asarray(fc) <= 0):
        raise DomainError("distance and carrier frequency must be positive")
    return d


def pl_los_mean(scenario, d, fc, table: OxygenTable = DEFAULT_OXYGEN):
    d = _check(d, fc)
    if Scenario(scenario) is Scenario.URBAN:
        pl = 38.77 + 16.7 * np.log10(d) + 18.2 * np.log10(fc)
    else:
        pl = 32.4 + 20.0 * np.log10(d) + 20.0 * np.log10(fc)
    return pl + oxygen_loss(d, fc, table)


def pl_nlos_mean(d, fc, table: OxygenTable = DEFAULT_OXYGEN):
    d = _check(d, fc)
    return 36.85 + 30.0 * np.log10(d) + 18.9 * np.log10(fc) + oxygen_loss(d, fc, table)


@dataclass(frozen=True)
class BlockageParams:
    mu_base: float
    sigma: float

    def __post_init__(self):
        if (self.mu_base, self.sigma) not in _ADMISSIBLE_BLOCKAGE:
            raise ValueError(f"inadmissible blockage parameters {self.mu_base, self.sigma}")

    @property
    def blocked(self) -> bool:
        return self.mu_base > 0


_ADMISSIBLE_BLOCKAGE = {(0.0, 0.0), (5.0, 4.0), (9.0, 4.5)}
NO_BLOCKAGE = BlockageParams(0.0, 0.0)
PARTIAL_BLOCKAGE = BlockageParams(5.0, 4.0)
FULL_BLOCKAGE = BlockageParams(9.0, 4.5)


def blockage_params(h_tx: float, h_rx: float, h_blk: float) -> BlockageParams:
    """Pick the blockage case from endpoint antenna heights and blocker height.

    Ties with the blocker height fall into the partial case.
    """
    if min(h_tx, h_rx) > h_blk:
        return NO_BLOCKAGE
    if max(h_tx, h_rx) < h_blk:
        return FULL_BLOCKAGE
    return PARTIAL_BLOCKAGE


def blockage_case_arrays(h_tx, h_rx, h_blk):
    """Vectorized :func:`blockage_params`, returning ``(mu_base, sigma)`` arrays."""
    lo = np.minimum(h_tx, h_rx)
    hi = np.maximum(h_tx, h_rx)
    clear = lo > h_blk
    below = hi < h_blk
    mu = np.where(clear, 0.0, np.where(below, 9.0, 5.0))
    sigma = np.where(clear, 0.0, np.where(below, 4.5, 4.0))
    return mu, sigma


def _distance_term(d):
    return np.maximum(0.0, 15.0 * np.log10(d) - 41.0)


def blockage_mean(d, mu_base):
    """Mean of the NLOSv extra attenuation; identically 0 in the unblocked case."""
    mu_base = np.asarray(mu_base, dtype=float)
    return np.where(mu_base > 0, mu_base + _distance_term(np.asarray(d, dtype=float)), 0.0)


def nlosv_extra(d: float, params: BlockageParams, rng: np.random.Generator) -> float:
    if d <= 0:
        raise DomainError("distance must be positive")
    if not params.blocked:
        return 0.0
    return float(rng.normal(blockage_mean(d, params.mu_base), params.sigma))


def shadowing_sigma(state) -> float:
    # NLOSv reuses the LOS equation, shadowing included
    return 4.0 if LinkState(state) is LinkState.NLOS else 3.0


_SIGMA_BY_STATE = np.array([3.0, 3.0, 4.0])


@dataclass(frozen=True)
class ChannelSample:
    state: LinkState
    pl_mean_db: float
    shadow_db: float
    blockage_db: float
    total_db: float


def state_mean_pl(states, scenario, d, fc, table: OxygenTable = DEFAULT_OXYGEN):
    """Deterministic path loss (oxygen included) for each state in ``states``."""
    states = np.asarray(states)
    return np.where(
        states == LinkState.NLOS, pl_nlos_mean(d, fc, table), pl_los_mean(scenario, d, fc, table)
    )


def sample_path_loss(
    states,
    scenario,
    d,
    fc,
    h_tx,
    h_rx,
    h_blk,
    rng: np.random.Generator,
    zero_variance: bool = False,
    table: OxygenTable = DEFAULT_OXYGEN,
):
    """Vectorized channel draw.

    Returns ``(pl_mean, shadow, blockage)`` arrays broadcast to the shape of
    ``states``. Two standard normals are consumed per element regardless of
    state, so the random stream advances identically for every configuration.
    """
    states = np.asarray(states)
    shape = states.shape
    z_shadow = rng.standard_normal(shape)
    z_block = rng.standard_normal(shape)
    pl_mean = np.broadcast_to(state_mean_pl(states, scenario, d, fc, table), shape)
    mu_base, sigma_blk = blockage_case_arrays(h_tx, h_rx, h_blk)
    mu_a = blockage_mean(d, mu_base)
    if zero_variance:
        shadow = np.zeros(shape)
        blockage = np.where(states == LinkState.NLOSV, mu_a, 0.0)
    else:
        shadow = _SIGMA_BY_STATE[states] * z_shadow
        blockage = np.where(states == LinkState.NLOSV, mu_a + sigma_blk * z_block, 0.0)
    return pl_mean, shadow, np.broadcast_to(blockage, shape) + 0.0


def sample_channel(
    state,
    scenario,
    d: float,
    fc: float,
    h_tx: float,
    h_rx: float,
    h_blk: float,
    rng: np.random.Generator,
    zero_variance: bool = False,
    table: OxygenTable = DEFAULT_OXYGEN,
) -> ChannelSample:
    state = LinkState(state)
    pl, sh, bl = sample_path_loss(
        np.array(int(state)), scenario, d, fc, h_tx, h_rx, h_blk, rng, zero_variance, table
    )
    pl, sh, bl = float(pl), float(sh), float(bl)
    return ChannelSample(state, pl, sh, bl, pl + sh + bl)


def _blocker_weights(h_blk):
    if np.isscalar(h_blk):
        return [(float(h_blk), 1.0)]
    return [(float(h), float(w)) for h, w in h_blk]


def state_mean_total(scenario, d, fc, h_tx, h_rx, h_blk, table: OxygenTable = DEFAULT_OXYGEN):
    """Expected total path loss (dB) per state as an array ``(los, nlosv, nlos)``.

    ``h_blk`` may be a single blocker height or ``(height, weight)`` pairs.
    """
    los = pl_los_mean(scenario, d, fc, table)
    extra = sum(
        w * blockage_mean(d, blockage_params(h_tx, h_rx, h).mu_base)
        for h, w in _blocker_weights(h_blk)
    )
    return np.stack(np.broadcast_arrays(los, los + extra, pl_nlos_mean(d, fc, table)))


def mean_overall_path_loss(
    model,
    scenario,
    density,
    d,
    fc,
    h_tx: float,
    h_rx: float,
    h_blk,
    table: OxygenTable = DEFAULT_OXYGEN,
):
    """State-probability-weighted mean path loss, averaged in the dB domain."""
    if ModelKind(model) is ModelKind.THREE_GPP:
        raise NotAvailable("overall path loss needs an NLOS probability")
    probs, _ = state_probabilities(model, scenario, density, d)
    means = state_mean_total(scenario, d, fc, h_tx, h_rx, h_blk, table)
    return (probs * means).sum(axis=0)
