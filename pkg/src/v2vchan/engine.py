"""Monte Carlo experiment runner for distance-swept channel curves.

Every curve is a pure function of its :class:`ExperimentSpec`. Trials at a
grid point are split into fixed-size blocks; block ``b`` of point ``p``
draws from ``derive_substream(seed, p, b)``, so results do not depend on
how blocks are scheduled across worker processes.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from typing import Any

import numpy as np

from . import link_budget, path_loss
from .link_budget import RadioConfig
from .link_state import (
    LinkState,
    ModelKind,
    NotAvailable,
    sample_states,
    state_probabilities,
)
from .path_loss import mean_overall_path_loss, state_mean_total
from .scenario import (
    VEHICLE_CLASSES,
    Density,
    Scenario,
    TrafficConfig,
    VehicleKind,
    default_mean_speed,
)

BLOCK_SIZE = 2048


class Metric(str, enum.Enum):
    PROB = "prob"
    PATHLOSS = "pathloss"
    PRR = "prr"


class StateMode(str, enum.Enum):
    LOS = "los"
    NLOSV = "nlosv"
    NLOS = "nlos"
    OVERALL = "overall"


class SpecError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentSpec:
    metric: Metric = Metric.PRR
    model: ModelKind = ModelKind.EXTENDED
    scenario: Scenario = Scenario.URBAN
    state: StateMode = StateMode.OVERALL
    radio: RadioConfig = field(default_factory=RadioConfig)
    traffic: TrafficConfig = field(default_factory=TrafficConfig)
    d_min: float = 2.0
    d_max: float = 500.0
    n_points: int = 30
    bin_width: float = 20.0
    trials_per_point: int = 10_000
    seed: int = 1
    zero_variance: bool = False
    oxygen_table: tuple[tuple[float, float], ...] | None = None

    def __post_init__(self):
        for name, kind in (
            ("metric", Metric),
            ("model", ModelKind),
            ("scenario", Scenario),
            ("state", StateMode),
        ):
            object.__setattr__(self, name, kind(getattr(self, name)))
        if not 2.0 <= self.d_min < self.d_max <= 500.0:
            raise SpecError(
                f"need 2 <= d_min < d_max <= 500, got d_min={self.d_min}, d_max={self.d_max}"
            )
        if self.n_points < 2:
            raise SpecError("n_points must be at least 2")
        if not self.bin_width > 0:
            raise SpecError("bin_width must be positive")
        if self.trials_per_point < 1:
            raise SpecError("trials_per_point must be at least 1")
        if not 0 <= self.seed < 2**64:
            raise SpecError("seed must be an unsigned 64-bit integer")
        if self.oxygen_table is not None:
            rows = tuple((float(f), float(w)) for f, w in self.oxygen_table)
            path_loss.OxygenTable.from_rows(rows)
            object.__setattr__(self, "oxygen_table", rows)

    @property
    def table(self) -> path_loss.OxygenTable:
        if self.oxygen_table is None:
            return path_loss.DEFAULT_OXYGEN
        return path_loss.OxygenTable.from_rows(self.oxygen_table)

    @property
    def density(self) -> Density | None:
        return self.traffic.density if self.model is ModelKind.EXTENDED else None

    def to_dict(self) -> dict[str, Any]:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, enum.Enum):
                v = v.value
            elif isinstance(v, RadioConfig):
                v = asdict(v)
            elif isinstance(v, TrafficConfig):
                v = {
                    "mean_speed": v.mean_speed,
                    "density": v.density.value,
                    "type_mix": {k.value: p for k, p in sorted(v.type_mix.items())},
                }
            elif f.name == "oxygen_table" and v is not None:
                v = [list(r) for r in v]
            out[f.name] = v
        return out

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ExperimentSpec":
        data = dict(data)
        _reject_unknown(data, {f.name for f in fields(cls)}, "experiment")
        if "radio" in data:
            radio = dict(data["radio"])
            _reject_unknown(radio, {f.name for f in fields(RadioConfig)}, "radio")
            data["radio"] = RadioConfig(**radio)
        if "traffic" in data:
            traffic = dict(data["traffic"])
            _reject_unknown(traffic, {f.name for f in fields(TrafficConfig)}, "traffic")
            data["traffic"] = TrafficConfig(**traffic)
        return cls(**data)


def _reject_unknown(data, allowed, where):
    unknown = set(data) - set(allowed)
    if unknown:
        raise SpecError(f"unknown {where} keys: {', '.join(sorted(unknown))}")


def default_traffic(scenario, density=Density.MEDIUM, type_mix=None) -> TrafficConfig:
    mix = type_mix if type_mix is not None else {VehicleKind.TYPE2: 1.0}
    return TrafficConfig(default_mean_speed(scenario), density, mix)


@dataclass(frozen=True)
class CurvePoint:
    d: float
    value: float
    stderr: float
    n_trials: int
    analytic: float | None = None


@dataclass(frozen=True)
class CurveSeries:
    metric: str
    points: tuple[CurvePoint, ...]
    metadata: dict[str, Any]

    def __post_init__(self):
        ds = [p.d for p in self.points]
        if any(b <= a for a, b in zip(ds, ds[1:])):
            raise ValueError("curve distances must be strictly increasing")
        if any(p.stderr < 0 for p in self.points):
            raise ValueError("stderr must be non-negative")

    @property
    def d(self) -> np.ndarray:
        return np.array([p.d for p in self.points])

    @property
    def values(self) -> np.ndarray:
        return np.array([p.value for p in self.points])

    @property
    def stderrs(self) -> np.ndarray:
        return np.array([p.stderr for p in self.points])

    def to_dict(self) -> dict[str, Any]:
        return {
            "metric": self.metric,
            "points": [asdict(p) for p in self.points],
            "metadata": self.metadata,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "CurveSeries":
        return cls(
            data["metric"],
            tuple(CurvePoint(**p) for p in data["points"]),
            data["metadata"],
        )


def derive_substream(seed: int, point_index: int, trial_index: int) -> np.random.Generator:
    """Independent generator keyed by ``(seed, point_index, trial_index)``."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(point_index, trial_index))
    return np.random.Generator(np.random.PCG64(ss))


def distance_grid(spec: ExperimentSpec) -> np.ndarray:
    return np.linspace(spec.d_min, spec.d_max, spec.n_points)


def prr_bins(spec: ExperimentSpec) -> np.ndarray:
    """Bin edges for PRR curves.

    Bins are ``bin_width`` wide and centered on multiples of ``bin_width``;
    the outermost bins are clipped to ``[d_min, d_max]``.
    """
    w = spec.bin_width
    k = np.arange(math.floor(spec.d_min / w), math.ceil(spec.d_max / w) + 1)
    inner = (k + 0.5) * w
    inner = inner[(inner > spec.d_min) & (inner < spec.d_max)]
    return np.concatenate([[spec.d_min], inner, [spec.d_max]])


def _blocks(n_trials: int):
    return [
        (b, min(BLOCK_SIZE, n_trials - b * BLOCK_SIZE))
        for b in range(math.ceil(n_trials / BLOCK_SIZE))
    ]


def _draw_heights(traffic: TrafficConfig, rng, n):
    kinds, probs = traffic.kinds_and_probs()
    heights = np.array([VEHICLE_CLASSES[k].antenna_height for k in kinds])
    blk_heights = np.array([VEHICLE_CLASSES[k].height for k in kinds])
    idx = rng.choice(len(kinds), size=(3, n), p=probs)
    return heights[idx[0]], heights[idx[1]], blk_heights[idx[2]]


def _simulate_block(spec: ExperimentSpec, d_lo, d_hi, point_index, block_index, n, fixed_state):
    """Draw ``n`` link realizations; returns ``(d, states, total_pl)`` arrays.

    Draw order per block: distances, state uniforms, TX/RX/blocker classes,
    shadowing normals, blockage normals.
    """
    rng = derive_substream(spec.seed, point_index, block_index)
    d = rng.uniform(d_lo, d_hi, size=n)
    if fixed_state is None:
        probs, _ = state_probabilities(spec.model, spec.scenario, spec.density, d)
        states = sample_states(probs, rng)
    else:
        rng.random(n)
        states = np.full(n, int(fixed_state), dtype=np.int8)
    h_tx, h_rx, h_blk = _draw_heights(spec.traffic, rng, n)
    pl, sh, bl = path_loss.sample_path_loss(
        states, spec.scenario, d, spec.radio.carrier, h_tx, h_rx, h_blk, rng,
        zero_variance=spec.zero_variance, table=spec.table,
    )
    return d, states, pl + sh + bl


def _prr_task(args):
    spec, d_lo, d_hi, point, block, n = args
    _, _, total = _simulate_block(spec, d_lo, d_hi, point, block, n, None)
    snr = link_budget.snr_db(total, spec.radio)
    return n, int(np.count_nonzero(link_budget.is_received(snr, spec.radio.snr_threshold)))


def _pathloss_task(args):
    spec, d, point, block, n, fixed_state = args
    _, _, total = _simulate_block(spec, d, d, point, block, n, fixed_state)
    mean = float(total.mean())
    return n, mean, float(((total - mean) ** 2).sum())


def _map(fn, tasks, workers: int):
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks, chunksize=max(1, len(tasks) // (4 * workers))))


def _merge_moments(parts):
    """Combine per-block ``(n, mean, M2)`` in block order."""
    n, mean, m2 = 0, 0.0, 0.0
    for nb, mb, m2b in parts:
        tot = n + nb
        delta = mb - mean
        mean += delta * nb / tot
        m2 += m2b + delta * delta * n * nb / tot
        n = tot
    return n, mean, m2


def _class_mixture(traffic: TrafficConfig):
    """``(weight, h_tx, h_rx, h_blk)`` over every TX/RX/blocker class combination."""
    kinds, probs = traffic.kinds_and_probs()
    vcs = [VEHICLE_CLASSES[k] for k in kinds]
    return [
        (ptx * prx * pb, tx.antenna_height, rx.antenna_height, blk.height)
        for tx, ptx in zip(vcs, probs)
        for rx, prx in zip(vcs, probs)
        for blk, pb in zip(vcs, probs)
    ]


def analytic_mean_pathloss(spec: ExperimentSpec, d) -> float:
    """dB-domain expectation of the quantity ``run_pathloss_curve`` samples."""
    fc = spec.radio.carrier
    total = 0.0
    for w, h_tx, h_rx, h_blk in _class_mixture(spec.traffic):
        if spec.state is StateMode.OVERALL:
            m = mean_overall_path_loss(
                spec.model, spec.scenario, spec.density, d, fc, h_tx, h_rx, h_blk, spec.table
            )
        else:
            state = LinkState.from_label(spec.state.value)
            m = state_mean_total(spec.scenario, d, fc, h_tx, h_rx, h_blk, spec.table)[state]
        total += w * m
    return float(total)


def run_probability_curve(spec: ExperimentSpec) -> dict[LinkState, CurveSeries]:
    """Analytic state probabilities over the distance grid (no randomness).

    The 3GPP model yields LOS and NLOSv series only.
    """
    if spec.metric is not Metric.PROB:
        raise SpecError("run_probability_curve needs metric=prob")
    d = distance_grid(spec)
    probs, _ = state_probabilities(spec.model, spec.scenario, spec.density, d)
    states = list(LinkState)
    if spec.model is ModelKind.THREE_GPP:
        states = [LinkState.LOS, LinkState.NLOSV]
    meta = spec.to_dict()
    return {
        s: CurveSeries(
            f"p_{s.label}",
            tuple(CurvePoint(float(x), float(p), 0.0, 0) for x, p in zip(d, probs[s])),
            meta,
        )
        for s in states
    }


def run_pathloss_curve(spec: ExperimentSpec, workers: int = 1) -> CurveSeries:
    if spec.metric is not Metric.PATHLOSS:
        raise SpecError("run_pathloss_curve needs metric=pathloss")
    overall = spec.state is StateMode.OVERALL
    if overall and spec.model is ModelKind.THREE_GPP:
        raise NotAvailable("overall path loss needs the extended model")
    fixed = None if overall else LinkState.from_label(spec.state.value)
    grid = distance_grid(spec)
    tasks = [
        (spec, float(d), p, b, n, fixed)
        for p, d in enumerate(grid)
        for b, n in _blocks(spec.trials_per_point)
    ]
    results = _map(_pathloss_task, tasks, workers)
    nb = len(_blocks(spec.trials_per_point))
    points = []
    for p, d in enumerate(grid):
        n, mean, m2 = _merge_moments(results[p * nb : (p + 1) * nb])
        stderr = math.sqrt(m2 / (n - 1) / n) if n > 1 else 0.0
        analytic = analytic_mean_pathloss(spec, float(d))
        points.append(CurvePoint(float(d), mean, stderr, n, analytic))
    return CurveSeries(f"pathloss_{spec.state.value}", tuple(points), spec.to_dict())


def _require_prr(spec: ExperimentSpec):
    if spec.metric is not Metric.PRR:
        raise SpecError("PRR runs need metric=prr")
    if spec.model is ModelKind.THREE_GPP:
        raise NotAvailable("PRR needs an NLOS probability, which the 3GPP model lacks")


def _prr_point(n, k):
    p = k / n
    return p, math.sqrt(p * (1.0 - p) / n)


def run_prr_curve(spec: ExperimentSpec, workers: int = 1) -> CurveSeries:
    """Binned PRR: each trial draws d uniformly within its bin."""
    _require_prr(spec)
    edges = prr_bins(spec)
    tasks = [
        (spec, float(lo), float(hi), p, b, n)
        for p, (lo, hi) in enumerate(zip(edges[:-1], edges[1:]))
        for b, n in _blocks(spec.trials_per_point)
    ]
    results = _map(_prr_task, tasks, workers)
    nb = len(_blocks(spec.trials_per_point))
    points = []
    for p, (lo, hi) in enumerate(zip(edges[:-1], edges[1:])):
        chunk = results[p * nb : (p + 1) * nb]
        n = sum(c[0] for c in chunk)
        k = sum(c[1] for c in chunk)
        prr, se = _prr_point(n, k)
        points.append(CurvePoint(float((lo + hi) / 2), prr, se, n))
    return CurveSeries("prr", tuple(points), spec.to_dict())


def prr_at_distance(spec: ExperimentSpec, d: float, point_index: int = 0) -> tuple[float, float, int]:
    """Monte Carlo PRR at a fixed distance; returns ``(prr, stderr, n_trials)``."""
    _require_prr(spec)
    if not 2.0 <= d <= 500.0:
        raise SpecError("distance outside [2, 500] m")
    n = k = 0
    for b, nb in _blocks(spec.trials_per_point):
        nn, kk = _prr_task((spec, d, d, point_index, b, nb))
        n += nn
        k += kk
    prr, se = _prr_point(n, k)
    return prr, se, n


def run_experiment(spec: ExperimentSpec, workers: int = 1) -> CurveSeries | dict[LinkState, CurveSeries]:
    if spec.metric is Metric.PROB:
        return run_probability_curve(spec)
    if spec.metric is Metric.PATHLOSS:
        return run_pathloss_curve(spec, workers)
    return run_prr_curve(spec, workers)

