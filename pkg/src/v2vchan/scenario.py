"""Road geometry, vehicle classes and the random vehicle-dropping process."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np


class Scenario(str, enum.Enum):
    URBAN = "urban"
    HIGHWAY = "highway"


class Density(str, enum.Enum):
    LOW = "low"
    MEDIUM = "medium"
    HIGH = "high"


class VehicleKind(str, enum.Enum):
    TYPE1 = "type1"
    TYPE2 = "type2"
    TYPE3 = "type3"


MIN_GAP_M = 2.0
HEADWAY_S = 2.0


@dataclass(frozen=True)
class VehicleClass:
    kind: VehicleKind
    length: float
    width: float
    height: float
    antenna_height: float

    def __post_init__(self):
        if self.antenna_height <= 0 or self.antenna_height > self.height + 0.5:
            raise ValueError(
                f"antenna height {self.antenna_height} m incompatible with "
                f"vehicle height {self.height} m"
            )


# Type 1 carries a bumper-mounted antenna; the other two are rooftop.
VEHICLE_CLASSES: dict[VehicleKind, VehicleClass] = {
    VehicleKind.TYPE1: VehicleClass(VehicleKind.TYPE1, 5.0, 2.0, 1.6, 0.5),
    VehicleKind.TYPE2: VehicleClass(VehicleKind.TYPE2, 5.0, 2.0, 1.6, 1.6),
    VehicleKind.TYPE3: VehicleClass(VehicleKind.TYPE3, 13.0, 2.6, 3.0, 3.0),
}


def vehicle_class(kind) -> VehicleClass:
    return VEHICLE_CLASSES[VehicleKind(kind)]


@dataclass(frozen=True)
class RoadConfig:
    scenario_kind: Scenario
    lanes_per_direction: int
    lane_width: float
    road_length: float = 1000.0
    directions: int = 2

    def __post_init__(self):
        if self.lane_width <= 0:
            raise ValueError("lane_width must be positive")
        if self.lanes_per_direction < 1:
            raise ValueError("lanes_per_direction must be at least 1")
        if self.road_length < 0:
            raise ValueError("road_length must be non-negative")
        if self.directions != 2:
            raise ValueError("roads are always two-directional")

    @property
    def n_lanes(self) -> int:
        return self.lanes_per_direction * self.directions

    @classmethod
    def default(cls, scenario, road_length: float = 1000.0) -> "RoadConfig":
        scenario = Scenario(scenario)
        if scenario is Scenario.URBAN:
            return cls(scenario, 2, 3.5, road_length)
        return cls(scenario, 3, 4.0, road_length)


def default_mean_speed(scenario) -> float:
    """Default average speed in m/s (50 km/h urban, 100 km/h highway)."""
    kmh = 50.0 if Scenario(scenario) is Scenario.URBAN else 100.0
    return kmh / 3.6


def _normalize_mix(type_mix: Mapping) -> dict[VehicleKind, float]:
    mix = {VehicleKind(k): float(v) for k, v in type_mix.items()}
    if any(v < 0 for v in mix.values()):
        raise ValueError("type_mix fractions must be non-negative")
    if abs(sum(mix.values()) - 1.0) > 1e-9:
        raise ValueError(f"type_mix fractions sum to {sum(mix.values())}, not 1")
    return mix


@dataclass(frozen=True)
class TrafficConfig:
    mean_speed: float = 50.0 / 3.6
    density: Density = Density.MEDIUM
    type_mix: Mapping[VehicleKind, float] = field(
        default_factory=lambda: {VehicleKind.TYPE2: 1.0}
    )

    def __post_init__(self):
        if not self.mean_speed >= 0:
            raise ValueError("mean_speed must be non-negative")
        object.__setattr__(self, "density", Density(self.density))
        object.__setattr__(self, "type_mix", _normalize_mix(self.type_mix))

    @property
    def mean_gap(self) -> float:
        """Mean of the exponential bumper gap before clamping, in meters."""
        return self.mean_speed * HEADWAY_S

    def kinds_and_probs(self) -> tuple[list[VehicleKind], np.ndarray]:
        kinds = sorted(self.type_mix, key=lambda k: k.value)
        return kinds, np.array([self.type_mix[k] for k in kinds])


@dataclass(frozen=True)
class VehiclePlacement:
    lane_index: int
    longitudinal_position: float
    vclass: VehicleClass

    @property
    def rear_position(self) -> float:
        return self.longitudinal_position - self.vclass.length


def draw_classes(traffic: TrafficConfig, rng: np.random.Generator, size=None):
    """Draw vehicle classes i.i.d. from the traffic type mix."""
    kinds, probs = traffic.kinds_and_probs()
    idx = rng.choice(len(kinds), size=size, p=probs)
    if size is None:
        return VEHICLE_CLASSES[kinds[idx]]
    return [VEHICLE_CLASSES[kinds[i]] for i in np.ravel(idx)]


def draw_gaps(traffic: TrafficConfig, rng: np.random.Generator, size=None):
    """``max(2 m, Exp(mean = 2 s * mean_speed))`` bumper-to-bumper gaps."""
    if traffic.mean_gap == 0:
        return np.full(size, MIN_GAP_M) if size is not None else MIN_GAP_M
    return np.maximum(MIN_GAP_M, rng.exponential(traffic.mean_gap, size=size))


def drop_vehicles(
    road: RoadConfig, traffic: TrafficConfig, rng: np.random.Generator
) -> list[VehiclePlacement]:
    """Fill every lane of ``road`` with vehicles until the road length is used up.

    The first vehicle in a lane has its rear bumper at 0. Placements are
    returned grouped by lane and sorted by position within a lane.
    """
    placements: list[VehiclePlacement] = []
    if road.road_length == 0:
        return placements
    for lane in range(road.n_lanes):
        rear, prev_front = 0.0, None
        while True:
            vc = draw_classes(traffic, rng)
            front = rear + vc.length
            # keep the gap recomputed from stored fronts >= 2 m under rounding
            while prev_front is not None and (front - vc.length) - prev_front < MIN_GAP_M:
                front = np.nextafter(front, np.inf)
            if front > road.road_length:
                break
            placements.append(VehiclePlacement(lane, float(front), vc))
            prev_front = float(front)
            rear = front + float(draw_gaps(traffic, rng))
    return placements


def lane_gaps(placements: Sequence[VehiclePlacement]) -> dict[int, np.ndarray]:
    """Bumper-to-bumper gaps between consecutive vehicles, per lane."""
    by_lane: dict[int, list[VehiclePlacement]] = {}
    for p in placements:
        by_lane.setdefault(p.lane_index, []).append(p)
    out = {}
    for lane, ps in by_lane.items():
        ps.sort(key=lambda p: p.longitudinal_position)
        out[lane] = np.array(
            [b.rear_position - a.longitudinal_position for a, b in zip(ps, ps[1:])]
        )
    return out


def pick_pair_at_distance(
    placements: Sequence[VehiclePlacement],
    d: float,
    traffic: TrafficConfig,
    rng: np.random.Generator,
    road: RoadConfig | None = None,
    same_lane: bool = True,
) -> tuple[VehiclePlacement, VehiclePlacement]:
    """Return a TX/RX pair separated longitudinally by exactly ``d`` meters.

    The transmitter is taken at random from ``placements`` when any exist,
    otherwise it is synthesized in lane 0. The receiver is always synthetic,
    in the transmitter's lane or, with ``same_lane=False``, an adjacent lane
    of the same direction when one exists.
    """
    if not 2.0 <= d <= 500.0:
        raise ValueError(f"distance {d} m outside the supported range [2, 500] m")
    if placements:
        tx = placements[int(rng.integers(len(placements)))]
    else:
        tx = VehiclePlacement(0, 0.0, draw_classes(traffic, rng))
    lane = tx.lane_index
    if not same_lane:
        per_dir = road.lanes_per_direction if road is not None else 1
        base = (lane // per_dir) * per_dir
        neighbours = [l for l in (lane - 1, lane + 1) if base <= l < base + per_dir]
        if neighbours:
            lane = neighbours[int(rng.integers(len(neighbours)))]
    rx = VehiclePlacement(lane, tx.longitudinal_position + d, draw_classes(traffic, rng))
    return tx, rx


def pick_blocker_class(traffic: TrafficConfig, rng: np.random.Generator) -> VehicleClass:
    return draw_classes(traffic, rng)

