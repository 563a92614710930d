"""Stochastic V2V mmWave channel models and a Monte Carlo curve simulator."""

from .engine import CurvePoint, CurveSeries, ExperimentSpec, Metric, StateMode
from .link_budget import RadioConfig
from .link_state import LinkState, ModelKind, NotAvailable, StateDistribution
from .scenario import Density, RoadConfig, Scenario, TrafficConfig, VehicleClass, VehicleKind

__version__ = "0.1.0"
