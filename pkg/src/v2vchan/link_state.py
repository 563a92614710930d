"""LOS / NLOSv / NLOS link-state probabilities and state sampling.

Two models are provided. ``ModelKind.THREE_GPP`` is the density-agnostic
3GPP V2V model, which has no closed form for the NLOS state.
``ModelKind.EXTENDED`` is the density-aware fit with Low/Medium/High traffic
regimes and an explicit NLOS probability.

All probability functions broadcast over numpy arrays of distances.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .scenario import Density, Scenario


class ModelKind(str, enum.Enum):
    THREE_GPP = "3gpp"
    EXTENDED = "extended"


class LinkState(enum.IntEnum):
    LOS = 0
    NLOSV = 1
    NLOS = 2

    @property
    def label(self) -> str:
        return ("los", "nlosv", "nlos")[self.value]

    @classmethod
    def from_label(cls, label: str) -> "LinkState":
        return cls(("los", "nlosv", "nlos").index(label.lower()))


class ConfigurationError(ValueError):
    """Model/scenario/density combination is invalid."""


class NotAvailable(LookupError):
    """The requested quantity has no closed form under the chosen model."""


# (a, b, c) of min{1, max{0, a d^2 + b d + c}}
_HIGHWAY_LOS = {
    Density.LOW: (1.5e-6, -0.0015, 1.0),
    Density.MEDIUM: (2.7e-6, -0.0025, 1.0),
    Density.HIGH: (3.2e-6, -0.003, 1.0),
}
_HIGHWAY_NLOS = {
    Density.LOW: (-2.9e-7, 0.00059, 0.0017),
    Density.MEDIUM: (-3.7e-7, 0.00061, 0.0150),
    Density.HIGH: (-4.1e-7, 0.00067, 0.0),
}
# (a, b) of a * exp(-b d)
_URBAN_LOS = {
    Density.LOW: (0.8548, 0.0064),
    Density.MEDIUM: (0.8372, 0.0114),
    Density.HIGH: (0.8962, 0.0170),
}
# (k, mu, s) of 1 / (k d) * exp(-(ln d - mu)^2 / s)
_URBAN_NLOSV = {
    Density.LOW: (0.0396, 5.2718, 3.4827),
    Density.MEDIUM: (0.0312, 5.0063, 2.4544),
    Density.HIGH: (0.0242, 5.0115, 2.2092),
}


def _clip01(x):
    return np.clip(x, 0.0, 1.0)


def _quad(coeffs, d):
    a, b, c = coeffs
    return _clip01(a * d**2 + b * d + c)


def _resolve(model, scenario, density):
    model = ModelKind(model)
    scenario = Scenario(scenario)
    if model is ModelKind.EXTENDED:
        if density is None:
            raise ConfigurationError("the extended model needs a traffic density")
        density = Density(density)
    return model, scenario, density


def _distances(d):
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0):
        raise ValueError("distance must be positive")
    return d


def _gpp_highway_branches(d):
    near = np.minimum(1.0, 2.1013e-6 * d**2 - 0.002 * d + 1.0193)
    far = np.maximum(0.0, 0.54 - 0.001 * (d - 475.0))
    return near, far


def p_los(model, scenario, density, d):
    model, scenario, density = _resolve(model, scenario, density)
    d = _distances(d)
    if model is ModelKind.THREE_GPP:
        if scenario is Scenario.HIGHWAY:
            near, far = _gpp_highway_branches(d)
            return _clip01(np.where(d <= 475.0, near, far))
        return _clip01(np.minimum(1.0, 1.05 * np.exp(-0.0114 * d)))
    if scenario is Scenario.HIGHWAY:
        return _quad(_HIGHWAY_LOS[density], d)
    a, b = _URBAN_LOS[density]
    return _clip01(a * np.exp(-b * d))


def _urban_nlosv_fit(density, d):
    k, mu, s = _URBAN_NLOSV[density]
    return _clip01(1.0 / (k * d) * np.exp(-((np.log(d) - mu) ** 2) / s))


def p_nlosv(model, scenario, density, d):
    model, scenario, density = _resolve(model, scenario, density)
    d = _distances(d)
    if model is ModelKind.THREE_GPP:
        return 1.0 - p_los(model, scenario, density, d)
    if scenario is Scenario.URBAN:
        return _urban_nlosv_fit(density, d)
    residual = 1.0 - p_los(model, scenario, density, d) - _quad(_HIGHWAY_NLOS[density], d)
    return _clip01(residual)


def p_nlos(model, scenario, density, d):
    """NLOS probability; raises :class:`NotAvailable` for the 3GPP model."""
    model, scenario, density = _resolve(model, scenario, density)
    d = _distances(d)
    if model is ModelKind.THREE_GPP:
        raise NotAvailable("the 3GPP model defines no closed-form NLOS probability")
    if scenario is Scenario.HIGHWAY:
        return _quad(_HIGHWAY_NLOS[density], d)
    residual = 1.0 - p_los(model, scenario, density, d) - _urban_nlosv_fit(density, d)
    return _clip01(residual)


def state_probabilities(model, scenario, density, d):
    """Normalized ``(p_los, p_nlosv, p_nlos)`` stacked along a leading axis.

    Returns ``(probs, raw_sum)`` where ``probs`` has shape ``(3,) + d.shape``
    and ``raw_sum`` is the pre-normalization sum of the clamped components.
    """
    model, scenario, density = _resolve(model, scenario, density)
    d = _distances(d)
    los = p_los(model, scenario, density, d)
    nlosv = p_nlosv(model, scenario, density, d)
    if model is ModelKind.THREE_GPP:
        nlos = np.zeros_like(los)
    else:
        nlos = p_nlos(model, scenario, density, d)
    probs = np.stack([los, nlosv, nlos])
    raw = probs.sum(axis=0)
    if np.any(raw <= 0):
        raise ConfigurationError("state probabilities vanish at the requested distance")
    return probs / raw, raw


@dataclass(frozen=True)
class StateDistribution:
    p_los: float
    p_nlosv: float
    p_nlos: float
    raw_sum: float = 1.0

    def __post_init__(self):
        ps = (self.p_los, self.p_nlosv, self.p_nlos)
        if any(not 0.0 <= p <= 1.0 for p in ps) or abs(sum(ps) - 1.0) > 1e-12:
            raise ValueError(f"invalid state distribution {ps}")

    def as_array(self) -> np.ndarray:
        return np.array([self.p_los, self.p_nlosv, self.p_nlos])

    def __getitem__(self, state: LinkState) -> float:
        return float(self.as_array()[LinkState(state)])


def state_distribution(model, scenario, density, d: float) -> StateDistribution:
    probs, raw = state_probabilities(model, scenario, density, float(d))
    p = [float(x) for x in probs]
    # absorb float residue so the triple sums to 1 to within one ulp
    p[int(np.argmax(p))] += 1.0 - sum(p)
    return StateDistribution(p[0], p[1], p[2], float(raw))


def sample_state(dist: StateDistribution, rng: np.random.Generator) -> LinkState:
    return LinkState(int(sample_states(dist.as_array(), rng)))


def sample_states(probs, rng: np.random.Generator, size=None) -> np.ndarray:
    """Inverse-CDF categorical draw.

    ``probs`` has the three states on its leading axis; any trailing axes
    are broadcast against ``size``. One uniform is consumed per draw.
    """
    probs = np.asarray(probs, dtype=float)
    cdf = np.cumsum(probs, axis=0)
    shape = size if size is not None else probs.shape[1:]
    u = rng.random(shape)
    out = (u >= cdf[0]).astype(np.int8) + (u >= cdf[1])
    # a zero-probability tail state is never picked even if cdf[1] < 1 by rounding
    return np.where(probs[2] > 0, out, np.minimum(out, 1)).astype(np.int8)
