"""Closed-form M/M/1 steady-state analytics.

All rates are in files per unit time. Every function is pure; parameters
with ``arrival_rate >= service_rate`` are rejected with
:class:`SaturatedQueueError` instead of returning ``inf``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "QueueParameters",
    "SaturatedQueueError",
    "SteadyStateMetrics",
    "StateDistribution",
    "check_stability",
    "utilization",
    "state_probability",
    "state_distribution",
    "mean_in_system",
    "mean_response_time",
    "mean_wait",
    "mean_queue_length",
    "metrics",
]


class SaturatedQueueError(ValueError):
    """Raised when a steady-state quantity is requested for rho >= 1."""

    def __init__(self, params: QueueParameters):
        self.params = params
        super().__init__(
            f"saturated queue: arrival_rate={params.arrival_rate!r} >= "
            f"service_rate={params.service_rate!r} (rho={params.arrival_rate / params.service_rate:.6g})"
        )


@dataclass(frozen=True)
class QueueParameters:
    arrival_rate: float
    service_rate: float

    def __post_init__(self):
        lam, mu = self.arrival_rate, self.service_rate
        if not (math.isfinite(lam) and math.isfinite(mu)):
            raise ValueError(f"rates must be finite, got lambda={lam!r}, mu={mu!r}")
        if lam < 0:
            raise ValueError(f"arrival_rate must be >= 0, got {lam!r}")
        if mu <= 0:
            raise ValueError(f"service_rate must be > 0, got {mu!r}")

    @property
    def rho(self) -> float:
        return self.arrival_rate / self.service_rate

    @property
    def stable(self) -> bool:
        return self.arrival_rate < self.service_rate


@dataclass(frozen=True)
class SteadyStateMetrics:
    """Bundle of the steady-state quantities of one station.

    ``mean_response_time`` is ``nan`` only for the oracle's zero-arrival
    case, where ``T = N / lambda`` is undefined.
    """

    utilization: float
    mean_in_system: float
    mean_response_time: float
    mean_wait: float
    mean_queue_length: float
    prob_empty: float

    def as_dict(self) -> dict[str, float]:
        return {
            "rho": self.utilization,
            "T": self.mean_response_time,
            "W": self.mean_wait,
            "N": self.mean_in_system,
            "N_Q": self.mean_queue_length,
            "P0": self.prob_empty,
        }


@dataclass(frozen=True)
class StateDistribution:
    """Leading entries P_0..P_{len-1} of the geometric state distribution."""

    state_probabilities: tuple[float, ...]

    def __len__(self):
        return len(self.state_probabilities)

    def __getitem__(self, i):
        return self.state_probabilities[i]


def _require_stable(params: QueueParameters) -> None:
    if not params.stable:
        raise SaturatedQueueError(params)


def check_stability(params: QueueParameters) -> bool:
    return params.arrival_rate < params.service_rate


def utilization(params: QueueParameters) -> float:
    """Fraction of time the server is busy, ``lambda / mu``."""
    return params.arrival_rate / params.service_rate


def state_probability(params: QueueParameters, i: int) -> float:
    """P(i files in system) = (1 - rho) * rho**i."""
    if i < 0:
        raise ValueError(f"state index must be >= 0, got {i}")
    _require_stable(params)
    rho = utilization(params)
    return (1.0 - rho) * rho**i


def state_distribution(params: QueueParameters, count: int) -> StateDistribution:
    if count < 0:
        raise ValueError(f"count must be >= 0, got {count}")
    return StateDistribution(tuple(state_probability(params, i) for i in range(count)))


def mean_in_system(params: QueueParameters) -> float:
    _require_stable(params)
    rho = utilization(params)
    return rho / (1.0 - rho)


def mean_response_time(params: QueueParameters) -> float:
    _require_stable(params)
    return 1.0 / (params.service_rate - params.arrival_rate)


def mean_wait(params: QueueParameters) -> float:
    _require_stable(params)
    return utilization(params) / (params.service_rate - params.arrival_rate)


def mean_queue_length(params: QueueParameters) -> float:
    _require_stable(params)
    rho = utilization(params)
    return rho * rho / (1.0 - rho)


def metrics(params: QueueParameters) -> SteadyStateMetrics:
    """All steady-state quantities at once.

    Raises:
        SaturatedQueueError: if ``arrival_rate >= service_rate``.
    """
    _require_stable(params)
    rho = utilization(params)
    return SteadyStateMetrics(
        utilization=rho,
        mean_in_system=mean_in_system(params),
        mean_response_time=mean_response_time(params),
        mean_wait=mean_wait(params),
        mean_queue_length=mean_queue_length(params),
        prob_empty=1.0 - rho,
    )
