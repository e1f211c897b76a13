"""Access and processing queue dynamics plus traffic generation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ContractViolation

# absolute slack when checking r <= q_A, to absorb float round-off in r = q_A * phi
RATE_SLACK = 1e-12


@dataclass(frozen=True)
class TrafficSpec:
    """Per-UE traffic parameters, all in nats/slot/Hz."""

    mean_arrival: np.ndarray
    max_arrival: float
    processing_rate: np.ndarray
    max_rate: float
    max_service: float

    def __post_init__(self):
        object.__setattr__(self, "mean_arrival", np.asarray(self.mean_arrival, dtype=float))
        object.__setattr__(
            self,
            "processing_rate",
            np.broadcast_to(np.asarray(self.processing_rate, float), self.mean_arrival.shape).copy(),
        )
        if np.any(self.mean_arrival < 0):
            raise ConfigError("must be nonnegative", "traffic.mean_arrival")
        if np.any(2 * self.mean_arrival > self.max_arrival):
            raise ConfigError(
                "uniform arrivals on [0, 2*mean] exceed max_arrival", "traffic.max_arrival"
            )
        if np.any(self.processing_rate < 0):
            raise ConfigError("must be nonnegative", "traffic.processing_rate")
        if np.any(self.processing_rate > self.max_service):
            raise ConfigError("processing rate above max_service", "traffic.max_service")
        if self.max_rate <= 0:
            raise ConfigError("must be positive", "traffic.max_rate")


@dataclass
class QueueState:
    q_access: np.ndarray
    q_processing: np.ndarray
    slot: int = 0

    @classmethod
    def empty(cls, num_ues):
        return cls(np.zeros(num_ues), np.zeros(num_ues), 0)

    def copy(self):
        return QueueState(self.q_access.copy(), self.q_processing.copy(), self.slot)


def draw_arrivals(traffic, rng):
    """Uniform arrivals on ``[0, 2 * mean]`` clipped to ``[0, max_arrival]``."""
    u = rng.random(traffic.mean_arrival.shape)
    return np.clip(2.0 * traffic.mean_arrival * u, 0.0, traffic.max_arrival)


def step_access(q_access, rate, arrival):
    """One slot of the access queue: departures and arrivals applied together."""
    q = np.asarray(q_access, dtype=float)
    r = np.asarray(rate, dtype=float)
    if np.any(r < 0) or np.any(r > q + RATE_SLACK):
        raise ContractViolation("rate must satisfy 0 <= r <= q_A")
    out = np.maximum(q - r, 0.0) + np.asarray(arrival, dtype=float)
    return float(out) if out.ndim == 0 else out


def served(q_processing, processing_rate):
    """Amount the processing queue actually serves: ``min(s_tilde, q_U)``."""
    return np.minimum(processing_rate, q_processing)


def step_processing(q_processing, processing_rate, rate):
    q = np.asarray(q_processing, dtype=float)
    if np.any(np.asarray(rate) < 0):
        raise ContractViolation("rate must be nonnegative")
    out = q - served(q, processing_rate) + np.asarray(rate, dtype=float)
    return float(out) if out.ndim == 0 else out
