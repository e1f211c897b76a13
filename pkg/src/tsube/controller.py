"""Frame-scale control: the scheduling rule and Lyapunov bookkeeping."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class LyapunovConfig:
    V: float
    T: int
    psi: float

    def __post_init__(self):
        if not self.V > 0:
            raise ConfigError("must be positive", "control.V")
        if int(self.T) != self.T or self.T < 1:
            raise ConfigError("must be an integer >= 1", "control.T")

    @classmethod
    def from_bounds(cls, V, T, max_service, max_rate, max_arrival, num_ues):
        psi = (max_service**2 + 2 * max_rate**2 + max_arrival**2) / 2.0 * num_ues
        return cls(V=V, T=T, psi=psi)


@dataclass(frozen=True)
class FrameSchedule:
    indicator: np.ndarray  # bool per UE

    def active_sets(self, topology):
        bst = topology.ue_bst
        idx = [np.flatnonzero(self.indicator & (bst == m)) for m in range(topology.num_bsts)]
        return [[int(i) - sum(topology.ues_per_bst[:m]) for i in ids] for m, ids in enumerate(idx)]

    @property
    def any(self):
        return bool(np.any(self.indicator))


def schedule_frame(q_access, q_processing):
    """Schedule a UE iff its access backlog is positive and exceeds its processing backlog."""
    qa = np.asarray(q_access, dtype=float)
    qu = np.asarray(q_processing, dtype=float)
    return FrameSchedule(indicator=(qa > 0) & (qu - qa < 0))


def lyapunov_value(q_access, q_processing):
    qa = np.asarray(q_access, dtype=float)
    qu = np.asarray(q_processing, dtype=float)
    return 0.5 * float(qa @ qa) + 0.5 * float(qu @ qu)


@dataclass(frozen=True)
class DriftTerms:
    drift: float  # realized L[k+1] - L[k]
    identity: float  # sum over queues of 0.5*net^2 + q[k]*net
    access_inner: float  # sum_t (nu - r)^T q_A[k]
    processing_inner: float  # sum_t (r - s)^T q_U[k]
    q_access_next: np.ndarray
    q_processing_next: np.ndarray


def drift_terms(q_access, q_processing, arrivals, rates, services, frame_length=None):
    """Frame drift and the inner-product terms of the drift-plus-penalty bound.

    ``arrivals``, ``rates`` and ``services`` are ``(T, K)`` arrays covering every
    slot of the frame; ``services`` holds the realized ``min(s_tilde, q_U)``.
    """
    nu, r, s = (np.atleast_2d(np.asarray(x, dtype=float)) for x in (arrivals, rates, services))
    if not (nu.shape == r.shape == s.shape):
        raise ValueError("arrival, rate and service traces must share one shape")
    if frame_length is not None and nu.shape[0] != frame_length:
        raise ValueError(f"incomplete frame: {nu.shape[0]} of {frame_length} slots")
    qa = np.asarray(q_access, dtype=float)
    qu = np.asarray(q_processing, dtype=float)
    net_a = (nu - r).sum(axis=0)
    net_u = (r - s).sum(axis=0)
    qa_next = qa + net_a
    qu_next = qu + net_u
    drift = lyapunov_value(qa_next, qu_next) - lyapunov_value(qa, qu)
    identity = float(np.sum(0.5 * net_a**2 + qa * net_a) + np.sum(0.5 * net_u**2 + qu * net_u))
    return DriftTerms(
        drift=drift,
        identity=identity,
        access_inner=float(net_a @ qa),
        processing_inner=float(net_u @ qu),
        q_access_next=qa_next,
        q_processing_next=qu_next,
    )
