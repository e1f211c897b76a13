"""Zero-forcing beamforming benchmark and the variant without power-line exchange."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleError, NullSpaceError
from .slot_solver import (
    _Evaluator,
    _exchange_decision,
    _idle_decision,
    f_phi,
    search_phi,
    single_user_bound,
    tsube_slot,
)


@dataclass(frozen=True)
class ZfDirections:
    ues: np.ndarray  # global indices of the UEs with a direction
    u: np.ndarray  # (len(ues), L) unit-norm directions
    gain: np.ndarray  # |h^H u| = ||Xi^H h||


def zf_directions(channel, scheduled, topology, rank_tol=1e-10):
    """Beam directions in the null space of every other scheduled UE's channel.

    For UE ``i`` the stacked matrix holds the channels from ``i``'s serving BST
    to all other scheduled UEs; its null-space basis ``Xi`` comes from an SVD
    and ``u = Xi Xi^H h / ||Xi^H h||``.
    """
    h = getattr(channel, "h", channel)
    h = np.asarray(h, dtype=complex)
    ues = np.flatnonzero(np.asarray(scheduled, dtype=bool))
    L = topology.antennas
    bst = topology.ue_bst
    U = np.zeros((len(ues), L), dtype=complex)
    g = np.zeros(len(ues))
    for k, i in enumerate(ues):
        own = h[bst[i], i]
        others = h[bst[i], np.delete(ues, k)]  # rows h^H are the constraints
        if len(others):
            _, s, vh = np.linalg.svd(others.conj(), full_matrices=True)
            rank = int(np.sum(s > rank_tol * max(s[0], 1e-300)))
            xi = vh[rank:].conj().T  # (L, L - rank) orthonormal null-space basis
        else:
            rank = 0
            xi = np.eye(L, dtype=complex)
        proj = xi.conj().T @ own
        gain = float(np.linalg.norm(proj))
        if xi.shape[1] == 0 or gain <= rank_tol * max(np.linalg.norm(own), 1e-300):
            raise NullSpaceError(int(i), L - rank)
        U[k] = xi @ proj / gain
        g[k] = gain
    return ZfDirections(ues=ues, u=U, gain=g)


def _zf_powers(problem, zf, phi):
    """Per-UE powers meeting the SNR targets, aligned with ``zf.ues``."""
    gamma = np.asarray(f_phi(problem.q_access[zf.ues], phi), float) ** 2
    return gamma * problem.topology.noise_power[zf.ues] / zf.gain**2


def zf_margin(problem, zf, phi):
    """Largest per-BST ratio of required power to ``P^max`` under zero forcing."""
    p = _zf_powers(problem, zf, phi)
    if not np.all(np.isfinite(p)):
        return np.inf
    topo = problem.topology
    per_bst = np.bincount(topo.ue_bst[zf.ues], weights=p, minlength=topo.num_bsts)
    return float(np.max(per_bst / topo.max_tx_power))


class ZfEvaluator(_Evaluator):
    def __init__(self, problem):
        super().__init__(problem)
        self.zf = zf_directions(problem.channel, problem.scheduled, problem.topology)
        self._solves = 0

    def upper_bound(self):
        return single_user_bound(self.problem)

    def margin(self, phi):
        self._solves += 1
        return zf_margin(self.problem, self.zf, phi)

    def solve(self, phi):
        self._solves += 1
        p = _zf_powers(self.problem, self.zf, phi)
        topo = self.problem.topology
        per_bst = np.bincount(topo.ue_bst[self.zf.ues], weights=p, minlength=topo.num_bsts)
        if not np.all(np.isfinite(p)) or np.any(per_bst > topo.max_tx_power * (1 + 1e-9)):
            raise InfeasibleError(f"zero-forcing powers exceed the limit at phi={phi}")
        beams = np.zeros((topo.num_ues, topo.antennas), dtype=complex)
        h_own = self.problem.channel[topo.ue_bst[self.zf.ues], self.zf.ues]
        resp = np.einsum("il,il->i", h_own.conj(), self.zf.u)
        phase = np.conj(resp) / np.abs(resp)
        beams[self.zf.ues] = self.zf.u * (np.sqrt(p) * phase)[:, None]
        return _exchange_decision(self.problem, beams, phi, solves=self._solves)

    @property
    def solves(self):
        return self._solves


def zfbf_slot(problem):
    """Slot decision with zero-forcing directions and closed-form powers."""
    if not problem.scheduled.any():
        return _idle_decision(problem)
    if not problem.active.any():
        return _idle_decision(problem)
    return search_phi(problem, ZfEvaluator(problem))


def wolpe_slot(problem):
    """Slot decision with every power-line flow fixed to zero."""
    return tsube_slot(problem.with_exchange(False))
