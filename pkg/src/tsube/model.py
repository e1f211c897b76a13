"""Network topology, block-fading channels and physical-layer formulas.

UEs are addressed by a flat global index ``i``; ``Topology.ue_bst[i]`` is the
serving BST and ``Topology.ue_labels[i]`` the ``(m, n)`` pair.  Channel tensors
have shape ``(M, K, L)``: ``h[j, i]`` is the channel from BST ``j``'s array to
UE ``i``.  Beam matrices have shape ``(K, L)`` with zero rows for UEs that are
not scheduled.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

__all__ = [
    "Topology",
    "ChannelRealization",
    "pathloss_db",
    "path_gain",
    "draw_channels",
    "sinr",
    "sinr_all",
    "interference",
    "rate",
    "circuit_power",
    "bst_power",
    "bst_powers",
]


def pathloss_db(d, f_c):
    """Large-scale pathloss in dB for distance ``d`` (m) and carrier ``f_c`` (GHz)."""
    d = np.asarray(d, dtype=float)
    f_c = np.asarray(f_c, dtype=float)
    if np.any(d <= 0) or np.any(f_c <= 0):
        raise ValueError("pathloss needs strictly positive distance and carrier frequency")
    out = 17.3 + 38.3 * np.log10(d) + 24.9 * np.log10(f_c)
    return float(out) if out.ndim == 0 else out


def path_gain(d, f_c):
    """Linear channel power gain ``1/omega`` matching :func:`pathloss_db`."""
    return 10.0 ** (-np.asarray(pathloss_db(d, f_c)) / 10.0)


def circuit_power(baseband_power, num_antennas):
    """Static circuit consumption ``P_sp * (0.87 + 0.1 L + 0.03 L^2)`` in mW."""
    L = num_antennas
    return np.asarray(baseband_power, dtype=float) * (0.87 + 0.1 * L + 0.03 * L * L)


@dataclass(frozen=True)
class Topology:
    """Static description of the BSTs, their UEs and the local power lines.

    ``distance[j, i]`` is the distance in meters from BST ``j`` to UE ``i``.
    ``edges`` lists undirected power lines as ``(m, l)`` with ``m < l``; the
    efficiency of edge ``e`` is ``line_efficiency[e]``.
    """

    antennas: int
    ues_per_bst: tuple
    distance: np.ndarray
    carrier_freq: float
    noise_power: np.ndarray
    pa_efficiency: float
    max_tx_power: np.ndarray
    baseband_power: np.ndarray
    edges: tuple = ()
    line_efficiency: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        M = len(self.ues_per_bst)
        set_ = lambda name, value: object.__setattr__(self, name, value)
        set_("ues_per_bst", tuple(int(n) for n in self.ues_per_bst))
        K = sum(self.ues_per_bst)
        set_("distance", np.asarray(self.distance, dtype=float).reshape(M, K))
        set_("noise_power", np.broadcast_to(np.asarray(self.noise_power, float), (K,)).copy())
        set_("max_tx_power", np.broadcast_to(np.asarray(self.max_tx_power, float), (M,)).copy())
        set_("baseband_power", np.broadcast_to(np.asarray(self.baseband_power, float), (M,)).copy())
        edges = tuple(tuple(sorted((int(a), int(b)))) for a, b in self.edges)
        set_("edges", edges)
        set_(
            "line_efficiency",
            np.broadcast_to(np.asarray(self.line_efficiency, float), (len(edges),)).copy(),
        )
        self._validate()

    def _validate(self):
        M = self.num_bsts
        if M < 1 or self.antennas < 1:
            raise ConfigError("need at least one BST and one antenna", "topology")
        if any(n < 0 for n in self.ues_per_bst):
            raise ConfigError("negative UE count", "topology.ues_per_bst")
        if not 0 < self.pa_efficiency <= 1:
            raise ConfigError("must lie in (0, 1]", "topology.pa_efficiency")
        if self.carrier_freq <= 0:
            raise ConfigError("must be positive", "topology.carrier_freq_ghz")
        for name in ("distance", "noise_power", "max_tx_power", "baseband_power"):
            if np.any(getattr(self, name) <= 0) or not np.all(np.isfinite(getattr(self, name))):
                raise ConfigError("entries must be finite and strictly positive", f"topology.{name}")
        if len(set(self.edges)) != len(self.edges):
            raise ConfigError("duplicate power line", "topology.edges")
        for m, l in self.edges:
            if m == l or not (0 <= m < M and 0 <= l < M):
                raise ConfigError(f"bad power line ({m}, {l})", "topology.edges")
        if np.any(self.line_efficiency <= 0) or np.any(self.line_efficiency >= 1):
            raise ConfigError("must lie strictly inside (0, 1)", "topology.line_efficiency")

    @property
    def num_bsts(self):
        return len(self.ues_per_bst)

    @property
    def num_ues(self):
        return sum(self.ues_per_bst)

    @property
    def ue_bst(self):
        return np.repeat(np.arange(self.num_bsts), self.ues_per_bst)

    @property
    def ue_labels(self):
        return [(m, n) for m, N in enumerate(self.ues_per_bst) for n in range(N)]

    def ue_index(self, m, n):
        if not 0 <= n < self.ues_per_bst[m]:
            raise IndexError(f"BST {m} has no UE {n}")
        return sum(self.ues_per_bst[:m]) + n

    @property
    def neighbor_sets(self):
        nbrs = [set() for _ in range(self.num_bsts)]
        for m, l in self.edges:
            nbrs[m].add(l)
            nbrs[l].add(m)
        return [frozenset(s) for s in nbrs]

    @property
    def circuit_power(self):
        return circuit_power(self.baseband_power, self.antennas)

    @property
    def gain(self):
        """Linear path gain ``1/omega`` per (BST, UE) pair."""
        return path_gain(self.distance, self.carrier_freq)


@dataclass(frozen=True)
class ChannelRealization:
    h: np.ndarray
    slot: int = 0


def draw_channels(topology, rng, slot=0):
    """Draw i.i.d. CSCG channels ``CN(0, omega^-1 I_L)`` for every (BST, UE) pair."""
    M, K, L = topology.num_bsts, topology.num_ues, topology.antennas
    scale = np.sqrt(topology.gain / 2.0)[:, :, None]
    z = rng.standard_normal((M, K, L, 2))
    return ChannelRealization(h=scale * (z[..., 0] + 1j * z[..., 1]), slot=slot)


def _cross_gains(topology, h, beams):
    # G[i, j] = |h_{bst(j) -> i}^H w_j|^2
    hb = h[topology.ue_bst]  # (K_tx, K_rx, L): channel from UE j's BST to every UE
    amp = np.einsum("jil,jl->ij", hb.conj(), beams)
    return np.abs(amp) ** 2


def interference(topology, channel, scheduled, beams):
    """Return ``(signal, intra, inter)`` power vectors for every UE."""
    h = channel.h if isinstance(channel, ChannelRealization) else np.asarray(channel)
    a = np.asarray(scheduled, dtype=float)
    beams = np.asarray(beams, dtype=complex) * np.sqrt(a)[:, None]
    G = _cross_gains(topology, h, beams)
    bst = topology.ue_bst
    same = bst[:, None] == bst[None, :]
    off = ~np.eye(len(bst), dtype=bool)
    signal = a * np.diag(G)
    intra = np.where(same & off, G, 0.0).sum(axis=1)
    inter = np.where(~same, G, 0.0).sum(axis=1)
    return signal, intra, inter


def sinr_all(topology, channel, scheduled, beams):
    signal, intra, inter = interference(topology, channel, scheduled, beams)
    return signal / (intra + inter + topology.noise_power)


def sinr(topology, channel, scheduled, beams, ue):
    """SINR of one UE; ``ue`` is a global index or an ``(m, n)`` pair."""
    i = topology.ue_index(*ue) if isinstance(ue, tuple) else int(ue)
    return float(sinr_all(topology, channel, scheduled, beams)[i])


def rate(sinr_value):
    """Achievable rate in nats per slot per Hz."""
    s = np.asarray(sinr_value, dtype=float)
    if np.any(s < 0):
        raise ValueError("SINR must be nonnegative")
    out = np.log1p(s)
    return float(out) if out.ndim == 0 else out


def bst_powers(beams, topology):
    """Consumed power of every BST (mW): PA-scaled transmit power plus circuit power."""
    tx = np.bincount(
        topology.ue_bst,
        weights=np.sum(np.abs(np.asarray(beams)) ** 2, axis=1),
        minlength=topology.num_bsts,
    )
    return tx / topology.pa_efficiency + topology.circuit_power


def bst_power(beams, m, topology):
    return float(bst_powers(beams, topology)[m])
