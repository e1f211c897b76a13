"""YAML configuration with validated defaults for the two-BST reference setup."""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass

import numpy as np
import yaml

from .controller import LyapunovConfig
from .energy import EnergyPrices
from .errors import ConfigError
from .model import Topology
from .queueing import TrafficSpec

ALGORITHMS = ("tsube", "wolpe", "zfbf")

DEFAULTS = {
    "topology": {
        "num_bsts": 2,
        "ues_per_bst": 3,
        "antennas": 6,
        "inter_bst_distance": 400.0,
        "distance": None,  # optional explicit (M, K) matrix in meters
        "carrier_freq_ghz": 2.1,
        "noise_power_mw": 10 ** (-10.7),
        "pa_efficiency": 0.8,
        "max_tx_power_mw": 400.0,
        "baseband_power_mw": 100.0,
        "edges": None,  # defaults to a chain 0-1-2-...
        "line_efficiency": 0.8,
    },
    "traffic": {
        "mean_arrival": 2.1,
        "processing_rate": 8.0,
        "max_arrival": None,  # defaults to twice the largest mean arrival
        "max_rate": None,  # defaults to the single-user full-power rate
    },
    "energy": {
        "buy_price": 1.6e-9,
        "sell_price": 0.6e-9,
        "harvest_mean_mw": [300.0, 200.0],
    },
    "control": {"V": 0.1, "T": 5, "algorithm": "tsube"},
    "run": {
        "num_slots": 3000,
        "seed": 0,
        "window": 10,
        "output": "trace.csv",
        "slot_ms": 1.0,
        "bst_scale": 1000.0,
    },
}


@dataclass(frozen=True)
class SimConfig:
    topology: Topology
    traffic: TrafficSpec
    prices: EnergyPrices
    harvest_mean: np.ndarray
    control: LyapunovConfig
    algorithm: str
    num_slots: int
    seed: int
    window: int
    output: str
    slot_ms: float
    bst_scale: float
    raw: dict

    def replace(self, **overrides):
        """A new config with dotted-key overrides, e.g. ``{"control.V": 0.5}``."""
        raw = copy.deepcopy(self.raw)
        for key, value in overrides.items():
            section, _, name = key.partition(".")
            raw[section][name] = value
        return build_config(raw)


def _merge(user):
    raw = copy.deepcopy(DEFAULTS)
    if user is None:
        return raw
    if not isinstance(user, dict):
        raise ConfigError("top level must be a mapping", "<root>")
    for section, values in user.items():
        if section not in raw:
            raise ConfigError("unknown section", section)
        if values is None:
            continue
        if not isinstance(values, dict):
            raise ConfigError("section must be a mapping", section)
        for key, value in values.items():
            if key not in raw[section]:
                raise ConfigError("unknown key", f"{section}.{key}")
            raw[section][key] = value
    return raw


def default_distances(num_bsts, ues_per_bst, spacing):
    """BSTs on a line; every UE sits midway between its BST and the next one."""
    pos = spacing * np.arange(num_bsts)
    ue_pos = []
    for m, n in enumerate(ues_per_bst):
        other = m + 1 if m + 1 < num_bsts else m - 1
        x = pos[m] + 0.5 * spacing if other < 0 else 0.5 * (pos[m] + pos[other])
        ue_pos += [x] * n
    return np.abs(pos[:, None] - np.asarray(ue_pos)[None, :])


def _per_bst(value, M, key):
    arr = np.atleast_1d(np.asarray(value, dtype=float))
    if arr.size == 1:
        arr = np.full(M, float(arr[0]))
    if arr.size != M:
        raise ConfigError(f"expected {M} entries, got {arr.size}", key)
    return arr


def build_config(raw):
    t, tr, en, ct, rn = (raw[k] for k in ("topology", "traffic", "energy", "control", "run"))
    try:
        M = int(t["num_bsts"])
    except (TypeError, ValueError):
        raise ConfigError("must be an integer", "topology.num_bsts") from None
    if M < 1:
        raise ConfigError("must be >= 1", "topology.num_bsts")
    upb = t["ues_per_bst"]
    upb = [int(upb)] * M if np.isscalar(upb) else [int(n) for n in upb]
    if len(upb) != M:
        raise ConfigError(f"expected {M} entries", "topology.ues_per_bst")
    K = sum(upb)
    if t["inter_bst_distance"] is None or float(t["inter_bst_distance"]) <= 0:
        raise ConfigError("must be positive", "topology.inter_bst_distance")
    if t["distance"] is None:
        dist = default_distances(M, upb, float(t["inter_bst_distance"]))
    else:
        dist = np.asarray(t["distance"], dtype=float)
        if dist.shape != (M, K):
            raise ConfigError(f"expected shape ({M}, {K})", "topology.distance")
    edges = t["edges"]
    if edges is None:
        edges = [(m, m + 1) for m in range(M - 1)]
    try:
        edges = [tuple(int(x) for x in e) for e in edges]
    except (TypeError, ValueError):
        raise ConfigError("edges must be pairs of BST indices", "topology.edges") from None
    line_eff = np.atleast_1d(np.asarray(t["line_efficiency"], dtype=float))
    if line_eff.size == 1:
        line_eff = np.full(len(edges), float(line_eff[0]))
    if line_eff.size != len(edges):
        raise ConfigError(f"expected {len(edges)} entries", "topology.line_efficiency")
    topology = Topology(
        antennas=int(t["antennas"]),
        ues_per_bst=tuple(upb),
        distance=dist,
        carrier_freq=float(t["carrier_freq_ghz"]),
        noise_power=float(t["noise_power_mw"]),
        pa_efficiency=float(t["pa_efficiency"]),
        max_tx_power=_per_bst(t["max_tx_power_mw"], M, "topology.max_tx_power_mw"),
        baseband_power=_per_bst(t["baseband_power_mw"], M, "topology.baseband_power_mw"),
        edges=tuple(edges),
        line_efficiency=line_eff,
    )

    mean = np.atleast_1d(np.asarray(tr["mean_arrival"], dtype=float))
    mean = np.full(K, float(mean[0])) if mean.size == 1 else mean
    if mean.size != K:
        raise ConfigError(f"expected {K} entries", "traffic.mean_arrival")
    max_arrival = 2.0 * float(mean.max()) if tr["max_arrival"] is None else float(tr["max_arrival"])
    if tr["max_rate"] is None:
        snr = topology.max_tx_power[topology.ue_bst] * topology.antennas * np.max(topology.gain, axis=0)
        max_rate = float(np.max(np.log1p(snr / topology.noise_power)))
    else:
        max_rate = float(tr["max_rate"])
    proc = np.atleast_1d(np.asarray(tr["processing_rate"], dtype=float))
    traffic = TrafficSpec(
        mean_arrival=mean,
        max_arrival=max_arrival,
        processing_rate=proc if proc.size > 1 else float(proc[0]),
        max_rate=max_rate,
        max_service=float(np.max(proc)),
    )

    prices = EnergyPrices(buy=float(en["buy_price"]), sell=float(en["sell_price"]))
    harvest = _per_bst(en["harvest_mean_mw"], M, "energy.harvest_mean_mw")
    if np.any(harvest < 0):
        raise ConfigError("must be nonnegative", "energy.harvest_mean_mw")

    algorithm = str(ct["algorithm"]).lower()
    if algorithm not in ALGORITHMS:
        raise ConfigError(f"must be one of {', '.join(ALGORITHMS)}", "control.algorithm")
    V, T = ct["V"], ct["T"]
    if not isinstance(V, (int, float)) or not math.isfinite(V):
        raise ConfigError("must be a finite number", "control.V")
    if not isinstance(T, int) or isinstance(T, bool):
        raise ConfigError("must be an integer >= 1", "control.T")
    control = LyapunovConfig.from_bounds(
        V=float(V), T=T, max_service=traffic.max_service, max_rate=max_rate,
        max_arrival=max_arrival, num_ues=K,
    )

    num_slots = rn["num_slots"]
    if not isinstance(num_slots, int) or num_slots < 0:
        raise ConfigError("must be a nonnegative integer", "run.num_slots")
    window = rn["window"]
    if not isinstance(window, int) or window < 1:
        raise ConfigError("must be an integer >= 1", "run.window")
    if float(rn["slot_ms"]) <= 0:
        raise ConfigError("must be positive", "run.slot_ms")
    return SimConfig(
        topology=topology,
        traffic=traffic,
        prices=prices,
        harvest_mean=harvest,
        control=control,
        algorithm=algorithm,
        num_slots=num_slots,
        seed=int(rn["seed"]),
        window=window,
        output=str(rn["output"]),
        slot_ms=float(rn["slot_ms"]),
        bst_scale=float(rn["bst_scale"]),
        raw=raw,
    )


def load_config(path=None, overrides=None):
    """Read a YAML file (``None`` or an empty file means all defaults)."""
    user = None
    if path is not None:
        with open(path, encoding="utf-8") as fh:
            try:
                user = yaml.safe_load(fh)
            except yaml.YAMLError as exc:
                raise ConfigError(f"not valid YAML: {exc}", str(path)) from None
    raw = _merge(user)
    for key, value in (overrides or {}).items():
        section, _, name = key.partition(".")
        if section not in raw or name not in raw[section]:
            raise ConfigError("unknown key", key)
        raw[section][name] = value
    return build_config(raw)


def default_config(**overrides):
    return load_config(None, overrides)
