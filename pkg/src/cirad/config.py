"""System parameters, consistency checks, and range/angle grids.

All times are seconds and frequencies Hz. The delay grid spans the
unambiguous interval [0, t_u) at resolution 1/B; the angle grid holds
cos(theta) values on [-1, 1).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, asdict, fields

import numpy as np

from .errors import ConsistencyError, RangeError

_COUNT_FIELDS = ("n_range_bins_N", "n_samples_M", "n_tx_NT", "n_rx_NR",
                 "tones_per_tx_Nc", "alias_p", "rng_seed")
_FLOAT_FIELDS = ("bandwidth_B", "pulse_tau", "unambiguous_tu", "carrier_fc",
                 "tx_spacing_dT", "rx_spacing_dR")


@dataclass(frozen=True)
class SystemConfig:
    """Validated physical and sampling parameters plus derived quantities.

    Immutable after construction; safe to share across trial workers.
    Use :func:`build_config` instead of constructing directly so that the
    invariants are checked and the derived fields are consistent.
    """

    bandwidth_B: float
    pulse_tau: float
    unambiguous_tu: float
    n_range_bins_N: int
    n_samples_M: int
    n_tx_NT: int = 1
    n_rx_NR: int = 1
    tones_per_tx_Nc: int = 1
    carrier_fc: float = 10e9          # informational only
    tx_spacing_dT: float = 0.5        # wavelengths
    rx_spacing_dR: float = -1.0       # wavelengths; -1 means 0.5 * n_tx_NT
    alias_p: int = -1                 # -1 means default coprime rule
    rng_seed: int = 0

    # derived
    beta: float = 0.0
    sample_rate_Fs: float = 0.0
    n_angle_bins: int = 0

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @staticmethod
    def from_dict(d: dict) -> "SystemConfig":
        raw = {k: v for k, v in d.items()
               if k in _COUNT_FIELDS or k in _FLOAT_FIELDS}
        return build_config(**raw)


@dataclass(frozen=True)
class Grids:
    """Discrete delay and angle grids for a given config."""

    delay_bins: np.ndarray   # seconds, length N, spacing exactly 1/B
    angle_bins: np.ndarray   # cos(theta) values, length N_theta


def _default_alias_p(pulse_tau: float, unambiguous_tu: float, M: int) -> int:
    p = max(1, round(pulse_tau / unambiguous_tu))
    while math.gcd(p, M) != 1:
        p += 1
    return p


def build_config(**raw) -> SystemConfig:
    """Validate raw parameters and return a config with derived quantities.

    Raises RangeError for nonpositive inputs and ConsistencyError naming
    the violated invariant. Deterministic given inputs.
    """
    unknown = set(raw) - set(_COUNT_FIELDS) - set(_FLOAT_FIELDS)
    if unknown:
        raise RangeError(f"unknown config fields: {sorted(unknown)}")

    defaults = {f.name: f.default for f in fields(SystemConfig)}
    vals = {k: defaults[k] for k in (*_COUNT_FIELDS, *_FLOAT_FIELDS)}
    vals.update(raw)

    missing = [k for k in (*_COUNT_FIELDS, *_FLOAT_FIELDS)
               if not isinstance(vals[k], (int, float))]
    if missing:
        raise RangeError(f"missing required config fields: {sorted(missing)}")

    for k in _COUNT_FIELDS:
        v = vals[k]
        if v != int(v):
            raise RangeError(f"{k} must be integral, got {v!r}")
        vals[k] = int(v)
    for k in _FLOAT_FIELDS:
        vals[k] = float(vals[k])

    B = vals["bandwidth_B"]
    tau = vals["pulse_tau"]
    tu = vals["unambiguous_tu"]
    N = vals["n_range_bins_N"]
    M = vals["n_samples_M"]
    NT = vals["n_tx_NT"]
    NR = vals["n_rx_NR"]
    Nc = vals["tones_per_tx_Nc"]

    for k in ("bandwidth_B", "pulse_tau", "unambiguous_tu", "carrier_fc"):
        if vals[k] <= 0:
            raise RangeError(f"{k} must be positive, got {vals[k]}")
    for k in ("n_range_bins_N", "n_samples_M", "n_tx_NT", "n_rx_NR",
              "tones_per_tx_Nc"):
        if vals[k] <= 0:
            raise RangeError(f"{k} must be positive, got {vals[k]}")
    if vals["rng_seed"] < 0:
        raise RangeError("rng_seed must be nonnegative")

    # N is an explicit input; only approximate agreement with B*t_u is
    # required (published parameter tables round this both ways).
    if abs(N - B * tu) > max(2.0, 0.02 * B * tu) + 1e-9:
        raise ConsistencyError(
            f"n_range_bins_N={N} is not consistent with B*t_u={B * tu:.3f}")
    if not (1 <= M <= N):
        raise ConsistencyError(f"need 1 <= M <= N, got M={M}, N={N}")
    if not (1 <= Nc * NT <= N):
        raise ConsistencyError(
            f"need 1 <= Nc*NT <= N, got Nc*NT={Nc * NT}, N={N}")

    if vals["rx_spacing_dR"] == -1.0:
        vals["rx_spacing_dR"] = 0.5 * NT
    if vals["tx_spacing_dT"] <= 0 or vals["rx_spacing_dR"] <= 0:
        raise RangeError("antenna spacings must be positive")

    if vals["alias_p"] == -1:
        vals["alias_p"] = _default_alias_p(tau, tu, M)
    p = vals["alias_p"]
    if p <= 0:
        raise RangeError(f"alias_p must be positive, got {p}")
    if math.gcd(p, M) != 1:
        raise ConsistencyError(f"gcd(alias_p, M) != 1 for p={p}, M={M}")

    n_theta = NT * NR
    if n_theta > 1 and n_theta % 2 != 0:
        raise ConsistencyError(
            f"N_theta = NT*NR = {n_theta} must be even (or 1 for SISO)")

    beta = B * M / N
    if beta > B + 1e-9:
        raise ConsistencyError(f"derived beta={beta:.4g} exceeds B={B:.4g}")
    Fs = beta * tu / tau
    if Fs <= 0:
        raise ConsistencyError("derived sampling rate F_s must be positive")

    return SystemConfig(beta=beta, sample_rate_Fs=Fs, n_angle_bins=n_theta,
                        **vals)


def make_grids(config: SystemConfig) -> Grids:
    """Delay bins m/B for m = 0..N-1 and angle bins 2v/(NT*NR)."""
    N = config.n_range_bins_N
    delay = np.arange(N) / config.bandwidth_B
    n_theta = config.n_angle_bins
    if n_theta == 1:
        angle = np.zeros(1)
    else:
        v = np.arange(-n_theta // 2, n_theta // 2)
        angle = 2.0 * v / n_theta
    return Grids(delay_bins=delay, angle_bins=angle)


def load_config_file(path: str) -> dict:
    """Parse a key-value config file ('key = value' lines, # comments)."""
    out: dict = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise RangeError(f"{path}:{lineno}: expected 'key = value'")
            key, val = (s.strip() for s in line.split("=", 1))
            out[key] = _parse_value(key, val)
    return out


def _parse_value(key: str, val: str):
    if key in _COUNT_FIELDS:
        return int(val)
    return float(val)


def config_fingerprint(config: SystemConfig) -> str:
    """Short stable hash of the config, used in experiment manifests."""
    import hashlib
    return hashlib.sha256(config.to_json().encode()).hexdigest()[:16]
