"""Random waveform design: tone selection, phases, transmitter assignment.

Each of the N candidate tones is either kept or dropped; kept tones carry
an i.i.d. uniform phase and are routed to a transmitter by a deterministic
round-robin rule, so the same tone index always lands on the same
transmitter across draws.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .config import SystemConfig
from .errors import ProbabilityError

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True, eq=False)
class ToneAssignment:
    """One realization of the random tone selection.

    coeffs[i] = selected[i] * exp(j * phases[i]); tx_map[i] is the
    transmitter index for tone i and depends only on (i, n_tx).
    """

    selected: np.ndarray       # bool, length N
    phases: np.ndarray         # radians in [0, 2pi), length N
    coeffs: np.ndarray         # complex, length N
    tx_map: np.ndarray         # int, length N
    expected_count: int        # Nc * NT

    def to_json(self) -> str:
        idx = np.flatnonzero(self.selected)
        return json.dumps({
            "n": int(self.selected.size),
            "n_tx": int(self.tx_map.max()) + 1,
            "selected_indices": idx.tolist(),
            "phases": self.phases[idx].tolist(),
            "expected_count": self.expected_count,
        })

    @staticmethod
    def from_json(s: str) -> "ToneAssignment":
        d = json.loads(s)
        n = d["n"]
        selected = np.zeros(n, dtype=bool)
        phases = np.zeros(n)
        idx = np.asarray(d["selected_indices"], dtype=int)
        selected[idx] = True
        phases[idx] = np.asarray(d["phases"])
        coeffs = np.where(selected, np.exp(1j * phases), 0.0 + 0.0j)
        tx_map = np.arange(n) % d["n_tx"]
        return ToneAssignment(selected=selected, phases=phases, coeffs=coeffs,
                              tx_map=tx_map,
                              expected_count=d["expected_count"])


def assign_transmitters(i: int, config: SystemConfig) -> int:
    """Deterministic tone-to-transmitter rule: round robin over tone index."""
    if not 0 <= i < config.n_range_bins_N:
        raise IndexError(f"tone index {i} out of range")
    return i % config.n_tx_NT


def draw_tones(config: SystemConfig, rng: np.random.Generator,
               exact_count: bool = False) -> ToneAssignment:
    """Draw one tone realization from the given stream.

    Default is the independent-Bernoulli selection with probability
    Nc*NT/N per tone. With exact_count=True, exactly Nc*NT tones are
    chosen uniformly without replacement instead.
    """
    N = config.n_range_bins_N
    n_active = config.tones_per_tx_Nc * config.n_tx_NT
    if n_active > N:
        raise ProbabilityError(
            f"Nc*NT={n_active} exceeds N={N}; selection probability > 1")

    if exact_count:
        selected = np.zeros(N, dtype=bool)
        selected[rng.choice(N, size=n_active, replace=False)] = True
    else:
        selected = rng.random(N) < (n_active / N)
    phases = rng.uniform(0.0, TWO_PI, size=N)
    coeffs = np.where(selected, np.exp(1j * phases), 0.0 + 0.0j)
    tx_map = np.arange(N) % config.n_tx_NT
    return ToneAssignment(selected=selected, phases=phases, coeffs=coeffs,
                          tx_map=tx_map, expected_count=n_active)


def trial_rng(master_seed: int, trial_index: int) -> np.random.Generator:
    """Per-trial stream derived from (master_seed, trial_index).

    Streams are reproducible and independent of trial execution order.
    """
    return np.random.default_rng(np.random.SeedSequence([master_seed,
                                                         trial_index]))
