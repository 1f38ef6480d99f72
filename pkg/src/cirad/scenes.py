"""Random target scenes, on-grid and in the continuum."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .config import SystemConfig
from .errors import CardinalityError, PackingError, ShapeError

TWO_PI = 2.0 * np.pi

AMPLITUDE_MODELS = ("unit", "complex_gaussian", "fixed_floor")


@dataclass(frozen=True)
class GridScene:
    """K-sparse coefficient vector on the range-angle grid.

    support holds flat column indices (angle-major, v*N + m);
    amplitudes are the matching nonzero complex values.
    """

    support: np.ndarray
    amplitudes: np.ndarray
    n_cells: int

    def as_vector(self, config: SystemConfig | None = None) -> np.ndarray:
        x = np.zeros(self.n_cells, dtype=np.complex128)
        x[self.support] = self.amplitudes
        return x

    def to_json(self) -> str:
        return json.dumps({
            "support": self.support.tolist(),
            "re": self.amplitudes.real.tolist(),
            "im": self.amplitudes.imag.tolist(),
            "n_cells": self.n_cells,
        })

    @staticmethod
    def from_json(s: str) -> "GridScene":
        d = json.loads(s)
        amps = np.asarray(d["re"]) + 1j * np.asarray(d["im"])
        return GridScene(support=np.asarray(d["support"], dtype=int),
                         amplitudes=amps, n_cells=d["n_cells"])


@dataclass(frozen=True)
class ContinuumScene:
    """Off-grid targets as (delay_seconds, cos_theta, complex amplitude)."""

    targets: tuple

    def to_json(self) -> str:
        return json.dumps([
            {"delay": d, "cos_theta": th, "re": a.real, "im": a.imag}
            for d, th, a in self.targets])

    @staticmethod
    def from_json(s: str) -> "ContinuumScene":
        return ContinuumScene(targets=tuple(
            (t["delay"], t["cos_theta"], t["re"] + 1j * t["im"])
            for t in json.loads(s)))


def _draw_amplitudes(K: int, model: str, rng: np.random.Generator,
                     floor: float = 1.0) -> np.ndarray:
    phases = rng.uniform(0.0, TWO_PI, size=K)
    if model == "unit":
        mags = np.ones(K)
    elif model == "complex_gaussian":
        # CN(0,1) magnitude with an independently drawn uniform phase
        mags = np.abs(rng.standard_normal(K) + 1j * rng.standard_normal(K)) \
            / np.sqrt(2.0)
    elif model == "fixed_floor":
        mags = np.full(K, floor)
    else:
        raise ShapeError(f"unknown amplitude model {model!r}; "
                         f"choose one of {AMPLITUDE_MODELS}")
    return mags * np.exp(1j * phases)


def draw_grid_scene(config: SystemConfig, K: int, amplitude_model: str,
                    rng: np.random.Generator,
                    amplitude_floor: float = 1.0) -> GridScene:
    """Support uniform over size-K subsets of the N*N_theta grid cells."""
    n_cells = config.n_range_bins_N * config.n_angle_bins
    if K > n_cells:
        raise CardinalityError(f"K={K} exceeds grid size {n_cells}")
    support = np.sort(rng.choice(n_cells, size=K, replace=False))
    amps = _draw_amplitudes(K, amplitude_model, rng, amplitude_floor)
    return GridScene(support=support, amplitudes=amps, n_cells=n_cells)


def draw_continuum_scene(config: SystemConfig, K: int,
                         rng: np.random.Generator,
                         amplitude_model: str = "unit",
                         max_attempts: int = 10_000) -> ContinuumScene:
    """K off-grid targets with minimum pairwise separation.

    Delay separation is strictly > 2/B; cos-angle separation is
    >= 2/(NT*NR). In the SISO case there is a single angle cell, all
    angles are fixed at 0 and only the delay separation applies.
    """
    B, tu = config.bandwidth_B, config.unambiguous_tu
    min_delay_sep = 2.0 / B
    siso = config.n_angle_bins == 1
    min_angle_sep = 2.0 / config.n_angle_bins

    if K * min_delay_sep >= tu:
        raise PackingError(
            f"K={K} separated delays cannot fit in t_u={tu} with gap 2/B")

    delays: list = []
    angles: list = []
    attempts = 0
    while len(delays) < K:
        attempts += 1
        if attempts > max_attempts:
            raise PackingError(
                f"rejection sampling exceeded {max_attempts} attempts "
                f"at K={K}")
        d = rng.uniform(min_delay_sep / 2, tu - min_delay_sep / 2)
        th = 0.0 if siso else rng.uniform(-1.0 + 1e-6, 1.0 - 1e-6)
        ok = all(abs(d - d0) > min_delay_sep for d0 in delays)
        if ok and not siso:
            ok = all(abs(th - t0) >= min_angle_sep for t0 in angles)
        if ok:
            delays.append(d)
            angles.append(th)

    amps = _draw_amplitudes(K, amplitude_model, rng)
    targets = tuple((float(d), float(th), complex(a))
                    for d, th, a in zip(delays, angles, amps))
    return ContinuumScene(targets=targets)
