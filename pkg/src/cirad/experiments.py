"""Monte Carlo sweeps: coherence, phase transitions, ROC/AUC maps, off-grid.

Each sweep is a grid of parameter cells times a number of independent
trials. Trials are pure functions of (experiment, base config, cell,
master_seed, cell_index, trial_index), so any trial can be replayed
bitwise from its record. Aggregation is order-independent, which makes
the aggregate CSV byte-identical across --jobs settings.
"""

from __future__ import annotations

import json
import os
import subprocess
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .adcg import AdcgConfig, run_adcg
from .config import SystemConfig, build_config, config_fingerprint
from .diagnostics import make_toeplitz_baseline, mutual_coherence
from .errors import SpecError
from .illumination import draw_tones
from .lasso import LassoConfig, polish, solve_lasso
from .metrics import (SPEED_OF_LIGHT, offgrid_metrics, performance_profile,
                      reconstruction_error, roc_curve)
from .operator import assemble_matrix, sigma_for_snr_db, synthesize
from .scenes import draw_continuum_scene, draw_grid_scene

SUCCESS_REC_ERR = 1e-5     # noiseless exact-recovery threshold
SUCCESS_AUC = 0.95         # detection-map success threshold

EXPERIMENT_NAMES = ("coherence_sweep", "phase_transition_noiseless",
                    "auc_vs_snr", "auc_vs_undersampling", "mimo_roc",
                    "rip_auc_map", "offgrid_profile")

# Desk-scale base configs; anything can be overridden from the sweep spec.
_BASE_CONFIGS = {
    "coherence_sweep": dict(bandwidth_B=100.0, pulse_tau=10.0,
                            unambiguous_tu=1.0, n_range_bins_N=100,
                            n_samples_M=30),
    "phase_transition_noiseless": dict(bandwidth_B=64.0, pulse_tau=10.0,
                                       unambiguous_tu=1.0, n_range_bins_N=64,
                                       n_samples_M=32, tones_per_tx_Nc=20),
    "auc_vs_snr": dict(bandwidth_B=64.0, pulse_tau=10.0, unambiguous_tu=1.0,
                       n_range_bins_N=64, n_samples_M=21, tones_per_tx_Nc=10),
    "auc_vs_undersampling": dict(bandwidth_B=64.0, pulse_tau=10.0,
                                 unambiguous_tu=1.0, n_range_bins_N=64,
                                 n_samples_M=16, tones_per_tx_Nc=10),
    "mimo_roc": dict(bandwidth_B=128.0, pulse_tau=10.0, unambiguous_tu=1.0,
                     n_range_bins_N=128, n_samples_M=43, n_tx_NT=4,
                     n_rx_NR=4, tones_per_tx_Nc=5),
    "rip_auc_map": dict(bandwidth_B=32.0, pulse_tau=10.0, unambiguous_tu=1.0,
                        n_range_bins_N=32, n_samples_M=16, tones_per_tx_Nc=8),
    "offgrid_profile": dict(bandwidth_B=144.0, pulse_tau=10.0,
                            unambiguous_tu=1.0, n_range_bins_N=144,
                            n_samples_M=48, tones_per_tx_Nc=20),
}

# Default swept ranges; keys here are cell parameters, not config fields,
# unless they name a SystemConfig field (then they override the config).
_DEFAULT_RANGES = {
    "coherence_sweep": dict(tones_per_tx_Nc=[1, 10, 20]),
    "phase_transition_noiseless": dict(k_frac=[0.05, 0.2, 0.5]),
    "auc_vs_snr": dict(snr_db=[0.0, 6.0, 12.0, 18.0], K=[5]),
    "auc_vs_undersampling": dict(n_samples_M=[8, 16, 32, 48],
                                 snr_db=[12.0], K=[5]),
    "mimo_roc": dict(tones_per_tx_Nc=[1, 3, 5], snr_db=[12.0], K=[10]),
    "rip_auc_map": dict(n_samples_M=[8, 16, 24], K=[2, 4, 8],
                        snr_db=[12.0]),
    "offgrid_profile": dict(tones_per_tx_Nc=[1, 10, 20], snr_db=[12.0],
                            K=[5]),
}

_CONFIG_FIELDS = ("bandwidth_B", "pulse_tau", "unambiguous_tu",
                  "n_range_bins_N", "n_samples_M", "n_tx_NT", "n_rx_NR",
                  "tones_per_tx_Nc", "carrier_fc", "tx_spacing_dT",
                  "rx_spacing_dR", "alias_p", "rng_seed")


@dataclass(frozen=True)
class SweepSpec:
    """What to run: experiment name, trial count, seed, and overrides."""

    experiment: str
    n_trials: int = 50
    master_seed: int = 0
    config_overrides: dict = field(default_factory=dict)
    ranges: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.experiment not in EXPERIMENT_NAMES:
            raise SpecError(f"unknown experiment {self.experiment!r}; "
                            f"choose from {EXPERIMENT_NAMES}")
        if self.n_trials < 0:
            raise SpecError("n_trials must be nonnegative")


@dataclass
class TrialRecord:
    """Self-contained, replayable record of one Monte Carlo trial."""

    experiment: str
    master_seed: int
    cell_index: int
    trial_index: int
    cell: dict
    config_raw: dict
    scene_json: str
    tones_json: str
    metrics: dict
    outputs: dict = field(default_factory=dict)
    wall_time: float = 0.0

    def to_json(self) -> str:
        return json.dumps({
            "experiment": self.experiment,
            "master_seed": self.master_seed,
            "cell_index": self.cell_index,
            "trial_index": self.trial_index,
            "cell": self.cell,
            "config_raw": self.config_raw,
            "scene": json.loads(self.scene_json) if self.scene_json else None,
            "tones": json.loads(self.tones_json) if self.tones_json else None,
            "metrics": self.metrics,
            "outputs": self.outputs,
            "wall_time": self.wall_time,
        }, sort_keys=True)

    @staticmethod
    def from_json(s: str) -> "TrialRecord":
        d = json.loads(s)
        return TrialRecord(
            experiment=d["experiment"], master_seed=d["master_seed"],
            cell_index=d["cell_index"], trial_index=d["trial_index"],
            cell=d["cell"], config_raw=d["config_raw"],
            scene_json=json.dumps(d["scene"]) if d["scene"] else "",
            tones_json=json.dumps(d["tones"]) if d["tones"] else "",
            metrics=d["metrics"], outputs=d.get("outputs", {}),
            wall_time=d.get("wall_time", 0.0))


def build_cells(spec: SweepSpec) -> list:
    """Cross product of the swept ranges, in deterministic key order."""
    ranges = dict(_DEFAULT_RANGES[spec.experiment])
    for key, vals in spec.ranges.items():
        ranges[key] = list(vals) if isinstance(vals, (list, tuple)) \
            else [vals]
    keys = sorted(ranges)
    for k in keys:
        if not ranges[k]:
            raise SpecError(f"empty range for parameter {k!r}")
    cells: list = [{}]
    for k in keys:
        cells = [{**c, k: v} for c in cells for v in ranges[k]]
    return cells


def _cell_config(spec: SweepSpec, cell: dict) -> SystemConfig:
    raw = dict(_BASE_CONFIGS[spec.experiment])
    raw.update(spec.config_overrides)
    raw.update({k: v for k, v in cell.items() if k in _CONFIG_FIELDS})
    return build_config(**raw)


def _trial_streams(master_seed: int, cell_index: int, trial_index: int):
    """Per-trial RNG plus a cell-independent stream for shared scenes."""
    rng = np.random.Generator(np.random.PCG64(
        np.random.SeedSequence([master_seed, cell_index, trial_index])))
    scene_rng = np.random.Generator(np.random.PCG64(
        np.random.SeedSequence([master_seed, 1_000_003, trial_index])))
    return rng, scene_rng


def _coherence_trial(config, cell, rng, scene_rng):
    # fixed tone count: a Bernoulli draw at Nc=1 can come up empty,
    # which has no coherence
    tones = draw_tones(config, rng, exact_count=True)
    op = assemble_matrix(config, tones)
    mu = mutual_coherence(op.matrix)
    base = make_toeplitz_baseline(config.n_samples_M,
                                  config.n_range_bins_N * config.n_angle_bins,
                                  "toeplitz_gaussian", rng)
    mu_base = mutual_coherence(base)
    return "", tones.to_json(), {}, {"mu": float(mu),
                                     "mu_toeplitz": float(mu_base)}


def _lasso_trial(config, cell, rng, scene_rng, noiseless):
    K = cell.get("K")
    if K is None:
        K = max(1, int(np.ceil(cell["k_frac"] * config.n_samples_M)))
    tones = draw_tones(config, rng)
    op = assemble_matrix(config, tones)
    scene = draw_grid_scene(config, K, "unit", rng)
    if noiseless:
        meas = synthesize(op, scene, 0.0, rng)
        lcfg = LassoConfig(lam="noiseless", max_iters=20_000, rel_tol=1e-14)
    else:
        signal = op.apply(scene.as_vector(config))
        sigma = sigma_for_snr_db(signal, float(cell["snr_db"]))
        meas = synthesize(op, scene, sigma, rng)
        lcfg = LassoConfig(sigma=sigma)
    res = solve_lasso(op, meas.y, lcfg)
    estimate = polish(op, meas.y, res.estimate) if noiseless \
        else res.estimate
    err = reconstruction_error(estimate, scene.as_vector(config))
    _, auc = roc_curve(np.abs(estimate), scene.support)
    metrics = {"reconstruction_error": float(err), "auc": float(auc),
               "success": float(err < SUCCESS_REC_ERR if noiseless
                                else auc > SUCCESS_AUC)}
    outputs = {"n_iter": res.iterations, "converged": res.converged,
               "lam": res.lam, "snr_db": meas.snr_db
               if np.isfinite(meas.snr_db) else None}
    return scene.to_json(), tones.to_json(), outputs, metrics


def _offgrid_trial(config, cell, rng, scene_rng):
    K = int(cell["K"])
    tones = draw_tones(config, rng)
    # scene comes from the cell-independent stream so the performance
    # profile compares systems on identical realizations
    scene = draw_continuum_scene(config, K, scene_rng, "unit")
    total_amp = sum(abs(a) for _, _, a in scene.targets)
    clean = synthesize((config, tones), scene, 0.0, rng)
    sigma = sigma_for_snr_db(clean.y, float(cell["snr_db"]))
    meas = synthesize((config, tones), scene, sigma, rng)
    # stop once the residual reaches the expected noise norm
    est = run_adcg(meas.y, config, tones,
                   AdcgConfig(tau_l1=2.0 * total_amp, K_max=2 * K + 4,
                              eta_abs=sigma * np.sqrt(meas.y.size)))
    m1, m2, m3 = offgrid_metrics(est, scene, config)
    radius = 0.2 * SPEED_OF_LIGHT / (2.0 * config.bandwidth_B)
    est_r = np.array([SPEED_OF_LIGHT * d / 2.0 for d, _, _ in est.atoms])
    hits = sum(
        1 for d, _, _ in scene.targets
        if est_r.size and np.min(np.abs(est_r - SPEED_OF_LIGHT * d / 2.0))
        <= radius)
    metrics = {"m1": m1, "m2": m2, "m3": m3,
               "localization_rate": hits / K,
               "m1_rel": m1 / total_amp}
    outputs = {"estimate": json.loads(est.to_json()),
               "snr_db": meas.snr_db}
    return scene.to_json(), tones.to_json(), outputs, metrics


def run_trial(experiment: str, config_raw: dict, cell: dict,
              master_seed: int, cell_index: int,
              trial_index: int) -> TrialRecord:
    """Execute one trial deterministically from its identifying tuple."""
    config = build_config(**config_raw)
    rng, scene_rng = _trial_streams(master_seed, cell_index, trial_index)
    t0 = time.perf_counter()
    if experiment == "coherence_sweep":
        out = _coherence_trial(config, cell, rng, scene_rng)
    elif experiment == "phase_transition_noiseless":
        out = _lasso_trial(config, cell, rng, scene_rng, noiseless=True)
    elif experiment in ("auc_vs_snr", "auc_vs_undersampling", "mimo_roc",
                        "rip_auc_map"):
        out = _lasso_trial(config, cell, rng, scene_rng, noiseless=False)
    elif experiment == "offgrid_profile":
        out = _offgrid_trial(config, cell, rng, scene_rng)
    else:
        raise SpecError(f"unknown experiment {experiment!r}")
    scene_json, tones_json, outputs, metrics = out
    return TrialRecord(
        experiment=experiment, master_seed=master_seed,
        cell_index=cell_index, trial_index=trial_index, cell=cell,
        config_raw=config_raw, scene_json=scene_json, tones_json=tones_json,
        metrics=metrics, outputs=outputs,
        wall_time=time.perf_counter() - t0)


def _run_trial_args(args) -> TrialRecord:
    return run_trial(*args)


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


def aggregate_csv(spec: SweepSpec, cells: list, records: list) -> str:
    """One CSV row per cell: medians of every metric plus a binomial 95%
    interval on the success fraction when a success metric exists."""
    by_cell: dict = {i: [] for i in range(len(cells))}
    for rec in records:
        by_cell[rec.cell_index].append(rec)
    for recs in by_cell.values():
        recs.sort(key=lambda r: r.trial_index)

    param_keys = sorted(cells[0]) if cells else []
    metric_keys: list = []
    for recs in by_cell.values():
        for r in recs:
            for k in r.metrics:
                if k not in metric_keys:
                    metric_keys.append(k)
    metric_keys.sort()

    cols = (["experiment", "cell_index"] + param_keys + ["n_trials"]
            + [f"median_{k}" for k in metric_keys])
    if "success" in metric_keys:
        cols += ["success_frac", "success_ci_lo", "success_ci_hi"]
    lines = [",".join(cols)]
    for i, cell in enumerate(cells):
        recs = by_cell[i]
        if not recs:
            continue
        row = [spec.experiment, str(i)]
        row += [_fmt(cell[k]) for k in param_keys]
        row.append(str(len(recs)))
        for k in metric_keys:
            vals = [r.metrics[k] for r in recs]
            row.append(_fmt(float(np.median(vals))))
        if "success" in metric_keys:
            succ = [r.metrics["success"] for r in recs]
            p = float(np.mean(succ))
            half = 1.96 * np.sqrt(p * (1.0 - p) / len(succ))
            row += [_fmt(p), _fmt(max(0.0, p - half)),
                    _fmt(min(1.0, p + half))]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def profile_csv(cells: list, records: list, metric: str = "m2",
                eta_grid=None) -> str:
    """Performance-profile table P_s(eta) with one system per cell."""
    if eta_grid is None:
        eta_grid = [1.0, 1.5, 2.0, 3.0, 5.0, 10.0, 100.0]
    by_cell: dict = {i: {} for i in range(len(cells))}
    for rec in records:
        by_cell[rec.cell_index][rec.trial_index] = rec.metrics[metric]
    trial_ids = sorted(set.intersection(
        *(set(d) for d in by_cell.values()))) if by_cell else []
    table = np.array([[by_cell[c][t] for c in range(len(cells))]
                      for t in trial_ids])
    # the profile ratio is undefined when the row minimum is 0
    table = np.maximum(table, 1e-15)
    prof = performance_profile(table, np.asarray(eta_grid))
    lines = ["cell_index," + ",".join(f"eta_{_fmt(e)}" for e in eta_grid)]
    for i in range(len(cells)):
        lines.append(",".join([str(i)] + [_fmt(float(v))
                                          for v in prof[i]]))
    return "\n".join(lines) + "\n"


def _revision() -> str:
    try:
        out = subprocess.run(["git", "rev-parse", "HEAD"],
                             capture_output=True, text=True, timeout=10)
        if out.returncode == 0:
            return out.stdout.strip()
    except OSError:
        pass
    return "unknown"


def run_sweep(spec: SweepSpec, out_dir: str, jobs: int = 1) -> dict:
    """Run the full sweep, writing trials/, aggregate.csv, manifest.json.

    Returns the manifest dict. Trial execution may be parallel; the
    aggregate is computed from records sorted by (cell, trial) so the
    CSV bytes do not depend on the job count.
    """
    if jobs < 1:
        raise SpecError("jobs must be >= 1")
    cells = build_cells(spec)
    exp_dir = os.path.join(out_dir, spec.experiment)
    trials_dir = os.path.join(exp_dir, "trials")
    os.makedirs(trials_dir, exist_ok=True)

    tasks = []
    for ci, cell in enumerate(cells):
        cfg = _cell_config(spec, cell)
        raw = {k: getattr(cfg, k) for k in _CONFIG_FIELDS}
        for ti in range(spec.n_trials):
            tasks.append((spec.experiment, raw, cell, spec.master_seed,
                          ci, ti))

    if jobs == 1 or not tasks:
        records = [run_trial(*t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(_run_trial_args, tasks, chunksize=1))

    for k, rec in enumerate(records):
        path = os.path.join(trials_dir, f"trial_{k:04d}.json")
        with open(path, "w") as fh:
            fh.write(rec.to_json())

    with open(os.path.join(exp_dir, "aggregate.csv"), "w") as fh:
        fh.write(aggregate_csv(spec, cells, records))
    if spec.experiment == "offgrid_profile" and records:
        with open(os.path.join(exp_dir, "profile.csv"), "w") as fh:
            fh.write(profile_csv(cells, records))

    base_cfg = _cell_config(spec, cells[0]) if cells \
        else build_config(**_BASE_CONFIGS[spec.experiment])
    manifest = {
        "experiment": spec.experiment,
        "master_seed": spec.master_seed,
        "n_trials": spec.n_trials,
        "n_cells": len(cells),
        "cells": cells,
        "config_fingerprint": config_fingerprint(base_cfg),
        "revision": _revision(),
    }
    with open(os.path.join(exp_dir, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=2)
    return manifest


def replay(record_path: str):
    """Re-run a trial from its record; returns (record, fresh, match).

    match is True when every metric reproduces bitwise.
    """
    with open(record_path) as fh:
        rec = TrialRecord.from_json(fh.read())
    fresh = run_trial(rec.experiment, rec.config_raw, rec.cell,
                      rec.master_seed, rec.cell_index, rec.trial_index)
    match = (sorted(rec.metrics) == sorted(fresh.metrics)
             and all(rec.metrics[k] == fresh.metrics[k]
                     for k in rec.metrics))
    return rec, fresh, match
