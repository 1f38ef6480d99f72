"""Command-line front end: diagnostics, synthesis, recovery, and sweeps.

Exit codes: 0 success, 1 domain error (error class name printed to
stderr), 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .adcg import AdcgConfig, prune_small_atoms, run_adcg
from .config import build_config, config_fingerprint, load_config_file
from .diagnostics import MatrixReport, matrix_report
from .errors import CiradError, RangeError
from .experiments import (EXPERIMENT_NAMES, SweepSpec, replay, run_sweep,
                          _CONFIG_FIELDS)
from .illumination import ToneAssignment, draw_tones, trial_rng
from .lasso import LassoConfig, polish, solve_lasso
from .metrics import reconstruction_error, roc_curve
from .operator import assemble_matrix, sigma_for_snr_db, synthesize
from .scenes import ContinuumScene, GridScene, draw_continuum_scene, \
    draw_grid_scene

_COUNT_KEYS = {"n_range_bins_N", "n_samples_M", "n_tx_NT", "n_rx_NR",
               "tones_per_tx_Nc", "alias_p", "rng_seed"}
_EXTRA_INT_KEYS = {"K", "n_trials", "offgrid", "K_max"}


def _parse_scalar(key: str, val: str):
    if key in _COUNT_KEYS or key in _EXTRA_INT_KEYS:
        return int(val)
    if key in _CONFIG_FIELDS:
        return float(val)
    try:
        return float(val)
    except ValueError:
        return val


def _parse_overrides(pairs):
    """Split --override k=v pairs into config fields and extras.

    Comma-separated values become lists; a list on a config field is a
    swept range and lands with the extras rather than the base config.
    """
    cfg: dict = {}
    extra: dict = {}
    for pair in pairs or []:
        if "=" not in pair:
            raise RangeError(f"override {pair!r} is not of the form k=v")
        key, val = pair.split("=", 1)
        key = key.strip()
        tokens = [t.strip() for t in val.split(",")]
        parsed = [_parse_scalar(key, t) for t in tokens]
        if len(parsed) == 1:
            target = cfg if key in _CONFIG_FIELDS else extra
            target[key] = parsed[0]
        else:
            extra[key] = parsed
    return cfg, extra


def _load_config(args, extra_defaults=None):
    raw = dict(extra_defaults or {})
    if args.config:
        raw.update(load_config_file(args.config))
    cfg_over, extra = _parse_overrides(getattr(args, "override", None))
    raw.update(cfg_over)
    if getattr(args, "seed", None) is not None:
        raw["rng_seed"] = args.seed
    return build_config(**raw), extra


def _write(out_dir: str, sub: str, name: str, text: str) -> str:
    d = os.path.join(out_dir, sub)
    os.makedirs(d, exist_ok=True)
    path = os.path.join(d, name)
    with open(path, "w") as fh:
        fh.write(text)
    return path


def _cmd_diagnose(args) -> int:
    config, _ = _load_config(args)
    rng = trial_rng(config.rng_seed, 0)
    tones = draw_tones(config, rng)
    op = assemble_matrix(config, tones)
    report = matrix_report(op.matrix, "compressive_illumination")
    row = report.csv_row(config.rng_seed, config.n_range_bins_N,
                         config.n_samples_M, config.tones_per_tx_Nc,
                         config.n_tx_NT, config.n_rx_NR)
    text = MatrixReport.CSV_HEADER + "\n" + row + "\n"
    print(text, end="")
    if args.out:
        _write(args.out, "diagnose", "report.csv", text)
        _write(args.out, "diagnose", "manifest.json", json.dumps(
            {"config_fingerprint": config_fingerprint(config),
             "seed": config.rng_seed}, sort_keys=True, indent=2))
    return 0


def _cmd_synth(args) -> int:
    config, extra = _load_config(args)
    rng = trial_rng(config.rng_seed, 0)
    tones = draw_tones(config, rng)
    K = int(extra.get("K", 3))
    snr_db = extra.get("snr_db")
    offgrid = bool(extra.get("offgrid", 0))

    if offgrid:
        scene = draw_continuum_scene(config, K, rng)
        clean = synthesize((config, tones), scene, 0.0, rng)
        kind = "continuum"
    else:
        op = assemble_matrix(config, tones)
        clean = synthesize(op, scene := draw_grid_scene(config, K, "unit",
                                                        rng), 0.0, rng)
        kind = "grid"
    sigma = sigma_for_snr_db(clean.y, float(snr_db)) if snr_db is not None \
        else 0.0
    meas = synthesize((config, tones) if offgrid else op, scene, sigma, rng)

    payload = json.dumps({
        "config_raw": {k: getattr(config, k) for k in _CONFIG_FIELDS},
        "tones": json.loads(tones.to_json()),
        "scene_kind": kind,
        "scene": json.loads(scene.to_json()),
        "noise_sigma": sigma,
        "snr_db": meas.snr_db if np.isfinite(meas.snr_db) else None,
        "y_re": meas.y.real.tolist(),
        "y_im": meas.y.imag.tolist(),
    }, sort_keys=True)
    path = _write(args.out, "synth", "measurement.json", payload)
    print(path)
    return 0


def _load_measurement(path: str):
    with open(path) as fh:
        d = json.load(fh)
    config = build_config(**d["config_raw"])
    tones = ToneAssignment.from_json(json.dumps(d["tones"]))
    y = np.asarray(d["y_re"]) + 1j * np.asarray(d["y_im"])
    scene_cls = GridScene if d["scene_kind"] == "grid" else ContinuumScene
    scene = scene_cls.from_json(json.dumps(d["scene"]))
    return config, tones, y, scene, d


def _cmd_solve_grid(args) -> int:
    config, tones, y, scene, d = _load_measurement(args.input)
    op = assemble_matrix(config, tones)
    sigma = float(d["noise_sigma"])
    lcfg = LassoConfig(sigma=sigma) if sigma > 0 \
        else LassoConfig(lam="noiseless", max_iters=20_000, rel_tol=1e-14)
    res = solve_lasso(op, y, lcfg)
    estimate = res.estimate if sigma > 0 else polish(op, y, res.estimate)
    out = {"estimate_re": estimate.real.tolist(),
           "estimate_im": estimate.imag.tolist(),
           "support": res.detected_support.tolist(),
           "iterations": res.iterations, "converged": res.converged,
           "lam": res.lam}
    if isinstance(scene, GridScene):
        out["reconstruction_error"] = reconstruction_error(
            estimate, scene.as_vector(config))
        _, out["auc"] = roc_curve(np.abs(estimate), scene.support)
    path = _write(args.out, "solve-grid", "estimate.json",
                  json.dumps(out, sort_keys=True))
    print(path)
    return 0


def _cmd_solve_offgrid(args) -> int:
    config, tones, y, scene, d = _load_measurement(args.input)
    _, extra = _parse_overrides(args.override)
    acfg = AdcgConfig(tau_l1=float(extra.get("tau_l1", np.inf)),
                      K_max=int(extra.get("K_max", 20)))
    est = run_adcg(y, config, tones, acfg)
    est = prune_small_atoms(est, y, config, tones, tau_l1=acfg.tau_l1)
    out = json.loads(est.to_json())
    if isinstance(scene, ContinuumScene) and scene.targets:
        from .metrics import offgrid_metrics
        m1, m2, m3 = offgrid_metrics(est, scene, config)
        out.update({"m1": m1, "m2": m2, "m3": m3})
    path = _write(args.out, "solve-offgrid", "estimate.json",
                  json.dumps(out, sort_keys=True))
    print(path)
    return 0


def _cmd_sweep(args) -> int:
    cfg_over, extra = _parse_overrides(args.override)
    if args.config:
        file_cfg = load_config_file(args.config)
        file_cfg.update(cfg_over)
        cfg_over = file_cfg
    ranges = {k: v for k, v in extra.items()
              if k not in ("n_trials",)}
    spec = SweepSpec(experiment=args.experiment,
                     n_trials=int(extra.get("n_trials", 50)),
                     master_seed=args.seed if args.seed is not None else 0,
                     config_overrides=cfg_over,
                     ranges=ranges)
    manifest = run_sweep(spec, args.out, jobs=args.jobs)
    print(json.dumps(manifest, sort_keys=True))
    return 0


def _cmd_replay(args) -> int:
    rec, fresh, match = replay(args.record)
    print(json.dumps({"metrics": fresh.metrics, "match": match},
                     sort_keys=True))
    return 0 if match else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="cirad",
        description="Compressive-illumination radar simulation and "
                    "sparse recovery")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out_default="out"):
        sp.add_argument("--config", help="key = value config file")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--out", default=out_default)
        sp.add_argument("--override", action="append", metavar="K=V",
                        help="config field or experiment parameter")

    sp = sub.add_parser("diagnose", help="matrix report (coherence, norms)")
    common(sp, out_default=None)

    sp = sub.add_parser("synth", help="draw a scene and measurements")
    common(sp)

    sp = sub.add_parser("solve-grid", help="on-grid sparse recovery")
    sp.add_argument("--input", required=True, help="measurement.json")
    common(sp)

    sp = sub.add_parser("solve-offgrid", help="continuum recovery")
    sp.add_argument("--input", required=True, help="measurement.json")
    common(sp)

    sp = sub.add_parser("sweep", help="Monte Carlo experiment sweep")
    sp.add_argument("--experiment", required=True,
                    choices=EXPERIMENT_NAMES)
    sp.add_argument("--jobs", type=int, default=1)
    common(sp)

    sp = sub.add_parser("replay", help="re-run a recorded trial")
    sp.add_argument("--record", required=True, help="trial_NNNN.json")

    return p


_DISPATCH = {
    "diagnose": _cmd_diagnose,
    "synth": _cmd_synth,
    "solve-grid": _cmd_solve_grid,
    "solve-offgrid": _cmd_solve_offgrid,
    "sweep": _cmd_sweep,
    "replay": _cmd_replay,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 2
    try:
        return _DISPATCH[args.command](args)
    except CiradError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except (OSError, json.JSONDecodeError, ValueError) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
