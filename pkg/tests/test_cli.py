import json
import os

import numpy as np
import pytest

from cirad.cli import main

TOY_OVERRIDES = [
    "--override", "bandwidth_B=32", "--override", "pulse_tau=10",
    "--override", "unambiguous_tu=1", "--override", "n_range_bins_N=32",
    "--override", "n_samples_M=16", "--override", "tones_per_tx_Nc=8",
]


def test_unknown_subcommand_is_usage_error(capsys):
    assert main(["frobnicate"]) == 2


def test_no_arguments_is_usage_error():
    assert main([]) == 2


def test_diagnose_happy_path(capsys):
    rc = main(["diagnose", "--seed", "7", *TOY_OVERRIDES])
    assert rc == 0
    out = capsys.readouterr().out
    header, row = out.strip().splitlines()
    assert header.startswith("generator_tag,seed,N,M")
    assert row.split(",")[1] == "7"


def test_diagnose_writes_report(tmp_path, capsys):
    rc = main(["diagnose", "--seed", "7", "--out", str(tmp_path),
               *TOY_OVERRIDES])
    assert rc == 0
    assert (tmp_path / "diagnose" / "report.csv").exists()
    assert (tmp_path / "diagnose" / "manifest.json").exists()


def test_domain_error_exits_one_and_names_error(capsys):
    rc = main(["diagnose", "--override", "bandwidth_B=-5"])
    assert rc == 1
    assert "RangeError" in capsys.readouterr().err


def test_inconsistent_config_exits_one(capsys):
    rc = main(["diagnose", *TOY_OVERRIDES, "--override",
               "n_samples_M=200"])
    assert rc == 1
    assert "ConsistencyError" in capsys.readouterr().err


def test_config_file_with_flag_override(tmp_path, capsys):
    cfg = tmp_path / "sys.cfg"
    cfg.write_text("bandwidth_B = 32\npulse_tau = 10\n"
                   "unambiguous_tu = 1\nn_range_bins_N = 32\n"
                   "n_samples_M = 8\ntones_per_tx_Nc = 8\n")
    rc = main(["diagnose", "--config", str(cfg), "--seed", "1",
               "--override", "n_samples_M=16"])
    assert rc == 0
    row = capsys.readouterr().out.strip().splitlines()[1]
    assert row.split(",")[3] == "16"  # the flag wins over the file


def test_synth_solve_grid_pipeline(tmp_path, capsys):
    rc = main(["synth", "--seed", "3", "--out", str(tmp_path),
               *TOY_OVERRIDES, "--override", "K=2"])
    assert rc == 0
    meas = tmp_path / "synth" / "measurement.json"
    assert meas.exists()
    d = json.loads(meas.read_text())
    assert d["scene_kind"] == "grid"
    assert len(d["y_re"]) == 16

    rc = main(["solve-grid", "--input", str(meas), "--out", str(tmp_path)])
    assert rc == 0
    est = json.loads((tmp_path / "solve-grid" / "estimate.json").read_text())
    assert est["reconstruction_error"] < 1e-5
    assert est["auc"] == 1.0


def test_synth_solve_offgrid_pipeline(tmp_path, capsys):
    rc = main(["synth", "--seed", "4", "--out", str(tmp_path),
               *TOY_OVERRIDES, "--override", "K=2",
               "--override", "offgrid=1"])
    assert rc == 0
    meas = tmp_path / "synth" / "measurement.json"
    d = json.loads(meas.read_text())
    assert d["scene_kind"] == "continuum"

    rc = main(["solve-offgrid", "--input", str(meas), "--out",
               str(tmp_path)])
    assert rc == 0
    est = json.loads(
        (tmp_path / "solve-offgrid" / "estimate.json").read_text())
    assert est["m1"] < 1e-3
    assert len(est["atoms"]) == 2


def test_synth_with_noise_reports_snr(tmp_path):
    rc = main(["synth", "--seed", "5", "--out", str(tmp_path),
               *TOY_OVERRIDES, "--override", "K=2",
               "--override", "snr_db=12"])
    assert rc == 0
    d = json.loads((tmp_path / "synth" / "measurement.json").read_text())
    assert d["noise_sigma"] > 0
    assert d["snr_db"] == pytest.approx(12.0, abs=2.0)


def test_sweep_and_replay_cli(tmp_path, capsys):
    args = ["sweep", "--experiment", "rip_auc_map", "--seed", "9",
            "--out", str(tmp_path), "--jobs", "1",
            "--override", "n_trials=2", "--override", "n_samples_M=8,16",
            "--override", "K=2"]
    assert main(args) == 0
    exp = tmp_path / "rip_auc_map"
    assert (exp / "manifest.json").exists()
    assert (exp / "aggregate.csv").exists()
    record = exp / "trials" / "trial_0001.json"
    assert record.exists()
    capsys.readouterr()
    assert main(["replay", "--record", str(record)]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["match"] is True


def test_replay_missing_file_exits_one(capsys):
    assert main(["replay", "--record", "/nonexistent.json"]) == 1


def test_repeated_sweep_is_byte_identical(tmp_path):
    args = ["sweep", "--experiment", "coherence_sweep", "--seed", "2",
            "--jobs", "1", "--override", "n_trials=2",
            "--override", "tones_per_tx_Nc=1,4",
            "--override", "bandwidth_B=32", "--override", "pulse_tau=10",
            "--override", "unambiguous_tu=1",
            "--override", "n_range_bins_N=32",
            "--override", "n_samples_M=10"]
    assert main([*args, "--out", str(tmp_path / "a")]) == 0
    assert main([*args, "--out", str(tmp_path / "b")]) == 0
    f = os.path.join("coherence_sweep", "aggregate.csv")
    assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f
                                                 ).read_bytes()
