import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cirad.config import build_config
from cirad.errors import CardinalityError, PackingError, ShapeError
from cirad.illumination import trial_rng
from cirad.scenes import (ContinuumScene, GridScene, draw_continuum_scene,
                          draw_grid_scene)


def test_grid_scene_basic(cfg_mimo, rng):
    scene = draw_grid_scene(cfg_mimo, 5, "unit", rng)
    assert scene.support.size == 5
    assert np.array_equal(scene.support, np.sort(scene.support))
    assert np.unique(scene.support).size == 5
    assert scene.n_cells == 64 * 4
    assert np.allclose(np.abs(scene.amplitudes), 1.0)
    x = scene.as_vector(cfg_mimo)
    assert x.shape == (256,)
    assert np.count_nonzero(x) == 5


def test_grid_scene_too_many_targets(cfg_siso, rng):
    with pytest.raises(CardinalityError):
        draw_grid_scene(cfg_siso, 65, "unit", rng)


def test_amplitude_models(cfg_siso, rng):
    floor = draw_grid_scene(cfg_siso, 4, "fixed_floor", rng,
                            amplitude_floor=2.5)
    assert np.allclose(np.abs(floor.amplitudes), 2.5)
    with pytest.raises(ShapeError):
        draw_grid_scene(cfg_siso, 4, "laplacian", rng)


def test_complex_gaussian_magnitude_statistics(cfg_siso):
    rng = trial_rng(11, 0)
    mags = np.concatenate([
        np.abs(draw_grid_scene(cfg_siso, 8, "complex_gaussian",
                               rng).amplitudes)
        for _ in range(200)])
    # E|CN(0,1)| = sqrt(pi)/2
    assert np.mean(mags) == pytest.approx(np.sqrt(np.pi) / 2, rel=0.05)


def test_grid_scene_json_round_trip(cfg_mimo, rng):
    scene = draw_grid_scene(cfg_mimo, 3, "complex_gaussian", rng)
    again = GridScene.from_json(scene.to_json())
    assert np.array_equal(again.support, scene.support)
    assert np.allclose(again.amplitudes, scene.amplitudes)
    assert again.n_cells == scene.n_cells


def test_continuum_scene_json_round_trip(cfg_siso, rng):
    scene = draw_continuum_scene(cfg_siso, 4, rng)
    again = ContinuumScene.from_json(scene.to_json())
    assert again.targets == scene.targets


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_continuum_separation_property(seed):
    cfg = build_config(bandwidth_B=64.0, pulse_tau=10.0, unambiguous_tu=1.0,
                       n_range_bins_N=64, n_samples_M=16, tones_per_tx_Nc=4)
    scene = draw_continuum_scene(cfg, 5, trial_rng(seed, 0))
    delays = [d for d, _, _ in scene.targets]
    for i in range(5):
        for j in range(i + 1, 5):
            assert abs(delays[i] - delays[j]) > 2.0 / 64.0
        assert 0.0 < delays[i] < 1.0
        assert scene.targets[i][1] == 0.0  # SISO: single angle cell


def test_continuum_angle_separation_mimo(cfg_mimo, rng):
    scene = draw_continuum_scene(cfg_mimo, 3, rng)
    angles = [th for _, th, _ in scene.targets]
    for i in range(3):
        for j in range(i + 1, 3):
            assert abs(angles[i] - angles[j]) >= 2.0 / 4.0


def test_continuum_packing_infeasible(cfg_siso, rng):
    # 40 targets with gaps of 2/64 cannot fit in a unit interval
    with pytest.raises(PackingError):
        draw_continuum_scene(cfg_siso, 40, rng)


def test_continuum_retry_cap(cfg_mimo, rng):
    # 4 angle cells admit at most 4 separated cos-angles; asking for more
    # exhausts the rejection sampler
    with pytest.raises(PackingError):
        draw_continuum_scene(cfg_mimo, 8, rng, max_attempts=200)
