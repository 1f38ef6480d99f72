import numpy as np
import pytest

from cirad.config import build_config
from cirad.illumination import draw_tones, trial_rng


@pytest.fixture
def cfg_siso():
    return build_config(bandwidth_B=64.0, pulse_tau=10.0, unambiguous_tu=1.0,
                        n_range_bins_N=64, n_samples_M=16, tones_per_tx_Nc=4)


@pytest.fixture
def cfg_mimo():
    return build_config(bandwidth_B=64.0, pulse_tau=10.0, unambiguous_tu=1.0,
                        n_range_bins_N=64, n_samples_M=16, n_tx_NT=2,
                        n_rx_NR=2, tones_per_tx_Nc=4)


@pytest.fixture
def tones_siso(cfg_siso):
    return draw_tones(cfg_siso, trial_rng(42, 0))


@pytest.fixture
def tones_mimo(cfg_mimo):
    return draw_tones(cfg_mimo, trial_rng(42, 0))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
