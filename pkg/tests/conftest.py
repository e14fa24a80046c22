"""
Shared fixtures for the test-suite.
"""

import copy
import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from config import settings  # noqa: E402
from src.kernels import KernelSpec  # noqa: E402
from src.monitor import BlockSource, synth_independent  # noqa: E402
from src.tensor_io import SampleMatrix  # noqa: E402


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long Monte-Carlo checks over many seeds")


@pytest.fixture(autouse=True)
def restore_settings():
    """Tests may mutate the settings dicts; put them back afterwards."""
    saved = {name: copy.deepcopy(getattr(settings, name)) for name in settings._SECTIONS.values()}
    settings.PERFORMANCE_CONFIG["show_progress"] = False
    yield
    for name, values in saved.items():
        section = getattr(settings, name)
        section.clear()
        section.update(values)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def rbf():
    return KernelSpec("rbf", 0.5)


@pytest.fixture
def small_pair(rng):
    """Two 2x2 grayscale datasets of 40 samples each."""
    X = SampleMatrix.from_array(rng.normal(size=(40, 4)), 2, 2)
    Y = SampleMatrix.from_array(rng.normal(0.3, 1.2, size=(40, 4)), 2, 2)
    return X, Y


@pytest.fixture
def three_blocks():
    return [BlockSource(2, coupling=0.8), BlockSource(2, coupling=0.9), BlockSource(2, coupling=0.7)]


@pytest.fixture
def synth_data(three_blocks):
    """Train/test/snapshot datasets over a 2x3 grid with three independent blocks."""
    shifted = [b.shifted(0.5) if i == 1 else b for i, b in enumerate(three_blocks)]
    return {
        "train": synth_independent(three_blocks, 400, seed=1, height=2, width=3),
        "test": synth_independent(three_blocks, 300, seed=2, height=2, width=3),
        "snap_same": synth_independent(three_blocks, 300, seed=3, height=2, width=3),
        "snap_shifted": synth_independent(shifted, 300, seed=4, height=2, width=3),
    }
