import numpy as np
import pytest

from d2tpt import synth_fixture


@pytest.fixture(scope="session")
def standard_fixture():
    """The pinned desk-scale bundle: seed 42, 10 classes, 200 samples."""
    return synth_fixture(seed=42, classes=10, dim=32, views=16, samples=200,
                         shift=0.6, noise=0.3)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
