import numpy as np
import pytest

from bayesens.data import Dataset
from bayesens.sampler import SamplerConfig


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def quick_config():
    """Short chains for smoke tests; not for calibration checks."""
    return SamplerConfig(chains=2, warmup=150, iterations=150, seed=7)


def binary_dataset(rng, n, missing=0):
    y = rng.integers(0, 2, n).astype(float)
    a = rng.integers(0, 2, n).astype(float)
    l = rng.integers(0, 2, n).astype(float)
    delta = np.zeros(n)
    if missing:
        delta[rng.choice(n, missing, replace=False)] = 1.0
    return Dataset(y=np.where(delta == 1, np.nan, y), a=a, l=l, delta=delta)


def continuous_dataset(rng, n, missing=0):
    a = rng.integers(0, 2, n).astype(float)
    l = rng.normal(size=n)
    y = 0.5 + l + a + rng.normal(size=n)
    delta = np.zeros(n)
    if missing:
        delta[rng.choice(n, missing, replace=False)] = 1.0
    return Dataset(y=np.where(delta == 1, np.nan, y), a=a, l=l, delta=delta)
