import numpy as np
import pytest

from ionext import SyntheticSpec, synthesize


@pytest.fixture
def rng():
    return np.random.default_rng(0)


@pytest.fixture(scope="session")
def clean_sequence():
    """Noise-free curvy 20.005 s sequence: every 1 s window boundary is on
    the sample grid (N = 20*200 + 1), so window labels are exact."""
    spec = SyntheticSpec(duration=20.005, sample_rate=200.0, rng_seed=11,
                         noise_std_gyro=0.0, noise_std_accel=0.0,
                         bias_std_gyro=0.0, bias_std_accel=0.0)
    return synthesize(spec)


def randomize_params(module, rng, scale=0.5):
    """Move a freshly built module to a generic point in parameter space."""
    for name, p in module.named_parameters():
        if name.endswith(".scale"):
            p.value[...] = 1.0 + 0.25 * rng.standard_normal(p.value.shape)
        else:
            p.value[...] = scale * rng.standard_normal(p.value.shape)
