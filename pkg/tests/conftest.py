import numpy as np
import pytest

from fdsplit import SystemConfig, synthetic_realization


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def make_instance(rng, m=4, num_ul=2, num_dl=2, **kwargs):
    """Well-scaled random instance for numerics tests."""
    defaults = dict(si_power=0.05, noise_bs=1e-3, noise_ue=1e-3,
                    kappa=1e-12, beta=1e-12)
    defaults.update(kwargs)
    return synthetic_realization(rng, m, num_ul, num_dl, **defaults)


def table1_cfg(**overrides):
    return SystemConfig(**overrides) if overrides else SystemConfig()
