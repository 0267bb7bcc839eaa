import numpy as np
import pytest

from rsfd.channel import generate_channels, mrt_precoders
from rsfd.config import SystemConfig
from rsfd.distortion import build_coefficients
from rsfd.rates import PowerAllocation


@pytest.fixture
def config():
    return SystemConfig()


@pytest.fixture
def realization(config):
    channels = generate_channels(config, 7)
    return channels, mrt_precoders(channels)


@pytest.fixture
def coeffs(config, realization):
    return build_coefficients(*realization, config)


def random_powers(rng, config, scale=1.0):
    """A random allocation inside both budgets."""
    K = config.num_subcarriers
    src = rng.dirichlet(np.ones(2 * K + 1))[: 2 * K] * config.power_source * scale
    rel = rng.dirichlet(np.ones(K + 1))[:K] * config.power_relay * scale
    return PowerAllocation(src[:K], src[K:], rel)


def instance(config, seed):
    channels = generate_channels(config, seed)
    precoders = mrt_precoders(channels)
    return channels, precoders, build_coefficients(channels, precoders, config)
