import numpy as np
import pytest

from llvc import ModelConfig, Generator, random_init


@pytest.fixture(scope="session")
def default_config():
    return ModelConfig()


@pytest.fixture(scope="session")
def small_config():
    """Tiny architecture exercising every code path fast.

    attention_window 7 with 5-frame chunks forces KV trimming by the second
    chunk; dilations reach 4 so encoder caches straddle chunk boundaries.
    """
    return ModelConfig(
        sample_rate=1000,
        stride=2,
        chunk_frames=5,
        encoder_dim=16,
        encoder_layers=3,
        encoder_kernel=3,
        decoder_dim=8,
        decoder_layers=1,
        attention_heads=2,
        attention_window=7,
        ffn_dim=16,
        prenet_layers=3,
        prenet_channels=4,
        prenet_kernel=3,
        prenet_dilations=(1, 2, 2),
    )


@pytest.fixture(scope="session")
def small_gen(small_config):
    return Generator(random_init(small_config, 42), small_config)


@pytest.fixture(scope="session")
def default_gen(default_config):
    return Generator(random_init(default_config, 42), default_config)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
