import numpy as np
import pytest

from ciotrl.config import make_config


def tiny_cfg(**overrides):
    """Small-but-valid config for fast agent/trainer tests."""
    base = dict(T=4, L=2, M=6, N=6, C_s=4, lambda_p=3, lambda_s=3,
                hidden_size=8, batch_size=4, buffer_size=8, episodes=3,
                B0=0.05, eps_decay_episodes=5)
    base.update(overrides)
    return make_config(**base)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
