"""Hybrid cognitive-IoT link simulator with a hierarchical RL training stack.

Subsystems: `config` (constants), `channel` (fading + harvest draws),
`content` (popularity, requests, cache masks), `env` (slot dynamics, reward,
episode metrics), `nets` (dense networks with hand-rolled gradients), `replay`
(ring buffers), `agents` (SAC / DQN / TD3 / DDPG), `trainer` (strategy stacks
and the training loop), `cli` (train / compare / sweep / plot commands).
"""

from .config import SimConfig, ConfigError, load_config, loads_config, make_config

__version__ = "0.1.0"

__all__ = [
    "SimConfig",
    "ConfigError",
    "load_config",
    "loads_config",
    "make_config",
    "__version__",
]
