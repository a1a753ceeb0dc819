"""Block-fading channel gains and RF energy-harvest draws.

Each slot sees independent exponentially distributed power gains on the three
links (direct s->s, outgoing interference s->p, incoming interference p->s).
The exponential rate of a link at distance d is d^-alpha, so the mean gain is
d^alpha; setting `invert_pathloss` flips the mean to d^-alpha for the
conventional attenuation reading.

Harvested power is mu * U(0, E_max): a uniform ambient draw scaled by the
conversion efficiency.  One slot consumes exactly one 3-vector exponential
draw and one uniform draw, in that order, so traces are reproducible from the
env RNG stream alone.
"""

from dataclasses import dataclass

import numpy as np

from .config import SimConfig


@dataclass(frozen=True, slots=True)
class ChannelGains:
    """Per-slot power gains: direct link, s->p interference, p->s interference."""
    g_ss: float
    g_sp: float
    g_ps: float


def link_mean(distance: float, cfg: SimConfig) -> float:
    """Mean power gain of a link at the given distance."""
    exponent = -cfg.alpha if cfg.invert_pathloss else cfg.alpha
    return distance ** exponent


_MEANS_CACHE: dict[tuple[float, float, float, float, bool], tuple[float, float, float]] = {}


def gain_means(cfg: SimConfig) -> tuple[float, float, float]:
    """Mean gains in draw order (g_ss, g_sp, g_ps)."""
    key = (cfg.d_ss, cfg.d_sp, cfg.d_ps, cfg.alpha, cfg.invert_pathloss)
    means = _MEANS_CACHE.get(key)
    if means is None:
        means = _MEANS_CACHE[key] = (link_mean(cfg.d_ss, cfg),
                                     link_mean(cfg.d_sp, cfg),
                                     link_mean(cfg.d_ps, cfg))
    return means


def sample_gains(rng: np.random.Generator, cfg: SimConfig) -> ChannelGains:
    """Draw one slot's gains; order (g_ss, g_sp, g_ps) is part of the contract."""
    unit = rng.standard_exponential(3)
    mean_ss, mean_sp, mean_ps = gain_means(cfg)
    return ChannelGains(g_ss=float(unit[0] * mean_ss),
                        g_sp=float(unit[1] * mean_sp),
                        g_ps=float(unit[2] * mean_ps))


def sample_harvest(rng: np.random.Generator, cfg: SimConfig) -> float:
    """Harvested power for one slot: mu * U(0, E_max)."""
    return float(cfg.mu * (cfg.E_max * rng.random()))
