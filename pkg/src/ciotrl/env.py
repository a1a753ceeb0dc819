"""Slot-level dynamics of the hybrid underlay/overlay CIoT link.

One episode is T slots.  Each slot the transmitter splits its time between
harvesting (fraction rho) and transmitting (1 - rho), picks an access bit
(cooperative overlay vs underlay), a transmit power, and binary cache masks
over both libraries.  The primary user occupies exactly L of the T slots.

Rate model per slot, with omega the PU-occupancy bit, I the cooperation bit,
f_p the fraction of primary requests hit by the cache, and h_c the raw count
of CIoT requests hit:

    R0 = log2(1 + P*g_ss / sigma2)                    idle band
    R1 = (1/k) * log2(1 + P*g_ss / sigma2)            overlay sub-band
    R2 = log2(1 + P*g_ss / (P_p*g_ps + sigma2))       underlay, PU interfering
    rate = h_c * (1-rho) * tau * [(1-omega)*R0 + omega*I*f_p*R1
                                  + omega*(1 - I*f_p)*R2]

Served content leaves at rate `rate`, so local delay is u/rate capped at the
backhaul reference u/R_bs; the cap keeps the delay-reduction reward term
non-negative and finite when nothing is served.

An action is feasible when it can pay its transmit energy from the battery,
keeps underlay interference at the PU receiver within I_th whenever part of
the transmission rides the occupied band (omega=1 and I*f_p < 1), and obeys
the gated cache capacity (primary entries only in cooperative mode).  An
infeasible action transmits nothing, earns reward -phi, and the episode
continues; harvesting still happens.

Battery follows B' = clamp(B + rho*e*tau - (1-rho)*P_eff*tau, 0, B_max); the
harvest draw lands after the action, so the observed state carries the
previous slot's harvest.
"""

import csv
import math
from dataclasses import dataclass

import numpy as np

from .channel import ChannelGains, sample_gains, sample_harvest
from .config import SimConfig
from .content import (HitStats, RequestSet, cache_mask_ok, hit_stats,
                      sample_requests)

STATE_DIM = 6


@dataclass(frozen=True, slots=True)
class EnvState:
    """Observed state: (battery, previous harvest, omega, g_ps, g_sp, g_ss).

    slot_index counts 0..T-1 for steppable states; T marks the terminal state.
    """
    battery: float
    last_harvest: float
    pu_active: int
    gains: ChannelGains
    slot_index: int

    def to_vector(self) -> np.ndarray:
        return np.array([self.battery, self.last_harvest, float(self.pu_active),
                         self.gains.g_ps, self.gains.g_sp, self.gains.g_ss],
                        dtype=np.float64)


@dataclass(frozen=True, slots=True)
class HybridAction:
    """Joint action: harvest split, access bit, power, and cache masks."""
    rho: float
    coop: int
    power: float
    pu_mask: np.ndarray
    ciot_mask: np.ndarray

    def __post_init__(self):
        if not 0.0 <= self.rho <= 1.0:
            raise ValueError(f"rho must lie in [0, 1], got {self.rho!r}")
        if self.coop not in (0, 1):
            raise ValueError(f"coop must be 0 or 1, got {self.coop!r}")
        if not self.power >= 0.0:
            raise ValueError(f"power must be >= 0, got {self.power!r}")


@dataclass(frozen=True, slots=True)
class StepOutcome:
    """Everything one slot produced, including the successor state."""
    next_state: EnvState
    reward: float
    rate: float
    mode: str
    feasible: bool
    violations: tuple[str, ...]
    energy_spent: float
    harvested: float
    pu_active: int
    pu_hits: int
    pu_hit_frac: float
    ciot_hits: int
    ciot_hit_frac: float
    delay_local: float
    delay_reduction: float
    done: bool


def compute_rate(state: EnvState, action: HybridAction, req: RequestSet,
                 cfg: SimConfig, hits: HitStats | None = None) -> tuple[float, str]:
    """Blended per-slot throughput and the branch that carried it.

    Assumes the action already passed check_feasibility.  Callers that have
    the slot's HitStats already can pass them to skip the recount.
    """
    if hits is None:
        hits = hit_stats(action.pu_mask, action.ciot_mask, req)
    snr_idle = action.power * state.gains.g_ss / cfg.sigma2
    r0 = math.log2(1.0 + snr_idle)
    r1 = r0 / cfg.k
    sinr = action.power * state.gains.g_ss / (cfg.P_p * state.gains.g_ps + cfg.sigma2)
    r2 = math.log2(1.0 + sinr)

    omega = state.pu_active
    overlay_share = action.coop * hits.pu_frac
    blended = ((1 - omega) * r0
               + omega * overlay_share * r1
               + omega * (1.0 - overlay_share) * r2)
    rate = hits.ciot_hits * (1.0 - action.rho) * cfg.tau * blended

    if hits.ciot_hits == 0 or action.power == 0.0:
        mode = "blocked"
    elif omega == 0:
        mode = "idle"
    elif overlay_share * r1 >= (1.0 - overlay_share) * r2:
        mode = "overlay"
    else:
        mode = "underlay"
    return rate, mode


def check_feasibility(state: EnvState, action: HybridAction, cfg: SimConfig,
                      pu_hit_frac: float) -> tuple[bool, tuple[str, ...]]:
    """Energy, interference, and cache-capacity checks for one slot.

    pu_hit_frac is the slot's realized primary hit fraction; it decides
    whether any part of the transmission rides the occupied band.
    """
    violations = []
    if (1.0 - action.rho) * action.power * cfg.tau > state.battery:
        violations.append("energy")
    underlay_share = 1.0 - action.coop * pu_hit_frac
    if state.pu_active == 1 and underlay_share > 0.0 \
            and action.power * state.gains.g_sp > cfg.I_th:
        violations.append("interference")
    if not cache_mask_ok(action.pu_mask, action.ciot_mask, action.coop, cfg.C_s):
        violations.append("cache")
    return (len(violations) == 0, tuple(violations))


class CiotEnv:
    """One training run's environment; holds the config and the PU pattern."""

    def __init__(self, cfg: SimConfig):
        self.cfg = cfg
        self.pattern: np.ndarray | None = None

    def reset(self, rng: np.random.Generator) -> EnvState:
        """Draw the episode's PU occupancy pattern and the first slot's gains."""
        cfg = self.cfg
        pattern = np.zeros(cfg.T, dtype=np.uint8)
        if cfg.pu_pattern_mode == "fixed":
            pattern[:cfg.L] = 1
        else:
            pattern[rng.permutation(cfg.T)[:cfg.L]] = 1
        self.pattern = pattern
        return EnvState(battery=cfg.B0, last_harvest=0.0,
                        pu_active=int(pattern[0]),
                        gains=sample_gains(rng, cfg), slot_index=0)

    def step(self, state: EnvState, action: HybridAction,
             rng: np.random.Generator) -> StepOutcome:
        """Advance one slot. RNG order: requests, harvest, next gains."""
        cfg = self.cfg
        if self.pattern is None:
            raise RuntimeError("reset() must run before step()")
        if state.slot_index >= cfg.T:
            raise RuntimeError("episode is done; reset() before stepping again")
        if action.power > cfg.P_max:
            raise ValueError(f"power {action.power!r} exceeds P_max={cfg.P_max}")
        if action.pu_mask.shape != (cfg.M,) or action.ciot_mask.shape != (cfg.N,):
            raise ValueError("cache mask shapes must be (M,) and (N,)")

        req = sample_requests(rng, cfg)
        hits = hit_stats(action.pu_mask, action.ciot_mask, req)
        feasible, violations = check_feasibility(state, action, cfg, hits.pu_frac)

        if feasible:
            rate, mode = compute_rate(state, action, req, cfg, hits)
            energy_spent = (1.0 - action.rho) * action.power * cfg.tau
        else:
            rate, mode = 0.0, "blocked"
            energy_spent = 0.0

        delay_ref = cfg.u / cfg.R_bs
        delay_local = min(cfg.u / rate, delay_ref) if rate > 0.0 else delay_ref
        delay_reduction = delay_ref - delay_local

        omega = state.pu_active
        if feasible:
            reward = (cfg.w1 * rate
                      + cfg.w2 * (omega * hits.pu_frac + hits.ciot_frac)
                      + cfg.w3 * delay_reduction)
        else:
            reward = -cfg.phi

        harvested = sample_harvest(rng, cfg)
        battery = state.battery + action.rho * harvested * cfg.tau - energy_spent
        battery = min(max(battery, 0.0), cfg.B_max)

        next_slot = state.slot_index + 1
        done = next_slot == cfg.T
        next_state = EnvState(battery=battery, last_harvest=harvested,
                              pu_active=0 if done else int(self.pattern[next_slot]),
                              gains=sample_gains(rng, cfg), slot_index=next_slot)
        return StepOutcome(next_state=next_state, reward=reward, rate=rate,
                           mode=mode, feasible=feasible, violations=violations,
                           energy_spent=energy_spent, harvested=harvested,
                           pu_active=omega, pu_hits=hits.pu_hits,
                           pu_hit_frac=hits.pu_frac, ciot_hits=hits.ciot_hits,
                           ciot_hit_frac=hits.ciot_frac, delay_local=delay_local,
                           delay_reduction=delay_reduction, done=done)


def episode_metrics(outcomes: list[StepOutcome], cfg: SimConfig) -> dict[str, float]:
    """Aggregate one episode: reward sum, ASR, CHR, PCR, mean delay, EE, violations."""
    asr = sum(o.rate for o in outcomes)
    energy = sum(o.energy_spent for o in outcomes)
    pcr = (sum(o.pu_hit_frac for o in outcomes if o.pu_active == 1) / cfg.L
           if cfg.L > 0 else 0.0)
    return {
        "reward": sum(o.reward for o in outcomes),
        "asr": asr,
        "chr": sum(o.ciot_hit_frac for o in outcomes) / cfg.T,
        "pcr": pcr,
        "delay": sum(o.delay_local for o in outcomes) / cfg.T,
        "ee": asr / energy if energy > 0.0 else 0.0,
        "violations": float(sum(not o.feasible for o in outcomes)),
    }


TRACE_COLUMNS = ("slot", "pu_active", "rho", "coop", "power", "rate", "reward",
                 "battery", "violations")


def write_trace(path, actions: list[HybridAction], outcomes: list[StepOutcome]) -> None:
    """Dump one episode as CSV rows; battery is the post-slot charge."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_COLUMNS)
        for slot, (act, out) in enumerate(zip(actions, outcomes)):
            writer.writerow([slot, out.pu_active, f"{act.rho:.10g}", act.coop,
                             f"{act.power:.10g}", f"{out.rate:.10g}",
                             f"{out.reward:.10g}", f"{out.next_state.battery:.10g}",
                             ";".join(out.violations)])
