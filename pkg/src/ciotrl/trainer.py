"""Training loop tying the environment to a hierarchical agent stack.

A strategy is a named stack over the same mid-level DQN access-bit chooser:

    h_sac            SAC harvest-split + SAC power/caching
    h_td3            TD3 at both continuous levels
    h_ddpg           DDPG at both continuous levels
    two_layer_h_sac  harvest split pinned to 0.5, no top agent
    random           uniform actions forever, no learning

Each slot the levels act in sequence: the top agent picks the harvest split
rho from the 6-entry observed state, the mid DQN picks the cooperation bit
from [state, rho], and the low agent picks power plus cache scores from
[state, rho, coop].  Until every replay buffer is full the composed action is
uniformly random over the feasible cache sets (scores + top-k); from then on
one gradient update per agent runs every slot.

All levels receive the same scalar reward.  Because the mid/low bootstrap
states embed the *next* slot's freshly chosen rho (and coop), pushes are
deferred one slot; the final slot flushes with zero-padded augmentation,
masked by done.  Every buffer gains exactly T transitions per episode.

Randomness is split from one root seed into three named streams: env
(pattern, gains, harvest, requests), agent (net init, action noise, epsilon
draws), replay (minibatch indices).  A run is a pure function of
(strategy, config, seed); metrics.csv is byte-reproducible.
"""

import csv
import hashlib
import json
import os
import time
from dataclasses import dataclass

import numpy as np

from .agents import (DdpgAgent, DqnAgent, SacAgent, Td3Agent, epsilon_at,
                     low_action_bounds, low_level_act)
from .config import SimConfig, dumps_config, save_config
from .content import topk_select
from .env import STATE_DIM, CiotEnv, HybridAction, episode_metrics, write_trace
from .replay import ReplayBuffer

METRIC_NAMES = ("reward", "asr", "chr", "pcr", "delay", "ee")
CSV_COLUMNS = ("episode", "reward", "reward_ema", "asr", "asr_ema", "chr",
               "chr_ema", "pcr", "pcr_ema", "delay", "delay_ema", "ee",
               "ee_ema", "violations")


class TrainingDiverged(RuntimeError):
    """Raised when any update loss turns NaN; carries episode/slot context."""


@dataclass(frozen=True)
class StrategySpec:
    name: str
    algo: str | None        # sac | td3 | ddpg | None (random)
    has_high: bool
    fixed_rho: float | None


STRATEGIES: dict[str, StrategySpec] = {
    "h_sac": StrategySpec("h_sac", "sac", True, None),
    "h_td3": StrategySpec("h_td3", "td3", True, None),
    "h_ddpg": StrategySpec("h_ddpg", "ddpg", True, None),
    "two_layer_h_sac": StrategySpec("two_layer_h_sac", "sac", False, 0.5),
    "random": StrategySpec("random", None, False, None),
}

_CONTINUOUS = {"sac": SacAgent, "td3": Td3Agent, "ddpg": DdpgAgent}


@dataclass
class AgentStack:
    spec: StrategySpec
    high: object | None
    mid: DqnAgent | None
    low: object | None
    high_buf: ReplayBuffer | None
    mid_buf: ReplayBuffer | None
    low_buf: ReplayBuffer | None

    def buffers(self):
        return [b for b in (self.high_buf, self.mid_buf, self.low_buf) if b is not None]

    def buffers_full(self) -> bool:
        bufs = self.buffers()
        return bool(bufs) and all(b.is_full for b in bufs)


def build_stack(spec: StrategySpec, cfg: SimConfig,
                rng: np.random.Generator) -> AgentStack:
    """Instantiate agents and buffers; init draw order is high, mid, low."""
    if spec.algo is None:
        return AgentStack(spec, None, None, None, None, None, None)
    cls = _CONTINUOUS[spec.algo]
    low_dim = 1 + cfg.M + cfg.N
    high = None
    high_buf = None
    if spec.has_high:
        high = cls(STATE_DIM, 1, np.zeros(1), np.ones(1), cfg, rng)
        high_buf = ReplayBuffer(cfg.buffer_size, STATE_DIM, 1)
    mid = DqnAgent(STATE_DIM + 1, 2, cfg, rng)
    lo, hi = low_action_bounds(cfg)
    low = cls(STATE_DIM + 2, low_dim, lo, hi, cfg, rng)
    return AgentStack(spec, high, mid, low, high_buf,
                      ReplayBuffer(cfg.buffer_size, STATE_DIM + 1, 1),
                      ReplayBuffer(cfg.buffer_size, STATE_DIM + 2, low_dim))


def state_features(state, cfg: SimConfig) -> np.ndarray:
    """Network inputs for the current state, scaled to comparable ranges.

    Battery and harvest are divided by their physical caps; channel gains
    are exponential with heavy right tails, so they enter log-compressed.
    The environment state itself stays in physical units.
    """
    g = state.gains
    return np.array([state.battery / cfg.B_max,
                     state.last_harvest / (cfg.mu * cfg.E_max),
                     float(state.pu_active),
                     np.log1p(g.g_ps), np.log1p(g.g_sp), np.log1p(g.g_ss)],
                    dtype=np.float64)


@dataclass(frozen=True, slots=True)
class LevelRecord:
    """Per-level views of one composed action, as stored in the buffers."""
    s_high: np.ndarray
    s_mid: np.ndarray
    s_low: np.ndarray
    rho: float
    coop: int
    low_relaxed: np.ndarray


def _snap(value: float, step: float, lo: float, hi: float) -> float:
    return min(max(round(value / step) * step, lo), hi)


def compose_action(stack: AgentStack, state, rng: np.random.Generator,
                   cfg: SimConfig, learning_started: bool
                   ) -> tuple[HybridAction, LevelRecord]:
    """Run the three levels in sequence; random until buffers fill.

    The random phase draws rho ~ U[0,1], coop ~ Bernoulli(1/2),
    power ~ U[0,P_max] and uniform cache scores, so stored random actions
    live in the same relaxed space as learned ones.  A fixed_rho strategy
    pins rho on every slot, random phase included.
    """
    spec = stack.spec
    s_high = state_features(state, cfg)
    learned = learning_started and spec.algo is not None

    if spec.fixed_rho is not None:
        rho = spec.fixed_rho
    elif learned and stack.high is not None:
        rho = float(stack.high.act(s_high, rng, explore=True)[0])
    else:
        rho = float(rng.uniform())

    s_mid = np.append(s_high, rho)
    if learned:
        coop = stack.mid.act(s_mid, rng)
    else:
        coop = int(rng.integers(0, 2))

    s_low = np.append(s_mid, float(coop))
    if learned:
        power, pu_mask, ciot_mask, relaxed = low_level_act(
            stack.low, s_low, coop, rng, cfg, explore=True)
    else:
        power = float(rng.uniform(0.0, cfg.P_max))
        scores = rng.random(cfg.M + cfg.N)
        relaxed = np.concatenate([[power], scores])
        eligibility = np.ones(cfg.M + cfg.N, dtype=bool)
        if coop == 0:
            eligibility[:cfg.M] = False
        mask = topk_select(scores, cfg.C_s, eligibility)
        pu_mask, ciot_mask = mask[:cfg.M], mask[cfg.M:]

    env_rho, env_power = rho, power
    if cfg.quantize_actions:
        env_rho = _snap(rho, 0.1, 0.0, 1.0)
        env_power = _snap(power, 0.01, 0.0, cfg.P_max)

    action = HybridAction(rho=env_rho, coop=coop, power=env_power,
                          pu_mask=pu_mask, ciot_mask=ciot_mask)
    record = LevelRecord(s_high=s_high, s_mid=s_mid, s_low=s_low,
                         rho=rho, coop=coop, low_relaxed=relaxed)
    return action, record


def _push_levels(stack: AgentStack, prev: LevelRecord, reward: float,
                 done: bool, s_high_next: np.ndarray, s_mid_next: np.ndarray,
                 s_low_next: np.ndarray) -> None:
    if stack.high_buf is not None:
        stack.high_buf.push(prev.s_high, [prev.rho], reward, s_high_next, done)
    stack.mid_buf.push(prev.s_mid, [float(prev.coop)], reward, s_mid_next, done)
    stack.low_buf.push(prev.s_low, prev.low_relaxed, reward, s_low_next, done)


def _update_agents(stack: AgentStack, cfg: SimConfig,
                   agent_rng: np.random.Generator,
                   replay_rng: np.random.Generator) -> dict[str, float]:
    losses = {}
    if stack.high is not None:
        batch = stack.high_buf.sample(replay_rng, cfg.batch_size)
        for k, v in stack.high.update(batch, agent_rng).items():
            losses[f"high_{k}"] = v
    batch = stack.mid_buf.sample(replay_rng, cfg.batch_size)
    for k, v in stack.mid.update(batch).items():
        losses[f"mid_{k}"] = v
    batch = stack.low_buf.sample(replay_rng, cfg.batch_size)
    for k, v in stack.low.update(batch, agent_rng).items():
        losses[f"low_{k}"] = v
    return losses


def run_episode(env: CiotEnv, stack: AgentStack, cfg: SimConfig,
                env_rng: np.random.Generator, agent_rng: np.random.Generator,
                replay_rng: np.random.Generator, episode_index: int,
                collect_trace: bool = False):
    """One episode: act, store (one slot deferred), update when buffers full.

    Returns (metrics dict, first_learned_slot or None, trace list).
    """
    state = env.reset(env_rng)
    has_buffers = stack.spec.algo is not None
    pending: LevelRecord | None = None
    pending_reward = 0.0
    outcomes = []
    trace = []
    first_learned_slot = None

    for slot in range(cfg.T):
        learning = has_buffers and stack.buffers_full()
        if learning and first_learned_slot is None:
            first_learned_slot = slot
        action, record = compose_action(stack, state, agent_rng, cfg, learning)
        if has_buffers and pending is not None:
            _push_levels(stack, pending, pending_reward, False,
                         record.s_high, record.s_mid, record.s_low)
        outcome = env.step(state, action, env_rng)
        outcomes.append(outcome)
        if collect_trace:
            trace.append((action, outcome))
        pending = record
        pending_reward = outcome.reward
        if learning:
            losses = _update_agents(stack, cfg, agent_rng, replay_rng)
            for name, value in losses.items():
                if not np.isfinite(value):
                    raise TrainingDiverged(
                        f"{name} loss became {value} at episode {episode_index} "
                        f"slot {slot} (strategy {stack.spec.name})")
        state = outcome.next_state

    if has_buffers and pending is not None:
        s_high_next = state_features(state, cfg)
        s_mid_next = np.append(s_high_next, 0.0)
        s_low_next = np.append(s_mid_next, 0.0)
        _push_levels(stack, pending, pending_reward, True,
                     s_high_next, s_mid_next, s_low_next)

    return episode_metrics(outcomes, cfg), first_learned_slot, trace


class EmaTracker:
    """Exponential moving average: avg' = (1 - delta)*avg + delta*value."""

    def __init__(self, delta: float, initial: float = 0.0):
        self.delta = delta
        self.value = initial

    def update(self, value: float) -> float:
        self.value = (1.0 - self.delta) * self.value + self.delta * value
        return self.value


def config_hash(cfg: SimConfig) -> str:
    return hashlib.sha256(dumps_config(cfg).encode("utf-8")).hexdigest()[:16]


def claim_dir(path: str) -> str:
    """Create `path`, or a `_2`, `_3`, ... sibling if it exists non-empty."""
    candidate = path
    n = 1
    while os.path.isdir(candidate) and os.listdir(candidate):
        n += 1
        candidate = f"{path}_{n}"
    os.makedirs(candidate, exist_ok=True)
    return candidate


@dataclass
class RunResult:
    strategy: str
    seed: int
    rows: list[dict]
    learn_start_episode: int | None
    out_dir: str | None

    def final_ema(self) -> dict[str, float]:
        last = self.rows[-1]
        return {name: last[f"{name}_ema"] for name in METRIC_NAMES}


def _format(value: float) -> str:
    return f"{value:.12g}"


def write_metrics_csv(path: str, rows: list[dict]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for row in rows:
            writer.writerow([row["episode"]]
                            + [_format(row[c]) for c in CSV_COLUMNS[1:-1]]
                            + [int(row["violations"])])


def read_metrics_csv(path: str) -> list[dict]:
    """Inverse of write_metrics_csv: typed per-episode rows."""
    rows = []
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
            raise ValueError(f"{path}: unexpected metrics header {reader.fieldnames}")
        for raw in reader:
            row = {"episode": int(raw["episode"]),
                   "violations": float(raw["violations"])}
            for column in CSV_COLUMNS[1:-1]:
                row[column] = float(raw[column])
            rows.append(row)
    return rows


def train(strategy: str, cfg: SimConfig, seed: int,
          out_dir: str | None = None, episodes: int | None = None,
          save_checkpoints: bool = True, log_every: int = 0,
          trace_last: bool = False) -> RunResult:
    """Train one (strategy, config, seed) run and optionally write artifacts.

    Artifacts: metrics.csv, config.txt (canonical config snapshot),
    run_info.json, checkpoints/*.mlp (final parameters), and with trace_last
    the final episode's per-slot trace as episode_trace.csv.
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}; "
                         f"choose from {sorted(STRATEGIES)}")
    spec = STRATEGIES[strategy]
    n_episodes = cfg.episodes if episodes is None else episodes

    root = np.random.SeedSequence(seed)
    env_seq, agent_seq, replay_seq = root.spawn(3)
    env_rng = np.random.Generator(np.random.PCG64(env_seq))
    agent_rng = np.random.Generator(np.random.PCG64(agent_seq))
    replay_rng = np.random.Generator(np.random.PCG64(replay_seq))

    env = CiotEnv(cfg)
    stack = build_stack(spec, cfg, agent_rng)
    trackers = {name: EmaTracker(cfg.delta) for name in METRIC_NAMES}

    started = time.monotonic()
    rows = []
    final_trace = []
    learn_start_episode = None
    for episode in range(1, n_episodes + 1):
        if stack.mid is not None:
            since = (episode - learn_start_episode
                     if learn_start_episode is not None else 0)
            stack.mid.epsilon = epsilon_at(since, cfg)
        metrics, first_slot, trace = run_episode(
            env, stack, cfg, env_rng, agent_rng, replay_rng, episode,
            collect_trace=trace_last and episode == n_episodes)
        if trace:
            final_trace = trace
        if first_slot is not None and learn_start_episode is None:
            learn_start_episode = episode
        row = {"episode": episode, "violations": metrics["violations"]}
        for name in METRIC_NAMES:
            row[name] = metrics[name]
            row[f"{name}_ema"] = trackers[name].update(metrics[name])
        rows.append(row)
        if log_every and episode % log_every == 0:
            print(f"[{strategy} seed={seed}] episode {episode}/{n_episodes} "
                  f"reward_ema={row['reward_ema']:.2f} asr_ema={row['asr_ema']:.1f}",
                  flush=True)

    result_dir = None
    if out_dir is not None:
        result_dir = claim_dir(out_dir)
        write_metrics_csv(os.path.join(result_dir, "metrics.csv"), rows)
        save_config(cfg, os.path.join(result_dir, "config.txt"))
        if final_trace:
            write_trace(os.path.join(result_dir, "episode_trace.csv"),
                        [a for a, _ in final_trace], [o for _, o in final_trace])
        info = {"strategy": strategy, "seed": seed, "episodes": n_episodes,
                "learn_start_episode": learn_start_episode,
                "config_hash": config_hash(cfg),
                "elapsed_sec": round(time.monotonic() - started, 3)}
        with open(os.path.join(result_dir, "run_info.json"), "w",
                  encoding="utf-8") as fh:
            json.dump(info, fh, indent=2, sort_keys=True)
            fh.write("\n")
        if save_checkpoints and spec.algo is not None:
            ckpt = os.path.join(result_dir, "checkpoints")
            os.makedirs(ckpt, exist_ok=True)
            if stack.high is not None:
                stack.high.save(ckpt, "high")
            stack.mid.save(ckpt, "mid")
            stack.low.save(ckpt, "low")

    return RunResult(strategy=strategy, seed=seed, rows=rows,
                     learn_start_episode=learn_start_episode, out_dir=result_dir)
