"""Off-policy agents: SAC, DQN, TD3, DDPG, plus the low-level action head.

Continuous actions live in per-dimension boxes [lo, hi] and are produced by
squashing a network output through ``lo + (hi - lo) * (tanh(raw) + 1) / 2``.
For the cache-score dimensions (lo=0, hi=1) this is a sigmoid of the doubled
logit, so scores land in (0, 1) as required by the top-k mask selection.

SAC uses the reparameterized tanh-Gaussian policy.  With u = mu + sigma * eps
and t = tanh(u), the per-dimension log density of the squashed action is

    -eps^2/2 - log sigma - log(2*pi)/2 - log((hi-lo)/2) - log(1 - t^2)

where log(1 - t^2) is evaluated stably as 2*(log 2 - u - softplus(-2u)).
Under fixed eps the gradients are d logp/d mu = 2t and
d logp/d log_sigma = -1 + 2t*sigma*eps; the action path contributes through
d a/d u = (hi-lo)/2 * (1 - t^2).  These closed forms drive the actor update
together with the min-critic's gradient at the sampled action.

One update = one minibatch Adam step per network plus a polyak target move.
Critic targets:

    SAC   y = r + gamma*(1-done)*(min_i Qt_i(s', a') - alpha*logpi(a'|s'))
    DQN   y = r + gamma*(1-done)*max_a Qt(s', a)
    TD3   y = r + gamma*(1-done)*min_i Qt_i(s', clip(pi_t(s') + noise))
    DDPG  y = r + gamma*(1-done)*Qt(s', pi_t(s'))

TD3/DDPG noise scales are expressed in half-range units of each action
dimension so a std of 0.2 means the same thing in every box.
"""

import math
import os

import numpy as np

from .config import SimConfig
from .content import topk_select
from .nets import Adam, Mlp, polyak_update

LOG_STD_MIN = -20.0
LOG_STD_MAX = 2.0
_LOG_2PI = math.log(2.0 * math.pi)


def squash_to_bounds(raw: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Map unbounded network output into the box [lo, hi]."""
    return lo + (hi - lo) * (np.tanh(raw) + 1.0) / 2.0


def _softplus(x: np.ndarray) -> np.ndarray:
    return np.log1p(np.exp(-np.abs(x))) + np.maximum(x, 0.0)


def log1m_tanh_sq(u: np.ndarray) -> np.ndarray:
    """log(1 - tanh(u)^2), stable for large |u|."""
    return 2.0 * (math.log(2.0) - u - _softplus(-2.0 * u))


def epsilon_at(learn_episode: int, cfg: SimConfig) -> float:
    """Mid-level epsilon after `learn_episode` completed learning episodes."""
    frac = min(max(learn_episode, 0) / cfg.eps_decay_episodes, 1.0)
    return cfg.eps_start + (cfg.eps_end - cfg.eps_start) * frac


def _as_batch(state: np.ndarray) -> np.ndarray:
    state = np.asarray(state, dtype=np.float64)
    return state.reshape(1, -1) if state.ndim == 1 else state


class SacAgent:
    """Twin-critic soft actor-critic over a box action space."""

    def __init__(self, state_dim: int, action_dim: int, lo, hi,
                 cfg: SimConfig, rng: np.random.Generator):
        self.state_dim = state_dim
        self.action_dim = action_dim
        self.lo = np.asarray(lo, dtype=np.float64)
        self.hi = np.asarray(hi, dtype=np.float64)
        self.half_range = (self.hi - self.lo) / 2.0
        if np.any(self.half_range <= 0.0):
            raise ValueError("action box must have hi > lo in every dimension")
        h = cfg.hidden_size
        self.actor = Mlp([state_dim, h, h, 2 * action_dim], rng)
        self.critic1 = Mlp([state_dim + action_dim, h, h, 1], rng)
        self.critic2 = Mlp([state_dim + action_dim, h, h, 1], rng)
        self.target1 = self.critic1.copy()
        self.target2 = self.critic2.copy()
        self.actor_opt = Adam(self.actor, cfg.lr)
        self.critic1_opt = Adam(self.critic1, cfg.lr)
        self.critic2_opt = Adam(self.critic2, cfg.lr)
        self.alpha = cfg.alpha_ee
        self.gamma = cfg.gamma_disc
        self.polyak = cfg.polyak

    def _policy_raw(self, states: np.ndarray):
        """Actor heads: mean, clamped log-std, and the clamp pass-through mask."""
        out, cache = self.actor.forward_cache(states)
        mu = out[:, :self.action_dim]
        raw_ls = out[:, self.action_dim:]
        log_std = np.clip(raw_ls, LOG_STD_MIN, LOG_STD_MAX)
        clamp_mask = (raw_ls > LOG_STD_MIN) & (raw_ls < LOG_STD_MAX)
        return mu, log_std, clamp_mask, cache

    def sample(self, states: np.ndarray, rng: np.random.Generator):
        """Reparameterized action draw with its log density, batch-wise."""
        states = _as_batch(states)
        mu, log_std, _, _ = self._policy_raw(states)
        eps = rng.standard_normal(mu.shape)
        sigma = np.exp(log_std)
        u = mu + sigma * eps
        t = np.tanh(u)
        actions = self.lo + self.half_range * (t + 1.0)
        logp = (-0.5 * eps * eps - log_std - 0.5 * _LOG_2PI
                - np.log(self.half_range) - log1m_tanh_sq(u)).sum(axis=1)
        return actions, logp

    def act(self, state: np.ndarray, rng: np.random.Generator,
            explore: bool = True) -> np.ndarray:
        states = _as_batch(state)
        if explore:
            actions, _ = self.sample(states, rng)
            return actions[0]
        mu, _, _, _ = self._policy_raw(states)
        return squash_to_bounds(mu, self.lo, self.hi)[0]

    def compute_targets(self, batch, rng: np.random.Generator) -> np.ndarray:
        """Soft TD target y for a replay batch; consumes one noise draw."""
        next_actions, next_logp = self.sample(batch.next_states, rng)
        sa = np.concatenate([batch.next_states, next_actions], axis=1)
        q1 = self.target1.forward(sa)[:, 0]
        q2 = self.target2.forward(sa)[:, 0]
        soft_value = np.minimum(q1, q2) - self.alpha * next_logp
        return batch.rewards + self.gamma * (1.0 - batch.dones) * soft_value

    def update(self, batch, rng: np.random.Generator) -> dict[str, float]:
        n = len(batch)
        y = self.compute_targets(batch, rng)

        sa = np.concatenate([batch.states, batch.actions], axis=1)
        losses = {}
        for name, critic, opt in (("critic1", self.critic1, self.critic1_opt),
                                  ("critic2", self.critic2, self.critic2_opt)):
            q, cache = critic.forward_cache(sa)
            err = q[:, 0] - y
            losses[name] = float(np.mean(err * err))
            grads, _ = critic.backward(cache, (2.0 / n) * err[:, None])
            opt.step(grads)

        # Actor: fresh reparameterized sample, gradient through the min critic.
        eps = rng.standard_normal((n, self.action_dim))
        actor_loss, agrads = self.actor_loss_and_grads(batch.states, eps)
        losses["actor"] = actor_loss
        self.actor_opt.step(agrads)

        polyak_update(self.target1, self.critic1, self.polyak)
        polyak_update(self.target2, self.critic2, self.polyak)
        return losses

    def actor_loss_and_grads(self, states: np.ndarray, eps: np.ndarray):
        """mean(alpha*logpi - min Q) under fixed noise, with actor gradients.

        Pure in the critics and pure in the noise, so central finite
        differences over the actor parameters reproduce the returned grads.
        """
        n = states.shape[0]
        mu, log_std, clamp_mask, cache = self._policy_raw(states)
        sigma = np.exp(log_std)
        u = mu + sigma * eps
        t = np.tanh(u)
        actions = self.lo + self.half_range * (t + 1.0)
        logp = (-0.5 * eps * eps - log_std - 0.5 * _LOG_2PI
                - np.log(self.half_range) - log1m_tanh_sq(u)).sum(axis=1)

        sa_new = np.concatenate([states, actions], axis=1)
        q1, c1_cache = self.critic1.forward_cache(sa_new)
        q2, c2_cache = self.critic2.forward_cache(sa_new)
        q1 = q1[:, 0]
        q2 = q2[:, 0]
        loss = float(np.mean(self.alpha * logp - np.minimum(q1, q2)))

        pick1 = (q1 <= q2).astype(np.float64)
        g1 = self.critic1.input_grad(c1_cache, (-pick1 / n)[:, None])
        g2 = self.critic2.input_grad(c2_cache, (-(1.0 - pick1) / n)[:, None])
        grad_action = (g1 + g2)[:, self.state_dim:]

        dadu = self.half_range * (1.0 - t * t)
        du_dls = sigma * eps
        grad_mu = (self.alpha / n) * (2.0 * t) + grad_action * dadu
        grad_ls = ((self.alpha / n) * (-1.0 + 2.0 * t * du_dls)
                   + grad_action * dadu * du_dls) * clamp_mask
        head_grad = np.concatenate([grad_mu, grad_ls], axis=1)
        agrads, _ = self.actor.backward(cache, head_grad)
        return loss, agrads

    def _net_map(self) -> dict[str, Mlp]:
        return {"actor": self.actor, "critic1": self.critic1, "critic2": self.critic2,
                "target1": self.target1, "target2": self.target2}

    def save(self, directory, prefix: str) -> None:
        for name, net in self._net_map().items():
            net.save(os.path.join(directory, f"{prefix}_{name}.mlp"))

    def load(self, directory, prefix: str) -> None:
        for name in list(self._net_map()):
            setattr(self, name, Mlp.load(os.path.join(directory, f"{prefix}_{name}.mlp")))
        self.actor_opt = Adam(self.actor, self.actor_opt.lr)
        self.critic1_opt = Adam(self.critic1, self.critic1_opt.lr)
        self.critic2_opt = Adam(self.critic2, self.critic2_opt.lr)


class DqnAgent:
    """Epsilon-greedy Q-learning over a small discrete action set."""

    def __init__(self, state_dim: int, n_actions: int, cfg: SimConfig,
                 rng: np.random.Generator):
        h = cfg.hidden_size
        self.n_actions = n_actions
        self.q = Mlp([state_dim, h, h, n_actions], rng)
        self.q_target = self.q.copy()
        self.opt = Adam(self.q, cfg.lr)
        self.gamma = cfg.gamma_disc
        self.polyak = cfg.polyak
        self.epsilon = cfg.eps_start

    def act(self, state: np.ndarray, rng: np.random.Generator) -> int:
        if rng.uniform() < self.epsilon:
            return int(rng.integers(0, self.n_actions))
        values = self.q.forward(_as_batch(state))[0]
        return int(np.argmax(values))

    def compute_targets(self, batch) -> np.ndarray:
        next_best = self.q_target.forward(batch.next_states).max(axis=1)
        return batch.rewards + self.gamma * (1.0 - batch.dones) * next_best

    def update(self, batch) -> dict[str, float]:
        n = len(batch)
        y = self.compute_targets(batch)
        q_all, cache = self.q.forward_cache(batch.states)
        taken = batch.actions[:, 0].astype(np.int64)
        err = q_all[np.arange(n), taken] - y
        grad_out = np.zeros_like(q_all)
        grad_out[np.arange(n), taken] = (2.0 / n) * err
        grads, _ = self.q.backward(cache, grad_out)
        self.opt.step(grads)
        polyak_update(self.q_target, self.q, self.polyak)
        return {"q": float(np.mean(err * err))}

    def save(self, directory, prefix: str) -> None:
        self.q.save(os.path.join(directory, f"{prefix}_q.mlp"))
        self.q_target.save(os.path.join(directory, f"{prefix}_q_target.mlp"))

    def load(self, directory, prefix: str) -> None:
        self.q = Mlp.load(os.path.join(directory, f"{prefix}_q.mlp"))
        self.q_target = Mlp.load(os.path.join(directory, f"{prefix}_q_target.mlp"))
        self.opt = Adam(self.q, self.opt.lr)


class _DeterministicActorAgent:
    """Shared plumbing for TD3 and DDPG."""

    def __init__(self, state_dim: int, action_dim: int, lo, hi,
                 cfg: SimConfig, rng: np.random.Generator, twin: bool):
        self.state_dim = state_dim
        self.action_dim = action_dim
        self.lo = np.asarray(lo, dtype=np.float64)
        self.hi = np.asarray(hi, dtype=np.float64)
        self.half_range = (self.hi - self.lo) / 2.0
        if np.any(self.half_range <= 0.0):
            raise ValueError("action box must have hi > lo in every dimension")
        h = cfg.hidden_size
        self.actor = Mlp([state_dim, h, h, action_dim], rng)
        self.critic1 = Mlp([state_dim + action_dim, h, h, 1], rng)
        self.critic2 = Mlp([state_dim + action_dim, h, h, 1], rng) if twin else None
        self.actor_target = self.actor.copy()
        self.target1 = self.critic1.copy()
        self.target2 = self.critic2.copy() if twin else None
        self.actor_opt = Adam(self.actor, cfg.lr)
        self.critic1_opt = Adam(self.critic1, cfg.lr)
        self.critic2_opt = Adam(self.critic2, cfg.lr) if twin else None
        self.gamma = cfg.gamma_disc
        self.polyak = cfg.polyak
        self.explore_std = cfg.explore_noise_std

    def act(self, state: np.ndarray, rng: np.random.Generator,
            explore: bool = True) -> np.ndarray:
        states = _as_batch(state)
        action = squash_to_bounds(self.actor.forward(states), self.lo, self.hi)[0]
        if explore and self.explore_std > 0.0:
            noise = rng.standard_normal(self.action_dim) * self.explore_std * self.half_range
            action = np.clip(action + noise, self.lo, self.hi)
        return action

    def _critic_step(self, batch, y) -> dict[str, float]:
        sa = np.concatenate([batch.states, batch.actions], axis=1)
        losses = {}
        pairs = [("critic1", self.critic1, self.critic1_opt)]
        if self.critic2 is not None:
            pairs.append(("critic2", self.critic2, self.critic2_opt))
        for name, critic, opt in pairs:
            q, cache = critic.forward_cache(sa)
            err = q[:, 0] - y
            losses[name] = float(np.mean(err * err))
            grads, _ = critic.backward(cache, (2.0 / len(batch)) * err[:, None])
            opt.step(grads)
        return losses

    def _actor_step(self, batch) -> float:
        n = len(batch)
        raw, cache = self.actor.forward_cache(batch.states)
        t = np.tanh(raw)
        actions = self.lo + self.half_range * (t + 1.0)
        sa = np.concatenate([batch.states, actions], axis=1)
        q, c_cache = self.critic1.forward_cache(sa)
        loss = float(-np.mean(q[:, 0]))
        grad_action = self.critic1.input_grad(
            c_cache, np.full((n, 1), -1.0 / n))[:, self.state_dim:]
        head_grad = grad_action * self.half_range * (1.0 - t * t)
        grads, _ = self.actor.backward(cache, head_grad)
        self.actor_opt.step(grads)
        return loss

    def _move_targets(self) -> None:
        polyak_update(self.actor_target, self.actor, self.polyak)
        polyak_update(self.target1, self.critic1, self.polyak)
        if self.target2 is not None:
            polyak_update(self.target2, self.critic2, self.polyak)

    def _net_map(self) -> dict[str, Mlp]:
        nets = {"actor": self.actor, "actor_target": self.actor_target,
                "critic1": self.critic1, "target1": self.target1}
        if self.critic2 is not None:
            nets["critic2"] = self.critic2
            nets["target2"] = self.target2
        return nets

    def save(self, directory, prefix: str) -> None:
        for name, net in self._net_map().items():
            net.save(os.path.join(directory, f"{prefix}_{name}.mlp"))

    def load(self, directory, prefix: str) -> None:
        for name in list(self._net_map()):
            setattr(self, name, Mlp.load(os.path.join(directory, f"{prefix}_{name}.mlp")))
        self.actor_opt = Adam(self.actor, self.actor_opt.lr)
        self.critic1_opt = Adam(self.critic1, self.critic1_opt.lr)
        if self.critic2 is not None:
            self.critic2_opt = Adam(self.critic2, self.critic2_opt.lr)


class Td3Agent(_DeterministicActorAgent):
    """Twin critics, delayed actor, smoothed target actions."""

    def __init__(self, state_dim, action_dim, lo, hi, cfg, rng):
        super().__init__(state_dim, action_dim, lo, hi, cfg, rng, twin=True)
        self.policy_delay = cfg.td3_policy_delay
        self.noise_std = cfg.td3_noise_std
        self.noise_clip = cfg.td3_noise_clip
        self.update_count = 0

    def compute_targets(self, batch, rng: np.random.Generator) -> np.ndarray:
        raw = self.actor_target.forward(batch.next_states)
        base = squash_to_bounds(raw, self.lo, self.hi)
        noise = rng.standard_normal(base.shape) * self.noise_std
        noise = np.clip(noise, -self.noise_clip, self.noise_clip) * self.half_range
        next_actions = np.clip(base + noise, self.lo, self.hi)
        sa = np.concatenate([batch.next_states, next_actions], axis=1)
        q = np.minimum(self.target1.forward(sa)[:, 0], self.target2.forward(sa)[:, 0])
        return batch.rewards + self.gamma * (1.0 - batch.dones) * q

    def update(self, batch, rng: np.random.Generator) -> dict[str, float]:
        y = self.compute_targets(batch, rng)
        losses = self._critic_step(batch, y)
        self.update_count += 1
        if self.update_count % self.policy_delay == 0:
            losses["actor"] = self._actor_step(batch)
            self._move_targets()
        return losses


class DdpgAgent(_DeterministicActorAgent):
    """Single critic, actor updated every step, plain target actions."""

    def __init__(self, state_dim, action_dim, lo, hi, cfg, rng):
        super().__init__(state_dim, action_dim, lo, hi, cfg, rng, twin=False)

    def compute_targets(self, batch) -> np.ndarray:
        raw = self.actor_target.forward(batch.next_states)
        next_actions = squash_to_bounds(raw, self.lo, self.hi)
        sa = np.concatenate([batch.next_states, next_actions], axis=1)
        q = self.target1.forward(sa)[:, 0]
        return batch.rewards + self.gamma * (1.0 - batch.dones) * q

    def update(self, batch, rng: np.random.Generator = None) -> dict[str, float]:
        y = self.compute_targets(batch)
        losses = self._critic_step(batch, y)
        losses["actor"] = self._actor_step(batch)
        self._move_targets()
        return losses


def low_action_bounds(cfg: SimConfig) -> tuple[np.ndarray, np.ndarray]:
    """Box for the low-level head: [power, per-file cache scores]."""
    dim = 1 + cfg.M + cfg.N
    lo = np.zeros(dim)
    hi = np.ones(dim)
    hi[0] = cfg.P_max
    return lo, hi


def low_level_act(agent, state_low: np.ndarray, coop: int,
                  rng: np.random.Generator, cfg: SimConfig,
                  explore: bool = True):
    """Run the low-level agent and turn scores into cache masks.

    Returns (power, pu_mask, ciot_mask, relaxed) where `relaxed` is the
    continuous [power, scores] vector the critics consume.
    """
    relaxed = agent.act(state_low, rng, explore=explore)
    power = float(relaxed[0])
    scores = relaxed[1:]
    eligibility = np.ones(cfg.M + cfg.N, dtype=bool)
    if coop == 0:
        eligibility[:cfg.M] = False
    mask = topk_select(scores, cfg.C_s, eligibility)
    return power, mask[:cfg.M], mask[cfg.M:], relaxed
