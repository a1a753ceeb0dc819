"""Fixed-capacity FIFO replay with uniform minibatch sampling.

One buffer per agent level; states and actions are dense float64 vectors of
per-level width.  Discrete actions are stored as single-entry float vectors
and cast back by the consumer.  `push` overwrites the oldest entry once full;
`sample` draws uniformly with replacement and requires size >= batch.
Learning elsewhere is gated on `is_full`.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Transition:
    state: np.ndarray
    action: np.ndarray
    reward: float
    next_state: np.ndarray
    done: bool


@dataclass(frozen=True)
class Batch:
    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    next_states: np.ndarray
    dones: np.ndarray

    def __len__(self) -> int:
        return self.states.shape[0]


class ReplayBuffer:
    def __init__(self, capacity: int, state_dim: int, action_dim: int):
        if capacity < 1:
            raise ValueError(f"capacity must be >= 1, got {capacity}")
        self.capacity = capacity
        self.states = np.zeros((capacity, state_dim))
        self.actions = np.zeros((capacity, action_dim))
        self.rewards = np.zeros(capacity)
        self.next_states = np.zeros((capacity, state_dim))
        self.dones = np.zeros(capacity)
        self.size = 0
        self.cursor = 0

    def __len__(self) -> int:
        return self.size

    @property
    def is_full(self) -> bool:
        return self.size == self.capacity

    def push(self, state, action, reward, next_state, done) -> None:
        i = self.cursor
        self.states[i] = state
        self.actions[i] = action
        self.rewards[i] = reward
        self.next_states[i] = next_state
        self.dones[i] = 1.0 if done else 0.0
        self.cursor = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def transition(self, index: int) -> Transition:
        """Stored entry by physical slot index (test/introspection aid)."""
        if not 0 <= index < self.size:
            raise IndexError(f"index {index} out of range for size {self.size}")
        return Transition(state=self.states[index].copy(),
                          action=self.actions[index].copy(),
                          reward=float(self.rewards[index]),
                          next_state=self.next_states[index].copy(),
                          done=bool(self.dones[index]))

    def sample(self, rng: np.random.Generator, batch: int) -> Batch:
        if batch > self.size:
            raise ValueError(f"cannot sample {batch} from buffer of size {self.size}")
        idx = rng.integers(0, self.size, size=batch)
        return Batch(states=self.states[idx], actions=self.actions[idx],
                     rewards=self.rewards[idx], next_states=self.next_states[idx],
                     dones=self.dones[idx])
