from collections import deque

import numpy as np
import pytest

from ciotrl.replay import ReplayBuffer


def test_push_grows_to_capacity():
    buf = ReplayBuffer(capacity=2, state_dim=1, action_dim=1)
    assert len(buf) == 0 and not buf.is_full
    buf.push([1.0], [0.0], 0.0, [2.0], False)
    assert len(buf) == 1 and not buf.is_full
    buf.push([2.0], [0.0], 0.0, [3.0], False)
    assert len(buf) == 2 and buf.is_full
    buf.push([3.0], [0.0], 0.0, [4.0], False)
    assert len(buf) == 2


def test_fifo_eviction_matches_queue_simulation(rng):
    buf = ReplayBuffer(capacity=5, state_dim=1, action_dim=1)
    shadow = deque(maxlen=5)
    for tag in range(23):
        reward = float(rng.standard_normal())
        buf.push([float(tag)], [0.0], reward, [float(tag + 1)], tag % 7 == 0)
        shadow.append((float(tag), reward, tag % 7 == 0))
    got = sorted((float(buf.states[i, 0]), float(buf.rewards[i]),
                  bool(buf.dones[i])) for i in range(len(buf)))
    assert got == sorted(shadow)


def test_transition_round_trip():
    buf = ReplayBuffer(capacity=3, state_dim=2, action_dim=1)
    buf.push([1.0, 2.0], [0.5], -1.5, [3.0, 4.0], True)
    t = buf.transition(0)
    assert t.state.tolist() == [1.0, 2.0]
    assert t.action.tolist() == [0.5]
    assert t.reward == -1.5
    assert t.next_state.tolist() == [3.0, 4.0]
    assert t.done is True
    with pytest.raises(IndexError):
        buf.transition(1)


def test_dones_stored_as_unit_floats():
    buf = ReplayBuffer(capacity=2, state_dim=1, action_dim=1)
    buf.push([0.0], [0.0], 0.0, [0.0], True)
    buf.push([0.0], [0.0], 0.0, [0.0], False)
    assert buf.dones.tolist() == [1.0, 0.0]


def test_sample_requires_enough_entries(rng):
    buf = ReplayBuffer(capacity=4, state_dim=1, action_dim=1)
    buf.push([0.0], [0.0], 0.0, [0.0], False)
    with pytest.raises(ValueError):
        buf.sample(rng, 2)
    batch = buf.sample(rng, 1)
    assert len(batch) == 1


def test_sample_shapes_and_membership(rng):
    buf = ReplayBuffer(capacity=6, state_dim=3, action_dim=2)
    for i in range(6):
        buf.push([i, i, i], [i, -i], float(i), [i + 1, i, i], False)
    batch = buf.sample(rng, 4)
    assert batch.states.shape == (4, 3)
    assert batch.actions.shape == (4, 2)
    assert batch.rewards.shape == (4,)
    assert batch.next_states.shape == (4, 3)
    assert batch.dones.shape == (4,)
    stored = {tuple(buf.states[i]) for i in range(6)}
    assert all(tuple(s) in stored for s in batch.states)


def test_sample_deterministic_given_seed():
    buf = ReplayBuffer(capacity=10, state_dim=1, action_dim=1)
    for i in range(10):
        buf.push([float(i)], [0.0], 0.0, [0.0], False)
    a = buf.sample(np.random.default_rng(3), 6).states.ravel()
    b = buf.sample(np.random.default_rng(3), 6).states.ravel()
    assert a.tolist() == b.tolist()


def test_sample_uniformity():
    buf = ReplayBuffer(capacity=8, state_dim=1, action_dim=1)
    for i in range(8):
        buf.push([float(i)], [0.0], 0.0, [0.0], False)
    rng = np.random.default_rng(17)
    rounds = 12_500
    n = rounds * 8
    draws = np.concatenate([buf.sample(rng, 8).states.ravel()
                            for _ in range(rounds)]).astype(int)
    counts = np.bincount(draws, minlength=8)
    expected = n / 8
    sigma = np.sqrt(n * (1 / 8) * (7 / 8))
    assert np.all(np.abs(counts - expected) < 4 * sigma)


def test_capacity_must_be_positive():
    with pytest.raises(ValueError):
        ReplayBuffer(capacity=0, state_dim=1, action_dim=1)
