"""Deep Q-learning over the joint 2^(2L) action space.

One output head per joint action. Works directly on the environment's
normalized feature vector, so the same code handles any cell count whose
action space still fits in one output layer.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import neural
from ..environment import (NetworkEnv, action_from_index, index_from_action,
                           num_actions)


@dataclass
class DqnConfig:
    hidden: tuple = (128, 128)
    lr: float = 2e-3
    gamma: float = 0.85
    batch_size: int = 32
    buffer_capacity: int = 20000
    target_sync: int = 250
    eps_start: float = 1.0
    eps_end: float = 0.05
    eps_fraction: float = 0.8
    train_start: int = 200
    # rewards are sums of linear SINRs and can be large; the learner sees a
    # scaled copy so value targets stay near the Huber quadratic region
    reward_scale: float = 0.02


class DqnAgent:
    def __init__(self, num_features: int, num_cells: int,
                 config: DqnConfig = None, seed: int = 0):
        self.config = config or DqnConfig()
        self.num_cells = num_cells
        self.num_actions = num_actions(num_cells)
        rng = np.random.default_rng(seed)
        widths = (num_features,) + tuple(self.config.hidden) + (self.num_actions,)
        self.online = neural.Mlp(widths, rng)
        self.target = self.online.clone()
        self.opt = neural.AdamState(self.online.parameters(), lr=self.config.lr)
        self.buffer = neural.ReplayBuffer(self.config.buffer_capacity)
        self.train_calls = 0
        self.global_step = 0

    def q_values(self, features: np.ndarray) -> np.ndarray:
        return neural.forward(self.online, features)

    def epsilon(self, total_steps: int) -> float:
        c = self.config
        ramp = max(int(c.eps_fraction * total_steps), 1)
        frac = min(self.global_step / ramp, 1.0)
        return c.eps_start + frac * (c.eps_end - c.eps_start)


def dqn_act(agent: DqnAgent, features: np.ndarray, epsilon: float,
            rng: np.random.Generator = None) -> np.ndarray:
    """Epsilon-greedy joint action; greedy ties resolve to the lowest index."""
    if epsilon > 0.0:
        if rng is None:
            raise ValueError("exploration needs a generator")
        if rng.random() < epsilon:
            idx = int(rng.integers(agent.num_actions))
            return action_from_index(idx, agent.num_cells)
    idx = int(np.argmax(agent.q_values(features)))
    return action_from_index(idx, agent.num_cells)


def dqn_train_step(agent: DqnAgent, batch: neural.Batch) -> float:
    """One Huber TD update on a sampled minibatch; returns the mean loss."""
    c = agent.config
    q_next = neural.forward(agent.target, batch.next_states)
    bootstrap = q_next.max(axis=1)
    targets = batch.rewards + c.gamma * np.where(batch.dones, 0.0, bootstrap)
    out, cache = neural.forward_cached(agent.online, batch.states)
    rows = np.arange(out.shape[0])
    acts = batch.actions.astype(np.int64)
    err = out[rows, acts] - targets
    loss, dloss = neural.huber(err)
    upstream = np.zeros_like(out)
    upstream[rows, acts] = dloss / out.shape[0]
    grads = neural.backward_from_cache(agent.online, cache, upstream)
    neural.adam_step(agent.opt, agent.online.parameters(), grads)
    agent.train_calls += 1
    if agent.train_calls % c.target_sync == 0:
        agent.target.copy_from(agent.online)
    return float(loss.mean())


def train_dqn(env: NetworkEnv, agent: DqnAgent, episodes: int,
              rng: np.random.Generator, frozen_seed: int = None) -> dict:
    """Run episodes with epsilon-greedy exploration and replay updates.

    frozen_seed pins every episode to one network draw (the single-instance
    regime); otherwise each episode draws a fresh instance from rng. Returns
    per-episode totals for inspection.
    """
    c = agent.config
    total_steps = episodes * env.config.horizon
    history = {"episode_reward": [], "episode_best_rate": [], "loss": []}
    for _ in range(episodes):
        seed = frozen_seed if frozen_seed is not None else int(rng.integers(2 ** 63))
        features = env.reset(seed)
        ep_reward = 0.0
        best_rate = 0.0
        losses = []
        done = False
        while not done:
            eps = agent.epsilon(total_steps)
            action = dqn_act(agent, features, eps, rng)
            outcome = env.step(action)
            agent.buffer.push(features, np.int64(index_from_action(action)),
                              outcome.reward * c.reward_scale,
                              outcome.features, outcome.done)
            features = outcome.features
            done = outcome.done
            ep_reward += outcome.reward
            best_rate = max(best_rate, outcome.info["sum_rate"])
            agent.global_step += 1
            if len(agent.buffer) >= max(c.train_start, c.batch_size):
                batch = agent.buffer.sample(c.batch_size, rng)
                losses.append(dqn_train_step(agent, batch))
        history["episode_reward"].append(ep_reward)
        history["episode_best_rate"].append(best_rate)
        history["loss"].append(float(np.mean(losses)) if losses else np.nan)
    return history
