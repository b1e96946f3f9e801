"""Tabular Q-learning for small discretized instances of the control task."""

from __future__ import annotations

import numpy as np


class QTable:
    """Dense mapping from hashable state keys to per-action values.

    Unseen states read as the optimistic initial value. The caller owns state
    discretization; discretize() below is the stock choice.
    """

    def __init__(self, num_actions: int, alpha: float = 0.1,
                 gamma: float = 0.9, initial_value: float = 0.0):
        if num_actions < 1:
            raise ValueError("num_actions must be positive")
        self.num_actions = num_actions
        self.alpha = alpha
        self.gamma = gamma
        self.initial_value = initial_value
        self.table = {}

    def values(self, state_key) -> np.ndarray:
        row = self.table.get(state_key)
        if row is None:
            return np.full(self.num_actions, self.initial_value)
        return row

    def _row(self, state_key) -> np.ndarray:
        row = self.table.get(state_key)
        if row is None:
            row = np.full(self.num_actions, self.initial_value)
            self.table[state_key] = row
        return row

    def act(self, state_key, epsilon: float, rng: np.random.Generator) -> int:
        """Epsilon-greedy action; greedy ties go to the lowest index."""
        if epsilon > 0.0 and rng.random() < epsilon:
            return int(rng.integers(self.num_actions))
        return int(np.argmax(self.values(state_key)))


def discretize(features: np.ndarray, bins: int = 8) -> tuple:
    """Quantize a [0, 1] feature vector into a hashable grid key."""
    idx = np.minimum((np.asarray(features) * bins).astype(np.int64), bins - 1)
    return tuple(int(v) for v in idx)


def q_update(table: QTable, state_key, action: int, reward: float,
             next_state_key, done: bool) -> QTable:
    """One Bellman backup: Q <- Q + alpha (r + gamma max_a' Q' - Q)."""
    row = table._row(state_key)
    bootstrap = 0.0 if done else float(np.max(table.values(next_state_key)))
    target = reward + table.gamma * bootstrap
    row[action] += table.alpha * (target - row[action])
    return table
