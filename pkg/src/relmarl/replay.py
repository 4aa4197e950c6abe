"""Fixed-capacity FIFO replay memory of joint transitions."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, NamedTuple

import numpy as np


class NotEnoughData(ValueError):
    """Sampling requested more transitions than the memory holds."""


class Transition(NamedTuple):
    state: np.ndarray
    joint_action: np.ndarray
    rewards: np.ndarray
    next_state: np.ndarray
    terminal: bool


@dataclass
class Batch:
    """A sampled minibatch, stored column-wise; indexing yields Transitions."""
    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    next_states: np.ndarray
    terminals: np.ndarray

    def __len__(self) -> int:
        return len(self.states)

    def __getitem__(self, k: int) -> Transition:
        return Transition(self.states[k], self.actions[k], self.rewards[k],
                          self.next_states[k], bool(self.terminals[k]))

    def __iter__(self) -> Iterator[Transition]:
        return (self[k] for k in range(len(self)))

    @classmethod
    def from_transitions(cls, items) -> "Batch":
        items = list(items)
        return cls(np.array([t.state for t in items], dtype=np.float64),
                   np.array([t.joint_action for t in items], dtype=np.int64),
                   np.array([t.rewards for t in items], dtype=np.float64),
                   np.array([t.next_state for t in items], dtype=np.float64),
                   np.array([t.terminal for t in items], dtype=bool))


class ReplayMemory:
    def __init__(self, capacity: int, state_dim: int, n_agents: int):
        if capacity <= 0:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self.state_dim = state_dim
        self.n_agents = n_agents
        self._states = np.zeros((capacity, state_dim))
        self._next = np.zeros((capacity, state_dim))
        self._actions = np.zeros((capacity, n_agents), dtype=np.int64)
        self._rewards = np.zeros((capacity, n_agents))
        self._terminal = np.zeros(capacity, dtype=bool)
        self._head = 0  # slot for the next insert
        self.size = 0

    def __len__(self) -> int:
        return self.size

    def push(self, t: Transition) -> None:
        state = np.asarray(t.state, dtype=np.float64)
        next_state = np.asarray(t.next_state, dtype=np.float64)
        actions = np.asarray(t.joint_action)
        rewards = np.asarray(t.rewards, dtype=np.float64)
        if state.shape != (self.state_dim,) or next_state.shape != (self.state_dim,):
            raise ValueError(f"state shape {state.shape}/{next_state.shape}, "
                             f"expected ({self.state_dim},)")
        if actions.shape != (self.n_agents,) or rewards.shape != (self.n_agents,):
            raise ValueError(f"expected {self.n_agents} actions and rewards")
        i = self._head
        self._states[i] = state
        self._next[i] = next_state
        self._actions[i] = actions
        self._rewards[i] = rewards
        self._terminal[i] = bool(t.terminal)
        self._head = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def _slots(self, logical: np.ndarray) -> np.ndarray:
        oldest = (self._head - self.size) % self.capacity
        return (oldest + logical) % self.capacity

    def _gather(self, slots: np.ndarray) -> Batch:
        return Batch(self._states[slots], self._actions[slots], self._rewards[slots],
                     self._next[slots], self._terminal[slots])

    def contents(self) -> Batch:
        """Everything stored, oldest first."""
        return self._gather(self._slots(np.arange(self.size)))

    def sample(self, b: int, rng: np.random.Generator) -> Batch:
        """``b`` uniform draws with replacement."""
        if self.size < b:
            raise NotEnoughData(f"memory holds {self.size} transitions, batch needs {b}")
        return self._gather(self._slots(rng.integers(0, self.size, size=b)))
