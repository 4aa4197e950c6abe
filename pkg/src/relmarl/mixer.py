"""Additive (VDN) value mixing and the factorized TD error.

With ``Q_tot = sum_i Q_i(s, a_i)`` the maximum over joint actions splits into
per-agent maxima, so neither target maximization nor greedy action selection
ever enumerates the joint action space.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .neural import MultiLayerNet, forward
from .relgraph import RelationalNetwork, team_reward


def q_tot(selected_q) -> float | np.ndarray:
    """Sum of the chosen actions' values over agents (last axis)."""
    q = np.asarray(selected_q, dtype=np.float64)
    total = np.zeros(q.shape[:-1])
    for i in range(q.shape[-1]):
        total = total + q[..., i]
    return float(total) if total.ndim == 0 else total


def joint_target_max(target_q: Sequence) -> float | np.ndarray:
    """``max_u Q_tot(u)`` for per-agent Q arrays (``(actions,)`` or ``(batch, actions)``)."""
    return q_tot(np.stack([np.max(q, axis=-1) for q in target_q], axis=-1))


def greedy_joint_action(nets: Sequence[MultiLayerNet], state) -> np.ndarray:
    """Each agent's argmax from its own network; ties go to the lowest index."""
    return np.array([int(np.argmax(forward(net, state))) for net in nets], dtype=np.int64)


def greedy_from_q(joint_q: Sequence) -> np.ndarray:
    return np.array([int(np.argmax(q)) for q in joint_q], dtype=np.int64)


def graph_reward_fn(graph: RelationalNetwork) -> Callable[[np.ndarray], np.ndarray]:
    return lambda rewards: team_reward(graph, rewards)


def td_targets(batch, targets: Sequence[MultiLayerNet], reward_fn, gamma: float) -> np.ndarray:
    """``r_team + gamma * max_u' Q_tot(s', u')``, bootstrap cut at terminals."""
    r_team = np.asarray(reward_fn(batch.rewards), dtype=np.float64)
    if gamma == 0.0:
        return r_team + 0.0
    next_q = [forward(t, batch.next_states) for t in targets]
    bootstrap = joint_target_max(next_q)
    return r_team + gamma * bootstrap * (1.0 - batch.terminals)


def td_error(batch, nets: Sequence[MultiLayerNet], targets: Sequence[MultiLayerNet],
             net_graph: RelationalNetwork | None, gamma: float, reward_fn=None) -> np.ndarray:
    """Per-transition TD errors of the factorized value.

    The team reward comes from ``net_graph`` unless an explicit ``reward_fn``
    (rewards array -> team reward per row) is given.
    """
    if len(batch) == 0:
        raise ValueError("empty batch")
    if len(nets) != len(targets) or batch.actions.shape[1] != len(nets):
        raise ValueError("agent count differs between batch, nets and targets")
    if reward_fn is None:
        if net_graph.n_agents != len(nets):
            raise ValueError(f"graph has {net_graph.n_agents} agents, got {len(nets)} nets")
        reward_fn = graph_reward_fn(net_graph)
    y = td_targets(batch, targets, reward_fn, gamma)
    rows = np.arange(len(batch))
    chosen = np.stack([forward(net, batch.states)[rows, batch.actions[:, i]]
                       for i, net in enumerate(nets)], axis=-1)
    return y - q_tot(chosen)
