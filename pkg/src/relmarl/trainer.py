"""Centralized training, decentralized execution.

One training run owns every agent's prediction and target network, a shared
joint replay memory and a single random stream.  The stream is consumed in a
fixed order (network init, then per step one exploration draw per agent in
index order, then minibatch draws), so a seed fully determines a run.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import neural
from .evalharness import EvalRecord, greedy_eval
from .mixer import graph_reward_fn, q_tot, td_targets
from .relgraph import RelationalNetwork
from .replay import ReplayMemory, Transition

log = logging.getLogger(__name__)


class ConfigError(ValueError):
    pass


@dataclass
class TrainConfig:
    episodes: int = 1000
    updates_per_episode: int = 10
    batch: int = 32
    capacity: int = 50_000
    lr: float = 1e-3
    gamma: float = 0.99
    target_sync_every: int = 200
    eps_start: float = 1.0
    eps_end: float = 0.05
    eps_anneal: float = 0.8  # fraction of the run spent annealing
    eval_every: int = 50
    seed: int = 42
    hidden: tuple[int, ...] = (128, 128)
    freeze_agent: int | None = None
    freeze_at: int | None = None

    def validate(self) -> "TrainConfig":
        positive = ("updates_per_episode", "batch", "capacity", "target_sync_every", "eval_every")
        for name in positive:
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.episodes < 0:
            raise ConfigError("episodes must be non-negative")
        if self.lr <= 0 or not 0 <= self.gamma <= 1:
            raise ConfigError("need lr > 0 and gamma in [0, 1]")
        if not 1 >= self.eps_start >= self.eps_end >= 0:
            raise ConfigError("need 1 >= eps_start >= eps_end >= 0")
        if not 0 <= self.eps_anneal <= 1:
            raise ConfigError("eps_anneal is a fraction in [0, 1]")
        if any(h <= 0 for h in self.hidden):
            raise ConfigError("hidden widths must be positive")
        if (self.freeze_agent is None) != (self.freeze_at is None):
            raise ConfigError("freeze needs both freeze_agent and freeze_at")
        if self.freeze_at is not None and not 0 <= self.freeze_at < max(self.episodes, 1):
            raise ConfigError("freeze_at must lie inside the run")
        return self


@dataclass
class RunArtifacts:
    nets: list
    targets: list
    eval_records: list = field(default_factory=list)
    train_rewards: np.ndarray | None = None  # (episodes, agents)
    rng_audit: dict = field(default_factory=dict)
    snapshots: dict = field(default_factory=dict)  # episode -> per-agent checkpoint bytes
    updates_attempted: int = 0
    updates_applied: int = 0
    target_syncs: list = field(default_factory=list)


def epsilon_at(episode: int, cfg: TrainConfig) -> float:
    """Linear decay from eps_start to eps_end over the first eps_anneal of the run."""
    span = cfg.eps_anneal * cfg.episodes
    if span <= 0 or episode >= span:
        return cfg.eps_end
    return cfg.eps_start + (cfg.eps_end - cfg.eps_start) * (episode / span)


class _Audit:
    def __init__(self, seed):
        self.seed = seed
        self.explore_draws = 0
        self.action_draws = 0
        self.batch_draws = 0

    def as_dict(self):
        return dict(seed=self.seed, explore_draws=self.explore_draws,
                    action_draws=self.action_draws, batch_draws=self.batch_draws)


def rollout_episode(env, nets, eps, rng, memory: ReplayMemory | None = None, audit=None):
    """Play one ε-greedy episode.

    ``eps`` is a scalar or one value per agent.  Every agent draws its
    exploration coin each step, in agent order, whether or not it explores.
    Returns the transitions and the undiscounted per-agent reward sums.
    """
    n = env.n_agents
    eps = np.broadcast_to(np.asarray(eps, dtype=np.float64), (n,))
    state = env.reset()
    x = env.encode(state)
    totals = np.zeros(n)
    transitions = []
    terminal = False
    while not terminal:
        actions = np.empty(n, dtype=np.int64)
        for i in range(n):
            explore = rng.random() < eps[i]
            if audit is not None:
                audit.explore_draws += 1
            if explore:
                actions[i] = rng.integers(env.n_actions)
                if audit is not None:
                    audit.action_draws += 1
            else:
                actions[i] = int(np.argmax(neural.forward(nets[i], x)))
        state, rewards, terminal = env.step(state, actions)
        x_next = env.encode(state)
        t = Transition(x, actions, rewards, x_next, terminal)
        transitions.append(t)
        if memory is not None:
            memory.push(t)
        totals += rewards
        x = x_next
    return transitions, totals


def update_step(nets, opts, targets, batch, reward_fn, gamma, frozen=()) -> np.ndarray:
    """One factorized TD update on a minibatch; returns the TD errors.

    Loss is the batch mean of squared TD errors, so every agent's selected
    output receives the same upstream derivative ``-2 e / b``.
    """
    b = len(batch)
    y = td_targets(batch, targets, reward_fn, gamma)
    rows = np.arange(b)
    caches = [neural.forward_cached(net, batch.states) for net in nets]
    chosen = np.stack([c.q[rows, batch.actions[:, i]] for i, c in enumerate(caches)], axis=-1)
    e = y - q_tot(chosen)
    upstream = -2.0 * e / b
    for i, net in enumerate(nets):
        if i in frozen:
            continue
        grads = neural.backward_cached(net, caches[i], batch.actions[:, i], upstream)
        neural.adam_step(net, opts[i], grads)
    return e


def train_run(env, graph: RelationalNetwork | None, cfg: TrainConfig, *,
              reward_fn: Callable | None = None, run_id: int = 0,
              checkpoint_dir: str | os.PathLike | None = None,
              eval_env=None) -> RunArtifacts:
    """Train one team from scratch and return everything it produced.

    ``reward_fn`` replaces the graph-weighted team reward (used to run plain
    VDN); otherwise ``graph`` must cover exactly the environment's agents.
    """
    cfg.validate()
    n = env.n_agents
    if reward_fn is None:
        if graph is None or graph.n_agents != n:
            got = None if graph is None else graph.n_agents
            raise ConfigError(f"relational network has {got} agents, environment has {n}")
        reward_fn = graph_reward_fn(graph)
    if cfg.freeze_agent is not None and not 0 <= cfg.freeze_agent < n:
        raise ConfigError(f"freeze_agent {cfg.freeze_agent} out of range")
    eval_env = eval_env or env

    rng = np.random.default_rng(cfg.seed)
    audit = _Audit(cfg.seed)
    nets = [neural.init_net(env.state_dim, cfg.hidden, env.n_actions, rng) for _ in range(n)]
    targets = [neural.clone_net(net) for net in nets]
    opts = [neural.init_adam(net, lr=cfg.lr) for net in nets]
    memory = ReplayMemory(cfg.capacity, env.state_dim, n)
    art = RunArtifacts(nets=nets, targets=targets,
                       train_rewards=np.zeros((cfg.episodes, n)))

    def snapshot(episode):
        blobs = [neural.serialize_net(net) for net in nets]
        art.snapshots[episode] = blobs
        if checkpoint_dir is not None:
            os.makedirs(checkpoint_dir, exist_ok=True)
            for i, blob in enumerate(blobs):
                with open(os.path.join(checkpoint_dir, f"agent{i}_{episode}.qnet"), "wb") as fh:
                    fh.write(blob)

    if cfg.freeze_at == 0:
        snapshot(0)

    for episode in range(cfg.episodes):
        frozen = ()
        eps = np.full(n, epsilon_at(episode, cfg))
        if cfg.freeze_at is not None and episode >= cfg.freeze_at:
            frozen = (cfg.freeze_agent,)
            eps[cfg.freeze_agent] = 0.0
        _, totals = rollout_episode(env, nets, eps, rng, memory, audit)
        art.train_rewards[episode] = totals

        for _ in range(cfg.updates_per_episode):
            art.updates_attempted += 1
            if len(memory) < cfg.batch:
                continue
            batch = memory.sample(cfg.batch, rng)
            audit.batch_draws += 1
            update_step(nets, opts, targets, batch, reward_fn, cfg.gamma, frozen)
            art.updates_applied += 1

        done = episode + 1
        if done % cfg.target_sync_every == 0:
            for net, tgt in zip(nets, targets):
                neural.copy_into_target(net, tgt)
            art.target_syncs.append(done)
        if done % cfg.eval_every == 0:
            rewards = greedy_eval(eval_env, nets)
            art.eval_records.append(EvalRecord.make(run_id, done, rewards,
                                                    float(reward_fn(rewards))))
        if cfg.freeze_at is not None and done == cfg.freeze_at:
            snapshot(done)
        if done % 1000 == 0:
            log.info("run %d episode %d eps %.3f last-train %s", run_id, done,
                     eps.max(), np.round(totals, 2))

    snapshot(cfg.episodes)
    art.rng_audit = audit.as_dict()
    return art
