"""Self-checks: finite-difference gradients, brute-force joint maximization and
the self-interest/VDN equivalence.  Used by ``relmarl verify`` and the tests."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import neural
from .environments import make_env
from .mixer import greedy_from_q, joint_target_max
from .relgraph import RelationalNetwork
from .trainer import TrainConfig, train_run


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail}"


def finite_difference_grad(net, state, action, upstream, h=1e-5) -> np.ndarray:
    """Central differences of ``upstream * Q(state, action)`` over the flat parameters."""
    grad = np.empty_like(net.flat)
    for k in range(net.flat.size):
        orig = net.flat[k]
        net.flat[k] = orig + h
        plus = neural.forward(net, state)[action]
        net.flat[k] = orig - h
        minus = neural.forward(net, state)[action]
        net.flat[k] = orig
        grad[k] = upstream * (plus - minus) / (2 * h)
    return grad


def gradient_errors(analytic, numeric, abs_floor=1e-7) -> np.ndarray:
    """Relative errors, zeroed where the absolute gap is under ``abs_floor``."""
    gap = np.abs(analytic - numeric)
    scale = np.maximum(np.abs(analytic), np.abs(numeric))
    rel = np.divide(gap, scale, out=np.zeros_like(gap), where=scale > 0)
    return np.where(gap <= abs_floor, 0.0, rel)


def check_gradients(n_nets=50, max_dim=6, seed=0, tol=1e-4) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = worst_gap = 0.0
    for _ in range(n_nets):
        n_in, h1, h2, n_out = rng.integers(1, max_dim + 1, size=4)
        net = neural.init_net(n_in, (h1, h2), n_out, rng)
        net.flat += rng.normal(0.0, 0.1, size=net.flat.size)  # non-zero biases too
        state = rng.normal(size=n_in)
        action = int(rng.integers(n_out))
        upstream = float(rng.normal())
        analytic = neural.backward(net, state, action, upstream)
        analytic = np.concatenate([g.ravel() for g in analytic])
        numeric = finite_difference_grad(net, state, action, upstream)
        worst = max(worst, float(gradient_errors(analytic, numeric).max()))
        worst_gap = max(worst_gap, float(np.abs(analytic - numeric).max()))
    return CheckResult("gradient finite differences", worst <= tol,
                       f"{n_nets} nets, max abs gap {worst_gap:.1e}, max relative error "
                       f"above the 1e-7 floor {worst:.1e} (tol {tol:g})")


def brute_force_joint(joint_q):
    """Exhaustive max and argmax of the summed value over all joint actions."""
    best, best_u = -np.inf, None
    for u in itertools.product(*(range(len(q)) for q in joint_q)):
        total = 0.0
        for q, a in zip(joint_q, u):
            total += q[a]
        if total > best:
            best, best_u = total, u
    return best, np.array(best_u)


def check_joint_max(n_instances=1000, seed=0) -> CheckResult:
    rng = np.random.default_rng(seed)
    mismatches = 0
    for _ in range(n_instances):
        n_agents = int(rng.integers(2, 5))
        joint_q = [rng.normal(size=5) for _ in range(n_agents)]
        best, best_u = brute_force_joint(joint_q)
        if joint_target_max(joint_q) != best or not np.array_equal(greedy_from_q(joint_q), best_u):
            mismatches += 1
    return CheckResult("factorized joint max", mismatches == 0,
                       f"{n_instances} instances, {mismatches} mismatches")


def uniform_sum(rewards):
    """Plain VDN team reward: each row's rewards added left to right."""
    r = np.asarray(rewards, dtype=np.float64)
    total = np.zeros(r.shape[:-1])
    for j in range(r.shape[-1]):
        total = total + r[..., j]
    return float(total) if total.ndim == 0 else total


def check_vdn_equivalence(episodes=100, scenario="rc", seed=7) -> CheckResult:
    env = make_env(scenario)
    cfg = TrainConfig(episodes=episodes, seed=seed)
    ra = train_run(env, RelationalNetwork.self_interest(env.n_agents), cfg)
    vdn = train_run(env, None, cfg, reward_fn=uniform_sum)
    same = all(np.array_equal(a.flat, b.flat) for a, b in zip(ra.nets, vdn.nets))
    return CheckResult("self-interest graph == VDN", same,
                       f"{scenario}, {episodes} episodes, parameters "
                       f"{'bitwise identical' if same else 'differ'}")


def run_all(vdn_episodes=100) -> list[CheckResult]:
    return [check_gradients(), check_joint_max(), check_vdn_equivalence(vdn_episodes)]
