import numpy as np
import pytest

from relmarl import neural
from relmarl.checks import uniform_sum
from relmarl.environments import make_env
from relmarl.relgraph import RelationalNetwork
from relmarl.trainer import (ConfigError, TrainConfig, epsilon_at, rollout_episode,
                             train_run)

SMALL = dict(hidden=(16, 16))


def small_cfg(**kw):
    return TrainConfig(**{**SMALL, **kw})


def test_epsilon_schedule():
    cfg = TrainConfig(episodes=1000)
    assert epsilon_at(0, cfg) == 1.0
    assert epsilon_at(800, cfg) == 0.05
    assert epsilon_at(999, cfg) == 0.05
    assert epsilon_at(400, cfg) == pytest.approx(0.525)
    values = [epsilon_at(k, cfg) for k in range(1000)]
    assert all(a >= b for a, b in zip(values, values[1:]))


def test_config_validation():
    with pytest.raises(ConfigError):
        TrainConfig(batch=0).validate()
    with pytest.raises(ConfigError):
        TrainConfig(eps_start=0.1, eps_end=0.2).validate()
    with pytest.raises(ConfigError):
        TrainConfig(episodes=10, freeze_agent=0, freeze_at=10).validate()
    with pytest.raises(ConfigError):
        TrainConfig(freeze_agent=0).validate()
    env = make_env("rc")
    with pytest.raises(ConfigError):
        train_run(env, RelationalNetwork.self_interest(3), small_cfg(episodes=1))


def test_uniform_exploration_chi_square():
    env = make_env("rc", max_steps=50)
    rng = np.random.default_rng(0)
    nets = [neural.init_net(env.state_dim, (8,), 5, rng) for _ in range(2)]
    counts = np.zeros(5)
    while counts.sum() < 10_000:
        transitions, _ = rollout_episode(env, nets, 1.0, rng)
        for t in transitions:
            np.add.at(counts, t.joint_action, 1)
    expected = counts.sum() / 5
    chi2 = float(((counts - expected) ** 2 / expected).sum())
    # 4 degrees of freedom: mean 4, sd sqrt(8)
    assert chi2 < 4 + 3 * np.sqrt(8)


def test_greedy_rollout_is_repeatable():
    env = make_env("switch2")
    rng = np.random.default_rng(1)
    nets = [neural.init_net(env.state_dim, (8,), 5, rng) for _ in range(2)]
    a, ra = rollout_episode(env, nets, 0.0, np.random.default_rng(2))
    b, rb = rollout_episode(env, nets, 0.0, np.random.default_rng(3))
    assert len(a) == len(b)
    for x, y in zip(a, b):
        assert np.array_equal(x.joint_action, y.joint_action) and np.array_equal(x.state, y.state)
    np.testing.assert_array_equal(ra, rb)


def test_zero_episodes_returns_initial_nets():
    env = make_env("rc")
    art = train_run(env, RelationalNetwork.self_interest(2), small_cfg(episodes=0, seed=3))
    rng = np.random.default_rng(3)
    fresh = [neural.init_net(env.state_dim, SMALL["hidden"], 5, rng) for _ in range(2)]
    for a, b in zip(art.nets, fresh):
        assert a.flat.tobytes() == b.flat.tobytes()
    assert art.updates_attempted == 0 and art.eval_records == []
    assert list(art.snapshots) == [0]


def test_update_cadence_syncs_and_evals():
    env = make_env("rc")
    cfg = small_cfg(episodes=12, target_sync_every=5, eval_every=4, seed=0)
    art = train_run(env, RelationalNetwork.self_interest(2), cfg)
    assert art.updates_attempted == 120
    # updates are skipped a whole episode at a time, only while replay is short
    assert art.updates_applied % 10 == 0 and 0 < art.updates_applied <= 120
    assert art.target_syncs == [5, 10]
    assert [r.episode for r in art.eval_records] == [4, 8, 12]
    # after the last sync the prediction nets kept learning
    assert any(n.flat.tobytes() != t.flat.tobytes() for n, t in zip(art.nets, art.targets))

    art = train_run(env, RelationalNetwork.self_interest(2), small_cfg(episodes=10, target_sync_every=5))
    assert all(n.flat.tobytes() == t.flat.tobytes() for n, t in zip(art.nets, art.targets))


def test_updates_skipped_until_replay_holds_a_batch():
    env = make_env("rc", max_steps=3)  # at most 3 transitions per episode
    art = train_run(env, RelationalNetwork.self_interest(2), small_cfg(episodes=5, batch=8))
    assert art.updates_attempted == 50
    assert art.updates_applied < 50


def test_self_interest_reproduces_vdn():
    env = make_env("rc")
    cfg = small_cfg(episodes=40, seed=11)
    ra = train_run(env, RelationalNetwork.self_interest(2), cfg)
    vdn = train_run(env, None, cfg, reward_fn=uniform_sum)
    for a, b in zip(ra.nets, vdn.nets):
        assert a.flat.tobytes() == b.flat.tobytes()


def test_same_seed_same_run_and_different_seed_differs():
    env = make_env("switch2")
    graph = RelationalNetwork.with_priorities(2, [(0, 1)])
    a = train_run(env, graph, small_cfg(episodes=20, eval_every=10, seed=5))
    b = train_run(env, graph, small_cfg(episodes=20, eval_every=10, seed=5))
    c = train_run(env, graph, small_cfg(episodes=20, eval_every=10, seed=6))
    assert all(x.flat.tobytes() == y.flat.tobytes() for x, y in zip(a.nets, b.nets))
    assert a.eval_records == b.eval_records and a.rng_audit == b.rng_audit
    assert any(x.flat.tobytes() != y.flat.tobytes() for x, y in zip(a.nets, c.nets))


def test_rng_audit_counts():
    env = make_env("rc")
    art = train_run(env, RelationalNetwork.self_interest(2), small_cfg(episodes=6, seed=2))
    audit = art.rng_audit
    assert audit["explore_draws"] % 2 == 0  # one coin per agent per step
    assert audit["action_draws"] <= audit["explore_draws"]
    assert audit["batch_draws"] == art.updates_applied
    assert audit["seed"] == 2


def test_freezing_keeps_agent_parameters(tmp_path):
    env = make_env("switch2")
    graph = RelationalNetwork.with_priorities(2, [(0, 1)])
    cfg = small_cfg(episodes=30, freeze_agent=1, freeze_at=10, seed=4)
    art = train_run(env, graph, cfg, checkpoint_dir=tmp_path)
    assert art.snapshots[10][1] == art.snapshots[30][1]
    assert art.snapshots[10][0] != art.snapshots[30][0]
    assert (tmp_path / "agent1_10.qnet").read_bytes() == (tmp_path / "agent1_30.qnet").read_bytes()
    restored = neural.deserialize_net((tmp_path / "agent0_30.qnet").read_bytes())
    assert restored.flat.tobytes() == art.nets[0].flat.tobytes()


def test_frozen_agent_acts_greedily():
    # after the freeze the frozen agent takes no exploration actions, so the
    # number of action draws per step drops to the other agent's share
    env = make_env("switch2")
    graph = RelationalNetwork.self_interest(2)
    cfg = small_cfg(episodes=8, freeze_agent=0, freeze_at=1, eps_start=1.0, eps_end=1.0, seed=0)
    art = train_run(env, graph, cfg)
    audit = art.rng_audit
    steps = audit["explore_draws"] // 2
    assert audit["action_draws"] < audit["explore_draws"]
    assert audit["action_draws"] <= steps + 50
