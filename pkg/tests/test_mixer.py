import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from relmarl import neural
from relmarl.checks import brute_force_joint, uniform_sum
from relmarl.mixer import (greedy_from_q, greedy_joint_action, joint_target_max, q_tot,
                           td_error, td_targets)
from relmarl.relgraph import RelationalNetwork, team_reward
from relmarl.replay import Batch, Transition
from relmarl.trainer import update_step

finite = st.floats(-1e3, 1e3, allow_nan=False)


def test_q_tot_examples():
    assert q_tot([2.0, -0.5]) == 1.5
    assert q_tot([0.0, 0.0, 0.0]) == 0.0
    np.testing.assert_array_equal(q_tot([[1.0, 2.0], [3.0, 4.0]]), [3.0, 7.0])


@given(st.lists(finite, min_size=1, max_size=4), st.randoms())
def test_q_tot_permutation(values, rnd):
    shuffled = list(values)
    rnd.shuffle(shuffled)
    assert q_tot(shuffled) == pytest.approx(q_tot(values), abs=1e-9)


@pytest.mark.parametrize("n_agents", [1, 2, 3, 4])
def test_joint_max_matches_brute_force(n_agents):
    rng = np.random.default_rng(n_agents)
    for _ in range(200):
        joint_q = [rng.normal(size=5) for _ in range(n_agents)]
        best, best_u = brute_force_joint(joint_q)
        assert joint_target_max(joint_q) == best
        np.testing.assert_array_equal(greedy_from_q(joint_q), best_u)


def test_joint_max_single_agent_and_batch():
    q = np.array([0.3, -1.0, 2.5, 0.0, 1.0])
    assert joint_target_max([q]) == 2.5
    batch = [np.array([[1.0, 2.0], [5.0, 0.0]]), np.array([[0.0, -1.0], [3.0, 4.0]])]
    np.testing.assert_array_equal(joint_target_max(batch), [2.0, 9.0])


def test_ties_break_to_lowest_index():
    joint_q = [np.array([1.0, 3.0, 3.0, 0.0, 3.0]), np.array([2.0, 2.0, 2.0, 2.0, 2.0])]
    np.testing.assert_array_equal(greedy_from_q(joint_q), [1, 0])


def test_greedy_joint_action_reads_own_net():
    rng = np.random.default_rng(0)
    nets = [neural.init_net(4, (8,), 5, rng) for _ in range(3)]
    x = rng.normal(size=4)
    u = greedy_joint_action(nets, x)
    assert u.tolist() == [int(np.argmax(neural.forward(n, x))) for n in nets]
    best, best_u = brute_force_joint([neural.forward(n, x) for n in nets])
    np.testing.assert_array_equal(u, best_u)


def make_batch(rng, b, dim, n, terminal=None):
    ts = []
    for k in range(b):
        term = bool(rng.random() < 0.3) if terminal is None else terminal
        ts.append(Transition(rng.normal(size=dim), rng.integers(0, 5, size=n),
                             rng.normal(size=n), rng.normal(size=dim), term))
    return Batch.from_transitions(ts)


def tiny_team(rng, n=2, dim=3):
    return ([neural.init_net(dim, (6, 6), 5, rng) for _ in range(n)],
            [neural.init_net(dim, (6, 6), 5, rng) for _ in range(n)])


def test_td_error_worked_example():
    # terminal transition: bootstrap suppressed, r_team = r1 + 1.5 r2 = 16, q_tot = 10
    rng = np.random.default_rng(1)
    nets, targets = tiny_team(rng, dim=2)
    for net in nets:
        net.flat[:] = 0.0
    nets[0].biases[-1][:] = 4.0
    nets[1].biases[-1][:] = 6.0
    graph = RelationalNetwork(2, ((0, 0, 1.0), (1, 1, 1.0), (0, 1, 0.5)))
    batch = Batch.from_transitions([Transition(np.zeros(2), np.array([0, 3]),
                                               np.array([4.0, 8.0]), np.zeros(2), True)])
    assert team_reward(graph, [4.0, 8.0]) == 16.0
    np.testing.assert_array_equal(td_error(batch, nets, targets, graph, 0.99), [6.0])


def test_td_error_against_direct_formula():
    rng = np.random.default_rng(2)
    nets, targets = tiny_team(rng, n=3)
    graph = RelationalNetwork.with_priorities(3, [(0, 2), (1, 2)], 0.5)
    batch = make_batch(rng, 16, 3, 3)
    got = td_error(batch, nets, targets, graph, 0.9)
    for k, t in enumerate(batch):
        boot = sum(max(neural.forward(tn, t.next_state)) for tn in targets)
        chosen = sum(neural.forward(n, t.state)[a] for n, a in zip(nets, t.joint_action))
        want = team_reward(graph, t.rewards) + 0.9 * boot * (1 - t.terminal) - chosen
        assert got[k] == pytest.approx(want, rel=1e-12, abs=1e-12)


def test_self_interest_equals_uniform_sum_bitwise():
    rng = np.random.default_rng(3)
    nets, targets = tiny_team(rng, n=4)
    batch = make_batch(rng, 32, 3, 4)
    a = td_error(batch, nets, targets, RelationalNetwork.self_interest(4), 0.99)
    b = td_error(batch, nets, targets, None, 0.99, reward_fn=uniform_sum)
    assert a.tobytes() == b.tobytes()


def test_gamma_zero_ignores_targets():
    rng = np.random.default_rng(4)
    nets, targets = tiny_team(rng)
    _, other = tiny_team(rng)
    graph = RelationalNetwork.self_interest(2)
    batch = make_batch(rng, 8, 3, 2, terminal=False)
    np.testing.assert_array_equal(td_error(batch, nets, targets, graph, 0.0),
                                  td_error(batch, nets, other, graph, 0.0))
    np.testing.assert_array_equal(td_targets(batch, targets, uniform_sum, 0.0),
                                  uniform_sum(batch.rewards))


def test_agent_count_mismatch():
    rng = np.random.default_rng(5)
    nets, targets = tiny_team(rng)
    batch = make_batch(rng, 4, 3, 2)
    with pytest.raises(ValueError):
        td_error(batch, nets, targets, RelationalNetwork.self_interest(3), 0.99)
    with pytest.raises(ValueError):
        td_error(batch, nets[:1], targets[:1], RelationalNetwork.self_interest(1), 0.99)


def mean_sq_loss(batch, nets, targets, graph, gamma):
    e = td_error(batch, nets, targets, graph, gamma)
    return float(np.mean(e * e))


def test_each_agent_gets_the_loss_gradient():
    # finite-difference oracle on the batch loss, one agent's parameters at a time
    rng = np.random.default_rng(6)
    nets, targets = tiny_team(rng, n=3)
    graph = RelationalNetwork.with_priorities(3, [(0, 1)], 0.5)
    batch = make_batch(rng, 8, 3, 3)
    e = td_error(batch, nets, targets, graph, 0.99)
    h = 1e-6
    for i, net in enumerate(nets):
        analytic = neural.backward(net, batch.states, batch.actions[:, i], -2.0 * e / len(batch)).flat
        numeric = np.empty_like(net.flat)
        for k in range(net.flat.size):
            orig = net.flat[k]
            net.flat[k] = orig + h
            plus = mean_sq_loss(batch, nets, targets, graph, 0.99)
            net.flat[k] = orig - h
            minus = mean_sq_loss(batch, nets, targets, graph, 0.99)
            net.flat[k] = orig
            numeric[k] = (plus - minus) / (2 * h)
        np.testing.assert_allclose(analytic, numeric, rtol=1e-5, atol=1e-8)


def test_update_step_matches_td_error_and_frozen_construction():
    rng = np.random.default_rng(7)
    nets, targets = tiny_team(rng)
    graph = RelationalNetwork.with_priorities(2, [(1, 0)], 0.5)
    batch = make_batch(rng, 8, 3, 2)
    expected = td_error(batch, nets, targets, graph, 0.99)

    clones = [neural.clone_net(n) for n in nets]
    opts = [neural.init_adam(n) for n in nets]
    got = update_step(nets, opts, targets, batch, lambda r: team_reward(graph, r), 0.99)
    np.testing.assert_array_equal(got, expected)

    # the same update with agent 1 frozen moves agent 0 identically
    opts2 = [neural.init_adam(n) for n in clones]
    frozen_before = clones[1].flat.copy()
    update_step(clones, opts2, targets, batch, lambda r: team_reward(graph, r), 0.99, frozen=(1,))
    assert clones[0].flat.tobytes() == nets[0].flat.tobytes()
    assert clones[1].flat.tobytes() == frozen_before.tobytes()


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 4), st.integers(0, 2**31))
def test_factorization_property(n_agents, seed):
    rng = np.random.default_rng(seed)
    joint_q = [rng.normal(size=5) for _ in range(n_agents)]
    assert joint_target_max(joint_q) == brute_force_joint(joint_q)[0]
