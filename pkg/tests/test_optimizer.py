import math

import numpy as np
import pytest

from ccnoc.noc.network import Network, Packet, VNet
from ccnoc.noc.routing import compute_routing_tables
from ccnoc.optimizer import (HISTORY_HEADER, RAW_CLAMP, Agent, AgentConfig, BanditEnvironment,
                             Divisors, EpochMetrics, RewardWeights, TrainingConfig,
                             compute_reward, derived_seed, epsilon, greedy_topology,
                             normalize, predict_weights, q_update, raw_to_weights,
                             run_training, select_topology, substream, train,
                             weight_policy_update)
from ccnoc.topology import TopologyKind as K
from ccnoc.topology import enumerate_links
from ccnoc.workload import gen_shared_hotspot

ONES = np.ones(6)


@pytest.fixture(scope="module")
def agent():
    return Agent(AgentConfig(), 0)


class FixedQ:
    """Stands in for an Agent with hand-picked Q-values."""

    def __init__(self, q):
        self.q = np.asarray(q, float)
        self.allowed = list(K)

    def q_values(self, state):
        return self.q


# ---------------------------------------------------------------- features


def test_normalize_divides_and_clips():
    m = EpochMetrics(L_t=20, D_t=5, link_util=0.02, C_t=400, H_t=0, write_miss_avg=1e6)
    d = Divisors(L_t=10, D_t=2, link_util=0.04, C_t=100, H_t=5, write_miss_avg=50)
    assert normalize(m, d).tolist() == [2.0, 2.5, 0.5, 4.0, 0.0, 10.0]


def test_divisor_floors():
    d = Divisors.from_observed(EpochMetrics(L_t=8.0, D_t=0.0, link_util=0.0))
    assert (d.L_t, d.D_t, d.link_util, d.C_t) == (8.0, 1.0, 1e-3, 1.0)
    assert all(type(v) is float for v in d.as_array().tolist())
    with pytest.raises(ValueError):
        Divisors(L_t=0)


# ------------------------------------------------------------------ reward


def test_reward_by_hand():
    m = EpochMetrics(L_t=12, D_t=3, C_t=150, H_t=40)
    w = RewardWeights((0.4, 0.3, 0.2, 0.1), L_t=8, H_t=20, D_t=1.5, C_t=100)
    assert compute_reward(m, w) == -(0.4 * 1.5 + 0.3 * 2 + 0.2 * 2 + 0.1 * 1.5)


def test_reward_equal_to_calibration_is_minus_sum_of_alphas():
    d = Divisors(L_t=7, D_t=2, C_t=90, H_t=11)
    m = EpochMetrics(L_t=7, D_t=2, C_t=90, H_t=11)
    assert compute_reward(m, RewardWeights.from_divisors(d)) == pytest.approx(-1.0, abs=1e-15)


def test_reward_is_monotone():
    w = RewardWeights()
    base = EpochMetrics(L_t=5, D_t=1, C_t=10, H_t=3)
    for f in ("L_t", "D_t", "C_t", "H_t"):
        worse = EpochMetrics(**{**base.__dict__, f: getattr(base, f) + 1})
        assert compute_reward(worse, w) < compute_reward(base, w)


@pytest.mark.parametrize("alphas", [(0, 0, 0, 0), (1, -1, 0, 0), (1, 1, 1)])
def test_bad_alphas(alphas):
    with pytest.raises(ValueError):
        RewardWeights(alphas)


def test_epsilon_schedule():
    assert epsilon(0) == 1.0
    assert epsilon(1) == 0.5
    assert epsilon(9) == 0.1
    with pytest.raises(ValueError):
        epsilon(-1)


# ---------------------------------------------------------------- actions


def test_greedy_argmax():
    a = select_topology(FixedQ([1, 9, 3, 2, 0, 4]), ONES, 0, np.random.default_rng(0), eps=0.0)
    assert a is K(1)


def test_greedy_ties_go_to_lowest_index():
    assert greedy_topology([0, 1, 5, 3, 5, 2]) is K(2)
    assert greedy_topology([0, 0, 0, 0, 0, 0]) is K(0)


def test_greedy_respects_allowed():
    assert greedy_topology([0, 9, 3, 2, 0, 4], [K(0), K(2), K(5)]) is K(5)


@pytest.mark.parametrize("c", [0.01, 3.0, 1e6])
def test_argmax_is_scale_invariant(c):
    q = np.array([0.2, -1.0, 0.7, 0.69, -3.0, 0.1])
    assert greedy_topology(q * c) is greedy_topology(q)


def test_full_exploration_is_uniform():
    rng = np.random.default_rng(3)
    n = 6000
    picks = [select_topology(FixedQ(np.arange(6)), ONES, 0, rng, eps=1.0) for _ in range(n)]
    counts = np.bincount([int(p) for p in picks], minlength=6)
    sd = math.sqrt(n * (1 / 6) * (5 / 6))
    assert np.all(np.abs(counts - n / 6) < 3 * sd)


# ----------------------------------------------------------------- weights


def test_raw_to_weights_clamps():
    w = raw_to_weights([0.0, 5.0, -5.0, 1.0])
    assert w[0] == 1.0
    assert w[1] == math.exp(RAW_CLAMP) and w[2] == math.exp(-RAW_CLAMP)
    assert w[3] == math.exp(1.0)


def test_fresh_heads_predict_uniform_weights(agent):
    for kind in agent.allowed:
        s = predict_weights(agent, ONES, kind)
        assert np.all(s.weights == 1.0)
        assert len(s.weights) == len(enumerate_links(agent.graphs[kind]))


def test_zero_noise_returns_mean_weights(agent):
    a = predict_weights(agent, ONES, K.TORUS, substream(1, 2), train=True, sigma=0.0)
    assert np.all(a.weights == raw_to_weights(a.raw))


def test_noise_is_multiplicative_lognormal(agent):
    rng = substream(4, 2)
    logs = np.concatenate([np.log(predict_weights(agent, ONES, K.MESH, rng, train=True).weights)
                           for _ in range(200)])
    assert abs(logs.mean()) < 0.02
    assert logs.std() == pytest.approx(agent.sigma, rel=0.05)


def test_predicted_weights_are_positive(agent):
    rng = np.random.default_rng(0)
    for _ in range(20):
        s = rng.uniform(0, 10, 6)
        for kind in agent.allowed:
            assert np.all(predict_weights(agent, s, kind, rng, train=True).weights > 0)


# ---------------------------------------------------------------- Q update


def test_q_update_converges_to_reward_when_gamma_zero():
    ag = Agent(AgentConfig(), 7)
    s = np.array([1.0, 0.5, 2.0, 0.1, 0.3, 1.2])
    for step in range(5000):
        err = q_update(ag, s, K.FATTREE, -0.8, s, gamma=0.0, lr=1e-2)
        if abs(err) < 1e-3:
            break
    assert abs(ag.q_values(s)[int(K.FATTREE)] + 0.8) < 1e-3


def test_zero_td_error_changes_nothing():
    ag = Agent(AgentConfig(), 2)
    before = ag.q_net.parameters().copy()
    err = q_update(ag, ONES, K.MESH, 0.0, ONES, gamma=0.9, terminal=True)
    assert err == 0.0
    assert np.array_equal(ag.q_net.parameters(), before)


def test_terminal_target_ignores_next_state():
    ag = Agent(AgentConfig(), 3)
    ag.q_net.biases[-1][int(K.TORUS)] = 5.0   # bootstrap value a terminal step must ignore
    assert q_update(ag, ONES, K.MESH, -1.0, ONES, terminal=True) == 1.0


def test_td_error_uses_bootstrap():
    ag = Agent(AgentConfig(), 3)
    ag.q_net.biases[-1][int(K.TORUS)] = 2.0
    err = q_update(ag, ONES, K.MESH, -1.0, ONES, gamma=0.5)
    assert err == pytest.approx(0.0 - (-1.0 + 0.5 * 2.0))


# -------------------------------------------------------- weight policy


def test_baseline_is_exponential_average():
    ag = Agent(AgentConfig(cores=4, topologies=(K.MESH,)), 0)
    rng = substream(0, 2)
    rewards = [-1.0, -0.5, -2.0]
    for r in rewards:
        weight_policy_update(ag, [(predict_weights(ag, ONES, K.MESH, rng, train=True), r)])
    assert ag.baseline[K.MESH] == pytest.approx(0.9 * (0.9 * -1.0 + 0.1 * -0.5) + 0.1 * -2.0)


def test_first_sample_sets_baseline_without_a_step():
    ag = Agent(AgentConfig(cores=4, topologies=(K.MESH,)), 0)
    before = ag.heads[K.MESH].parameters().copy()
    s = predict_weights(ag, ONES, K.MESH, substream(0, 2), train=True)
    weight_policy_update(ag, [(s, -3.0)])
    assert ag.baseline[K.MESH] == -3.0
    assert np.array_equal(ag.heads[K.MESH].parameters(), before)


def _traffic_on_first_link(graph):
    net = Network(graph, compute_routing_tables(graph))
    for s in range(4):
        for d in range(4):
            if s != d:
                net.inject_packet(Packet(s, d, VNet.REQUEST, 5))
    net.drain()
    m = net.collect_noc_metrics()
    return m.link_flits.get((0, 1), 0) + m.link_flits.get((1, 0), 0)


@pytest.mark.parametrize("seed", range(3))
def test_weight_policy_steers_traffic_off_a_costly_link(seed):
    # reward penalizes flits on link 0-1 of a 2x2 mesh; the learned weights route around it
    ag = Agent(AgentConfig(cores=4, topologies=(K.MESH,)), seed)
    rng = substream(seed, 2)
    seen = []
    for _ in range(200):
        s = predict_weights(ag, ONES, K.MESH, rng, train=True)
        f = _traffic_on_first_link(ag.graphs[K.MESH].with_weights(s.weights))
        seen.append(f)
        weight_policy_update(ag, [(s, -f / 10)])
    final = _traffic_on_first_link(
        ag.graphs[K.MESH].with_weights(predict_weights(ag, ONES, K.MESH).weights))
    assert final < seen[0]
    assert np.mean(seen[-20:]) < np.mean(seen[:20])


def test_clamped_outputs_are_not_pushed_further():
    ag = Agent(AgentConfig(cores=4, topologies=(K.MESH,)), 0)
    head = ag.heads[K.MESH]
    head.biases[-1][:] = 10.0   # every raw output far past the clamp
    ag.baseline[K.MESH] = -1.0
    s = predict_weights(ag, ONES, K.MESH, substream(0, 2), train=True)
    s.xi[:] = 1.0               # with positive advantage, the step would raise raw further
    weight_policy_update(ag, [(s, 0.0)], lr=1.0)
    assert np.all(head.biases[-1] == 10.0)


# --------------------------------------------------------------- training


def test_bandit_finds_dominant_topology():
    lat = {k: 1.0 for k in K}
    lat[K.FATTREE] = 0.7
    cfg = TrainingConfig(episodes=200, seed=5, alphas=(1, 0, 0, 0))
    ag = Agent(cfg.agent, 5)
    greedy = []
    train(ag, BanditEnvironment(lat), cfg, Divisors(),
          on_episode=lambda e, r: greedy.append(greedy_topology(ag.q_values(ONES), ag.allowed)))
    assert np.mean([g is K.FATTREE for g in greedy[150:]]) >= 0.95


def test_substreams_are_independent_and_stable():
    a = substream(1, 2).random(4)
    assert np.array_equal(a, substream(1, 2).random(4))
    assert not np.array_equal(a, substream(1, 3).random(4))
    assert derived_seed(1, 2) == derived_seed(1, 2) != derived_seed(2, 1)


@pytest.fixture(scope="module")
def tiny_trace():
    return gen_shared_hotspot(16, 300, 0.05, 4, 0.5, 9)


def test_run_training_is_deterministic(tiny_trace, tmp_path):
    runs = []
    for i in range(2):
        cfg = TrainingConfig(episodes=3, seed=2, checkpoint_every=2,
                             checkpoint_dir=tmp_path / f"ck{i}",
                             history_path=tmp_path / f"h{i}.csv")
        run_training(tiny_trace, cfg, epoch_cycles=200)
        runs.append((tmp_path / f"h{i}.csv").read_bytes())
    assert runs[0] == runs[1]
    assert runs[0].decode().splitlines()[0] == ",".join(HISTORY_HEADER)
    assert (tmp_path / "ck0" / "episode_00002" / "agent.json").exists()


def test_trace_core_mismatch(tiny_trace):
    with pytest.raises(ValueError):
        run_training(tiny_trace, TrainingConfig(episodes=1, agent=AgentConfig(cores=8)))


def test_agent_round_trip(tiny_trace, tmp_path):
    cfg = TrainingConfig(episodes=2, seed=4)
    _, ag, _ = run_training(tiny_trace, cfg, epoch_cycles=200)
    ag.save(tmp_path / "a")
    back = Agent.load(tmp_path / "a")
    assert back.episode == ag.episode == 2
    assert back.baseline == ag.baseline
    s = np.array([1.0, 2.0, 0.5, 0.0, 3.0, 1.0])
    assert np.array_equal(back.q_values(s), ag.q_values(s))
    for kind in ag.allowed:
        assert np.array_equal(predict_weights(back, s, kind).weights,
                              predict_weights(ag, s, kind).weights)


def test_agent_skips_kinds_without_a_build():
    ag = Agent(AgentConfig(cores=6), 0)   # no 6-core fat tree / butterfly / mesh, etc.
    assert ag.allowed and all(k in ag.graphs for k in ag.allowed)
