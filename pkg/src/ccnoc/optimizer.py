"""Reinforcement-learning loop for topology selection and link-weight routing.

A Q-network picks one of the six topologies at each decision epoch
(epsilon-greedy, epsilon = 1/(episode+1)).  A weight predictor (shared trunk,
one linear head per topology) proposes per-link weights.  The simulator is not
differentiable, so the weight predictor learns from the reward through a
score-function estimator on log-normal exploration noise.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Protocol, Sequence

import numpy as np

from ccnoc.ccta import Analyzer, CoherenceMetrics
from ccnoc.coherence import CoherentSystem
from ccnoc.neural import INFERENCE, TRAIN, FeedForwardNet, ForwardCache
from ccnoc.noc.network import DeadlockSuspected, NoCMetrics
from ccnoc.noc.routing import compute_routing_tables, xy_routing_table
from ccnoc.topology import (NetworkGraph, TopologyKind, UnsupportedCoreCount, build_topology,
                            enumerate_links)
from ccnoc.workload import AccessTrace

log = logging.getLogger(__name__)

N_FEATURES = 6
N_ACTIONS = len(TopologyKind)
FEATURES = ("L_t", "D_t", "link_util", "C_t", "H_t", "write_miss_avg")
FEATURE_CLAMP = 10.0
RAW_CLAMP = 2.3
HISTORY_HEADER = ["episode", "epoch", "topology", "epsilon", "reward", "L_t", "D_t",
                  "link_util", "C_t", "H_t", "write_miss_avg"]

# named RNG substreams derived from the single run seed
STREAM_WORKLOAD = 1
STREAM_NOISE = 2
STREAM_DROPOUT = 3
STREAM_EPSILON = 4
STREAM_INIT = 5


def substream(seed: int, stream: int) -> np.random.Generator:
    return np.random.default_rng([seed, stream])


def derived_seed(seed: int, stream: int) -> int:
    return int(np.random.SeedSequence([seed, stream]).generate_state(1)[0])


# ---------------------------------------------------------------- metrics


@dataclass(frozen=True)
class EpochMetrics:
    """Raw (unnormalized) metric values for one window, in feature order."""

    L_t: float = 0.0
    D_t: float = 0.0
    link_util: float = 0.0
    C_t: float = 0.0
    H_t: float = 0.0
    write_miss_avg: float = 0.0

    @classmethod
    def from_metrics(cls, noc: NoCMetrics, cc: CoherenceMetrics) -> "EpochMetrics":
        return cls(noc.L_t, noc.D_t, noc.average_link_utilization, float(cc.C_t), cc.H_t,
                   cc.write_miss_time_avg)

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, f) for f in FEATURES], dtype=np.float64)


@dataclass(frozen=True)
class Divisors:
    L_t: float = 1.0
    D_t: float = 1.0
    link_util: float = 1.0
    C_t: float = 1.0
    H_t: float = 1.0
    write_miss_avg: float = 1.0

    def __post_init__(self):
        for f in FEATURES:
            v = getattr(self, f)
            if not (v > 0 and np.isfinite(v)):
                raise ValueError(f"divisor {f} must be positive and finite, got {v}")

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, f) for f in FEATURES], dtype=np.float64)

    @classmethod
    def from_observed(cls, m: EpochMetrics) -> "Divisors":
        # floors keep near-idle metrics from blowing up the normalized scale
        floor = {"L_t": 1.0, "D_t": 1.0, "link_util": 1e-3, "C_t": 1.0, "H_t": 1.0,
                 "write_miss_avg": 1.0}
        return cls(**{f: float(max(getattr(m, f), floor[f])) for f in FEATURES})


def featurize(noc: NoCMetrics, cc: CoherenceMetrics, divisors: Divisors) -> np.ndarray:
    return normalize(EpochMetrics.from_metrics(noc, cc), divisors)


def normalize(m: EpochMetrics, divisors: Divisors) -> np.ndarray:
    return np.clip(m.as_array() / divisors.as_array(), 0.0, FEATURE_CLAMP)


@dataclass(frozen=True)
class RewardWeights:
    alphas: tuple[float, float, float, float] = (0.25, 0.25, 0.25, 0.25)  # L, H, D, C
    L_t: float = 1.0
    H_t: float = 1.0
    D_t: float = 1.0
    C_t: float = 1.0

    def __post_init__(self):
        if len(self.alphas) != 4 or any(a < 0 for a in self.alphas):
            raise ValueError("four non-negative alphas required")
        if not any(a > 0 for a in self.alphas):
            raise ValueError("at least one alpha must be positive")
        for v in (self.L_t, self.H_t, self.D_t, self.C_t):
            if not v > 0:
                raise ValueError("reward divisors must be positive")

    @classmethod
    def from_divisors(cls, d: Divisors, alphas=(0.25, 0.25, 0.25, 0.25)) -> "RewardWeights":
        return cls(tuple(alphas), d.L_t, d.H_t, d.D_t, d.C_t)


def compute_reward(m: EpochMetrics, w: RewardWeights) -> float:
    a1, a2, a3, a4 = w.alphas
    return -(a1 * (m.L_t / w.L_t) + a2 * (m.H_t / w.H_t)
             + a3 * (m.D_t / w.D_t) + a4 * (m.C_t / w.C_t))


def epsilon(episode: int) -> float:
    if episode < 0:
        raise ValueError("episode must be non-negative")
    return 1.0 / (episode + 1)


# ------------------------------------------------------------------ agent


@dataclass
class AgentConfig:
    cores: int = 16
    q_hidden: tuple[int, ...] = (64,)
    trunk_hidden: tuple[int, ...] = (256, 256)
    dropout: float = 0.5
    sigma: float = 0.3
    gamma: float = 0.9
    q_lr: float = 1e-3
    w_lr: float = 1e-3
    baseline_decay: float = 0.9
    topologies: tuple[TopologyKind, ...] = tuple(TopologyKind)


class Agent:
    def __init__(self, cfg: AgentConfig, seed: int):
        self.cfg = cfg
        self.seed = seed
        self.sigma = cfg.sigma
        self.episode = 0
        self.baseline: dict[TopologyKind, float] = {}
        self.q_net = FeedForwardNet([N_FEATURES, *cfg.q_hidden, N_ACTIONS],
                                    seed=derived_seed(seed, STREAM_INIT))
        # zero output layer: every Q starts at 0, above any (negative) reward, so
        # greedy play tries each topology before settling
        self.q_net.weights[-1][:] = 0.0
        self.trunk = FeedForwardNet([N_FEATURES + N_ACTIONS, *cfg.trunk_hidden],
                                    dropout=cfg.dropout, final_activation=True,
                                    seed=derived_seed(seed, STREAM_DROPOUT))
        self.graphs: dict[TopologyKind, NetworkGraph] = {}
        self.heads: dict[TopologyKind, FeedForwardNet] = {}
        for kind in cfg.topologies:
            try:
                g = build_topology(kind, cfg.cores)
            except UnsupportedCoreCount:
                continue
            self.graphs[kind] = g
            # zero-initialized heads start at uniform weights (raw 0 -> weight 1)
            self.heads[kind] = FeedForwardNet([cfg.trunk_hidden[-1], len(enumerate_links(g))],
                                              zero_init=True)
        if not self.heads:
            raise UnsupportedCoreCount(f"no topology supports {cfg.cores} cores")

    @property
    def allowed(self) -> list[TopologyKind]:
        return sorted(self.heads)

    def q_values(self, state) -> np.ndarray:
        return self.q_net.forward(state, INFERENCE)

    # -------------------------------------------------------- checkpoints

    def metadata(self) -> dict:
        return {"episode": self.episode, "sigma": self.sigma, "seed": self.seed,
                "baseline": {k.label: v for k, v in sorted(self.baseline.items())},
                "config": {k: (list(v) if isinstance(v, tuple) else v)
                           for k, v in asdict(self.cfg).items() if k != "topologies"},
                "topologies": [k.label for k in self.cfg.topologies]}

    def save(self, directory):
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        self.q_net.save(d / "q_net.ffn")
        self.trunk.save(d / "trunk.ffn")
        for kind, head in self.heads.items():
            head.save(d / f"head_{kind.label}.ffn")
        (d / "agent.json").write_text(json.dumps(self.metadata(), indent=1, sort_keys=True) + "\n")

    @classmethod
    def load(cls, directory) -> "Agent":
        d = Path(directory)
        meta = json.loads((d / "agent.json").read_text())
        cfg_kw = dict(meta["config"])
        for k in ("q_hidden", "trunk_hidden"):
            cfg_kw[k] = tuple(cfg_kw[k])
        cfg_kw["topologies"] = tuple(TopologyKind.parse(t) for t in meta["topologies"])
        agent = cls(AgentConfig(**cfg_kw), meta["seed"])
        agent.episode = meta["episode"]
        agent.sigma = meta["sigma"]
        agent.baseline = {TopologyKind.parse(k): v for k, v in meta["baseline"].items()}
        agent.q_net = FeedForwardNet.load(d / "q_net.ffn")
        agent.trunk = FeedForwardNet.load(d / "trunk.ffn")
        for kind in agent.heads:
            agent.heads[kind] = FeedForwardNet.load(d / f"head_{kind.label}.ffn")
        return agent


def select_topology(agent: Agent, state, episode: int, rng: np.random.Generator,
                    eps: float | None = None) -> TopologyKind:
    """Epsilon-greedy over the six kinds; greedy ties go to the lowest index.

    Exploration draws uniformly over all kinds the agent has a head for.
    """
    eps = epsilon(episode) if eps is None else eps
    allowed = agent.allowed
    if rng.random() < eps:
        return allowed[int(rng.integers(len(allowed)))]
    return greedy_topology(agent.q_values(state), allowed)


def greedy_topology(q, allowed: Sequence[TopologyKind] | None = None) -> TopologyKind:
    q = np.asarray(q, dtype=np.float64)
    idx = [int(k) for k in allowed] if allowed is not None else list(range(len(q)))
    best = max(idx, key=lambda i: (q[i], -i))
    return TopologyKind(best)


@dataclass
class WeightSample:
    topology: TopologyKind
    state: np.ndarray
    raw: np.ndarray
    weights: np.ndarray
    xi: np.ndarray
    trunk_cache: ForwardCache | None = None
    head_cache: ForwardCache | None = None


def topology_input(state, topology: TopologyKind) -> np.ndarray:
    onehot = np.zeros(N_ACTIONS)
    onehot[int(topology)] = 1.0
    return np.concatenate([np.asarray(state, dtype=np.float64), onehot])


def raw_to_weights(raw) -> np.ndarray:
    return np.exp(np.clip(raw, -RAW_CLAMP, RAW_CLAMP))


def predict_weights(agent: Agent, state, topology: TopologyKind,
                    rng: np.random.Generator | None = None, train: bool = False,
                    sigma: float | None = None) -> WeightSample:
    topology = TopologyKind.parse(topology)
    head = agent.heads[topology]
    mode = TRAIN if train else INFERENCE
    tc = agent.trunk.forward_cached(topology_input(state, topology), mode)
    hc = head.forward_cached(tc.output[0], mode)
    raw = hc.output[0]
    w = raw_to_weights(raw)
    sigma = agent.sigma if sigma is None else sigma
    xi = np.zeros_like(w)
    if train and rng is not None:
        xi = rng.standard_normal(w.shape)
        w = np.exp(np.clip(np.log(w) + sigma * xi, -RAW_CLAMP, RAW_CLAMP))
    return WeightSample(topology, np.asarray(state, dtype=np.float64), raw, w, xi, tc, hc)


def q_update(agent: Agent, s, action: TopologyKind, r: float, s_next, gamma: float | None = None,
             lr: float | None = None, terminal: bool = False) -> float:
    """One TD(0) step on the taken action's output; returns the TD error."""
    gamma = agent.cfg.gamma if gamma is None else gamma
    lr = agent.cfg.q_lr if lr is None else lr
    target = r if terminal else r + gamma * float(np.max(agent.q_values(s_next)))
    cache = agent.q_net.forward_cached(s, TRAIN)
    q = cache.output[0]
    g = np.zeros_like(q)
    a = int(action)
    g[a] = 2.0 * (q[a] - target)
    agent.q_net.sgd_step(agent.q_net.backward(cache, g), lr)
    return float(q[a] - target)


def weight_policy_update(agent: Agent, batch: Sequence[tuple[WeightSample, float]],
                         lr: float | None = None):
    """REINFORCE on the log-weight noise with a per-topology EMA baseline."""
    lr = agent.cfg.w_lr if lr is None else lr
    if not batch:
        return
    sigma = agent.sigma
    trunk_grads = None
    head_grads: dict[TopologyKind, object] = {}
    for sample, reward in batch:
        base = agent.baseline.get(sample.topology, reward)
        adv = reward - base
        if sigma > 0 and adv != 0:
            # descent on -A * log p; d log p / d raw = xi / sigma (straight through the clamp)
            g_raw = -adv * sample.xi / sigma
            # never push an already-clamped output further out
            g_raw[(sample.raw > RAW_CLAMP) & (g_raw < 0)] = 0.0
            g_raw[(sample.raw < -RAW_CLAMP) & (g_raw > 0)] = 0.0
            head = agent.heads[sample.topology]
            hg = head.backward(sample.head_cache, g_raw)
            tg = agent.trunk.backward(sample.trunk_cache, hg.input)
            prev = head_grads.get(sample.topology)
            head_grads[sample.topology] = hg if prev is None else _add(prev, hg)
            trunk_grads = tg if trunk_grads is None else _add(trunk_grads, tg)
    n = len(batch)
    for kind, hg in head_grads.items():
        agent.heads[kind].sgd_step(hg.scaled(1.0 / n), lr)
    if trunk_grads is not None:
        agent.trunk.sgd_step(trunk_grads.scaled(1.0 / n), lr)
    d = agent.cfg.baseline_decay
    for sample, reward in batch:
        if sample.topology in agent.baseline:
            agent.baseline[sample.topology] = d * agent.baseline[sample.topology] + (1 - d) * reward
        else:
            agent.baseline[sample.topology] = reward


def _add(a, b):
    a.weights = [x + y for x, y in zip(a.weights, b.weights)]
    a.biases = [x + y for x, y in zip(a.biases, b.biases)]
    return a


# ------------------------------------------------------------ environments


@dataclass
class EpochOutcome:
    metrics: EpochMetrics
    done: bool
    noc: NoCMetrics | None = None
    cc: CoherenceMetrics | None = None


class Environment(Protocol):
    def reset(self, episode: int) -> None: ...
    def step(self, topology: TopologyKind, graph: NetworkGraph) -> EpochOutcome: ...


def merge_noc(parts: Sequence[NoCMetrics]) -> NoCMetrics:
    """Combine per-network metrics into one (packet-weighted latency and delay)."""
    out = NoCMetrics()
    n = sum(p.ejected_packets for p in parts)
    out.ejected_packets = n
    out.injected_packets = sum(p.injected_packets for p in parts)
    out.flit_hops = sum(p.flit_hops for p in parts)
    out.router_traversals = sum(p.router_traversals for p in parts)
    if n:
        out.average_packet_latency = sum(p.L_t * p.ejected_packets for p in parts) / n
        out.average_packet_delay = sum(p.D_t * p.ejected_packets for p in parts) / n
    span = sum(p.window[1] - p.window[0] for p in parts)
    if span:
        out.average_link_utilization = sum(
            p.average_link_utilization * (p.window[1] - p.window[0]) for p in parts) / span
    if parts:
        out.window = (parts[0].window[0], parts[-1].window[1])
    out.empty = n == 0
    for p in parts:
        for k, v in p.link_flits.items():
            out.link_flits[k] = out.link_flits.get(k, 0) + v
    return out


class SimulatorEnvironment:
    """Runs the coherent many-core model on a fixed trace, one epoch per step.

    Each epoch simulates ``epoch_cycles`` cycles and then drains, so every
    message an epoch sends is charged to that epoch.
    """

    def __init__(self, trace: AccessTrace, epoch_cycles: int = 10_000, max_epochs: int = 1000,
                 check: bool = False):
        self.trace = trace
        self.epoch_cycles = epoch_cycles
        self.max_epochs = max_epochs
        self.check = check
        self.system: CoherentSystem | None = None
        self.ccta: Analyzer | None = None
        self.epoch = 0

    def reset(self, episode: int):
        self.system = None
        self.ccta = Analyzer()
        self.epoch = 0

    def step(self, topology: TopologyKind, graph: NetworkGraph, tables=None) -> EpochOutcome:
        tables = tables if tables is not None else compute_routing_tables(graph)
        if self.system is None:
            self.system = CoherentSystem(graph, tables, self.trace.accesses, ccta=self.ccta,
                                         check=self.check)
            self.system.start()
        else:
            self.system.reconfigure(graph, tables)
        sys = self.system
        start = sys.cycle
        sys.run(stop_at=start + self.epoch_cycles)
        sys.quiesce()
        end = sys.cycle
        noc = sys.network.collect_noc_metrics((start, end))
        cc = self.ccta.report((start, end))
        self.epoch += 1
        done = sys.finished() or self.epoch >= self.max_epochs
        return EpochOutcome(EpochMetrics.from_metrics(noc, cc), done, noc, cc)


def run_episode_fixed(trace: AccessTrace, graph: NetworkGraph, tables, epoch_cycles: int,
                      max_epochs: int = 1000) -> tuple[list[EpochOutcome], SimulatorEnvironment]:
    """Play a whole episode with a fixed network (used for calibration and baselines)."""
    env = SimulatorEnvironment(trace, epoch_cycles, max_epochs)
    env.reset(0)
    outs = []
    while True:
        o = env.step(TopologyKind.MESH, graph, tables)
        outs.append(o)
        if o.done:
            return outs, env


def calibrate(trace: AccessTrace, cores: int, epoch_cycles: int) -> Divisors:
    """Per-epoch mean metrics of XY routing on the Mesh (or uniform weights if no Mesh fits)."""
    try:
        g = build_topology(TopologyKind.MESH, cores)
        tables = xy_routing_table(g)
    except UnsupportedCoreCount:
        g = build_topology(TopologyKind.CROSSBAR, cores)
        tables = compute_routing_tables(g)
    outs, _ = run_episode_fixed(trace, g, tables, epoch_cycles)
    mean = np.mean([o.metrics.as_array() for o in outs], axis=0)
    return Divisors.from_observed(EpochMetrics(*mean))


# ------------------------------------------------------------------- loop


@dataclass
class EpochRecord:
    episode: int
    epoch: int
    topology: TopologyKind
    epsilon: float
    reward: float
    metrics: EpochMetrics
    state: np.ndarray
    weights: np.ndarray

    def csv_row(self) -> list[str]:
        m = self.metrics
        return [str(self.episode), str(self.epoch), self.topology.label, repr(self.epsilon),
                repr(self.reward), repr(m.L_t), repr(m.D_t), repr(m.link_util), repr(m.C_t),
                repr(m.H_t), repr(m.write_miss_avg)]


@dataclass
class TrainingHistory:
    records: list[EpochRecord] = field(default_factory=list)
    episode_rewards: list[float] = field(default_factory=list)
    aborted: list[tuple[int, str]] = field(default_factory=list)

    def to_csv(self) -> str:
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(HISTORY_HEADER)
        for r in self.records:
            w.writerow(r.csv_row())
        return out.getvalue()

    def save(self, path):
        Path(path).write_text(self.to_csv())


@dataclass
class TrainingConfig:
    episodes: int = 100
    seed: int = 0
    agent: AgentConfig = field(default_factory=AgentConfig)
    alphas: tuple[float, float, float, float] = (0.25, 0.25, 0.25, 0.25)
    divisors: Divisors | None = None
    checkpoint_every: int = 10
    checkpoint_dir: Path | None = None
    history_path: Path | None = None


def train(agent: Agent, env: Environment, cfg: TrainingConfig, divisors: Divisors,
          initial_state: np.ndarray | None = None,
          on_episode: Callable[[int, float], None] | None = None) -> TrainingHistory:
    """Generic loop shared by the simulator and stub environments."""
    rewards_w = RewardWeights.from_divisors(divisors, cfg.alphas)
    eps_rng = substream(cfg.seed, STREAM_EPSILON)
    noise_rng = substream(cfg.seed, STREAM_NOISE)
    s0 = np.ones(N_FEATURES) if initial_state is None else np.asarray(initial_state, float)
    hist = TrainingHistory()
    for ep in range(agent.episode, agent.episode + cfg.episodes):
        env.reset(ep)
        s = s0
        ep_rewards = []
        epoch = 0
        try:
            while True:
                a = select_topology(agent, s, ep, eps_rng)
                sample = predict_weights(agent, s, a, noise_rng, train=True)
                graph = agent.graphs[a].with_weights(sample.weights)
                out = env.step(a, graph)
                r = compute_reward(out.metrics, rewards_w)
                s_next = normalize(out.metrics, divisors)
                q_update(agent, s, a, r, s_next, terminal=out.done)
                weight_policy_update(agent, [(sample, r)])
                hist.records.append(EpochRecord(ep, epoch, a, epsilon(ep), r, out.metrics,
                                                s, sample.weights))
                ep_rewards.append(r)
                s = s_next
                epoch += 1
                if out.done:
                    break
        except DeadlockSuspected as exc:
            log.warning("episode %d aborted: %s", ep, exc)
            hist.aborted.append((ep, str(exc)))
        mean_r = float(np.mean(ep_rewards)) if ep_rewards else float("nan")
        hist.episode_rewards.append(mean_r)
        agent.episode = ep + 1
        if on_episode is not None:
            on_episode(ep, mean_r)
        if cfg.checkpoint_dir is not None and cfg.checkpoint_every > 0 \
                and agent.episode % cfg.checkpoint_every == 0:
            agent.save(Path(cfg.checkpoint_dir) / f"episode_{agent.episode:05d}")
    return hist


def run_training(trace: AccessTrace, cfg: TrainingConfig, epoch_cycles: int = 10_000,
                 agent: Agent | None = None, max_epochs: int = 1000,
                 on_episode: Callable[[int, float], None] | None = None
                 ) -> tuple[TrainingHistory, Agent, Divisors]:
    if trace.cores != cfg.agent.cores:
        raise ValueError(f"trace has {trace.cores} cores, agent expects {cfg.agent.cores}")
    t0 = time.perf_counter()
    divisors = cfg.divisors or calibrate(trace, trace.cores, epoch_cycles)
    log.info("calibration divisors %s (%.1fs)", divisors, time.perf_counter() - t0)
    agent = agent or Agent(cfg.agent, cfg.seed)
    env = SimulatorEnvironment(trace, epoch_cycles, max_epochs)
    hist = train(agent, env, cfg, divisors, on_episode=on_episode)
    if cfg.history_path is not None:
        hist.save(cfg.history_path)
    return hist, agent, divisors


@dataclass
class Evaluation:
    noc: NoCMetrics
    cc: CoherenceMetrics
    topologies: list[TopologyKind]
    cycles: int

    @property
    def latency_plus_delay(self) -> float:
        return self.noc.L_t + self.noc.D_t


def evaluate_policy(agent: Agent, trace: AccessTrace, divisors: Divisors,
                    epoch_cycles: int = 10_000, max_epochs: int = 1000) -> Evaluation:
    """Greedy topology, noise-free weights, inference mode; whole-run metrics."""
    env = SimulatorEnvironment(trace, epoch_cycles, max_epochs)
    env.reset(0)
    s = np.ones(N_FEATURES)
    parts, kinds = [], []
    while True:
        a = greedy_topology(agent.q_values(s), agent.allowed)
        sample = predict_weights(agent, s, a)
        out = env.step(a, agent.graphs[a].with_weights(sample.weights))
        parts.append(out.noc)
        kinds.append(a)
        s = normalize(out.metrics, divisors)
        if out.done:
            break
    sys = env.system
    return Evaluation(merge_noc(parts), env.ccta.report(), kinds, sys.cycle)


def evaluate_xy_mesh(trace: AccessTrace, epoch_cycles: int = 10_000) -> Evaluation:
    g = build_topology(TopologyKind.MESH, trace.cores)
    outs, env = run_episode_fixed(trace, g, xy_routing_table(g), epoch_cycles)
    return Evaluation(merge_noc([o.noc for o in outs]), env.ccta.report(),
                      [TopologyKind.MESH] * len(outs), env.system.cycle)


# ------------------------------------------------------------ stub bandit


class BanditEnvironment:
    """Terminal-per-episode stub: each topology yields a fixed latency metric.

    With ``L_t`` as the only weighted term, the reward of kind ``k`` is
    ``-latency[k]`` (divisor 1).
    """

    def __init__(self, latencies: dict[TopologyKind, float], noise: float = 0.0, seed: int = 0):
        self.latencies = dict(latencies)
        self.noise = noise
        self.rng = substream(seed, 99)

    def reset(self, episode: int):
        pass

    def step(self, topology: TopologyKind, graph: NetworkGraph) -> EpochOutcome:
        v = self.latencies[topology]
        if self.noise:
            v += self.noise * float(self.rng.standard_normal())
        return EpochOutcome(EpochMetrics(L_t=v), True)
