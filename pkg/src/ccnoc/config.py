"""INI run configuration.

Example::

    [run]
    seed = 1
    cycles = 200000
    ccta = on

    [topology]
    kind = mesh
    cores = 16

    [routing]
    policy = xy            ; or weighted
    weights = uniform      ; or a path to an edge-list file "a b w"

    [trace]
    generator = shared_hotspot   ; uniform_random | shared_hotspot | taskgraph | file
    length = 5000
    rate = 0.05
    k = 4
    hot_fraction = 0.5

    [energy]
    e_link = 1e-12

    [train]
    episodes = 100
    epoch_cycles = 10000

Relative paths resolve against the config file's directory.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, fields
from pathlib import Path

from ccnoc.energy import EnergyParams
from ccnoc.optimizer import AgentConfig, STREAM_WORKLOAD, derived_seed
from ccnoc.topology import NetworkGraph, TopologyKind, build_topology
from ccnoc.workload import (AccessTrace, gen_from_taskgraph, gen_shared_hotspot,
                            gen_uniform_random, load_trace, motivating_taskgraph)

GENERATORS = ("uniform_random", "shared_hotspot", "taskgraph", "file")


class ConfigError(ValueError):
    pass


@dataclass
class TraceSpec:
    generator: str = "shared_hotspot"
    path: Path | None = None
    length: int = 5000
    rate: float = 0.05
    write_fraction: float = 0.3
    pool: int = 64
    k: int = 4
    hot_fraction: float = 0.5
    compute_cycles: int = 200
    region_lines: int = 16


@dataclass
class TrainSpec:
    episodes: int = 100
    epoch_cycles: int = 10_000
    max_epochs: int = 1000
    checkpoint_every: int = 10
    alphas: tuple[float, float, float, float] = (0.25, 0.25, 0.25, 0.25)
    sigma: float = 0.3
    gamma: float = 0.9
    q_lr: float = 1e-3
    w_lr: float = 1e-3
    dropout: float = 0.5


@dataclass
class RunConfig:
    kind: TopologyKind = TopologyKind.MESH
    cores: int = 16
    routing: str = "xy"
    weights: str = "uniform"
    trace: TraceSpec = field(default_factory=TraceSpec)
    cycles: int | None = None
    seed: int | None = None
    ccta: bool = True
    check: bool = False
    energy: EnergyParams = field(default_factory=EnergyParams)
    train: TrainSpec = field(default_factory=TrainSpec)
    output: Path = Path("out")
    frequency_ghz: float = 2.0  # metadata only; all timing is in cycles
    base_dir: Path = Path(".")

    def validate(self):
        if self.routing not in ("xy", "weighted"):
            raise ConfigError(f"routing must be xy or weighted, not {self.routing!r}")
        if self.routing == "xy" and self.kind is not TopologyKind.MESH:
            raise ConfigError("xy routing requires the Mesh topology")
        if self.trace.generator not in GENERATORS:
            raise ConfigError(f"unknown trace generator {self.trace.generator!r}")
        if self.trace.generator == "file":
            if self.trace.path is None:
                raise ConfigError("trace generator 'file' needs a path")
        elif self.seed is None and self.trace.generator != "taskgraph":
            raise ConfigError("a seed is required for generated traces")
        build_topology(self.kind, self.cores)

    # ------------------------------------------------------------- builders

    def build_trace(self) -> AccessTrace:
        t = self.trace
        if t.generator == "file":
            trace = load_trace(self._resolve(t.path))
            if trace.cores != self.cores:
                raise ConfigError(f"trace has {trace.cores} cores, config says {self.cores}")
            return trace
        if t.generator == "taskgraph":
            if self.cores < 4:
                raise ConfigError("the task-graph example needs at least 4 cores")
            g = motivating_taskgraph(t.compute_cycles, t.region_lines)
            g.cores = self.cores
            return gen_from_taskgraph(g)
        wseed = derived_seed(self.seed, STREAM_WORKLOAD)
        if t.generator == "uniform_random":
            return gen_uniform_random(self.cores, t.length, t.rate, t.write_fraction, t.pool,
                                      wseed)
        return gen_shared_hotspot(self.cores, t.length, t.rate, t.k, t.hot_fraction, wseed)

    def build_graph(self) -> NetworkGraph:
        g = build_topology(self.kind, self.cores)
        if self.routing == "weighted" and self.weights != "uniform":
            text = self._resolve(Path(self.weights)).read_text()
            loaded = NetworkGraph.from_edge_list(text)
            if loaded.links != g.links:
                raise ConfigError("weights file does not match the configured topology")
            g = g.with_weights(loaded.link_weights)
        return g

    def agent_config(self) -> AgentConfig:
        tr = self.train
        return AgentConfig(cores=self.cores, sigma=tr.sigma, gamma=tr.gamma, q_lr=tr.q_lr,
                           w_lr=tr.w_lr, dropout=tr.dropout)

    def _resolve(self, p: Path) -> Path:
        p = Path(p)
        return p if p.is_absolute() else self.base_dir / p


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "on", "yes", "true"):
        return True
    if v in ("0", "off", "no", "false"):
        return False
    raise ConfigError(f"not a boolean: {s!r}")


def _fill(obj, section: configparser.SectionProxy, skip=()):
    for f in fields(obj):
        if f.name in skip or f.name not in section:
            continue
        raw = section[f.name]
        cur = getattr(obj, f.name)
        try:
            if isinstance(cur, bool):
                val = _bool(raw)
            elif isinstance(cur, int):
                val = int(raw)
            elif isinstance(cur, float):
                val = float(raw)
            elif isinstance(cur, tuple):
                val = tuple(float(x) for x in raw.replace(",", " ").split())
            elif f.name == "path":
                val = Path(raw)
            else:
                val = raw.strip()
        except ValueError as exc:
            raise ConfigError(f"[{section.name}] {f.name}: {exc}") from None
        setattr(obj, f.name, val)
    unknown = set(section) - {f.name for f in fields(obj)} - set(skip)
    if unknown:
        raise ConfigError(f"[{section.name}] unknown keys: {', '.join(sorted(unknown))}")


def parse_config(text: str, base_dir: Path = Path(".")) -> RunConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    cfg = RunConfig(base_dir=Path(base_dir))
    known = {"run", "topology", "routing", "trace", "energy", "train"}
    extra = set(cp.sections()) - known
    if extra:
        raise ConfigError(f"unknown sections: {', '.join(sorted(extra))}")
    try:
        if cp.has_section("run"):
            s = cp["run"]
            unknown = set(s) - {"seed", "cycles", "ccta", "check", "output", "frequency_ghz"}
            if unknown:
                raise ConfigError(f"[run] unknown keys: {', '.join(sorted(unknown))}")
            if "seed" in s:
                cfg.seed = int(s["seed"])
            if "cycles" in s:
                cfg.cycles = int(s["cycles"])
            if "ccta" in s:
                cfg.ccta = _bool(s["ccta"])
            if "check" in s:
                cfg.check = _bool(s["check"])
            if "output" in s:
                cfg.output = Path(s["output"])
            if "frequency_ghz" in s:
                cfg.frequency_ghz = float(s["frequency_ghz"])
        if cp.has_section("topology"):
            s = cp["topology"]
            cfg.kind = TopologyKind.parse(s.get("kind", "mesh"))
            cfg.cores = int(s.get("cores", "16"))
        if cp.has_section("routing"):
            s = cp["routing"]
            cfg.routing = s.get("policy", "xy").strip().lower()
            cfg.weights = s.get("weights", "uniform").strip()
        if cp.has_section("trace"):
            _fill(cfg.trace, cp["trace"])
        if cp.has_section("train"):
            _fill(cfg.train, cp["train"])
        if cp.has_section("energy"):
            s = cp["energy"]
            unknown = set(s) - {"e_link", "e_router", "p_static"}
            if unknown:
                raise ConfigError(f"[energy] unknown keys: {', '.join(sorted(unknown))}")
            cfg.energy = EnergyParams(**{k: float(v) for k, v in s.items()})
    except (ValueError, KeyError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from None
    if len(cfg.train.alphas) != 4:
        raise ConfigError("[train] alphas needs four values")
    return cfg


def load_config(path) -> RunConfig:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    return parse_config(text, p.parent)
