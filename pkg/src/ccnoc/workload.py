"""Per-core memory access traces: synthetic generators, task graphs, trace files.

Trace file layout::

    #cores=16 gen=shared_hotspot seed=7 rate=0.05 ...
    core,cycle,R|W,hex_address
    ...

Access lines are sorted by ``(cycle, core)``.  Header tokens after ``seed`` carry
the generator parameters.
"""

from __future__ import annotations

import math
from collections import defaultdict, deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from ccnoc.coherence.messages import LINE_BYTES, MEMORY_BYTES
from ccnoc.coherence.system import Access

HOT_BASE = 0x0100_0000
PRIVATE_BASE = 0x0800_0000
TASK_BASE = 0x1000_0000


class CyclicGraph(ValueError):
    pass


@dataclass
class AccessTrace:
    cores: int
    accesses: list[list[Access]]
    generator: str = "custom"
    seed: int | None = None
    params: dict[str, str] = field(default_factory=dict)

    def __len__(self):
        return sum(len(a) for a in self.accesses)

    @property
    def last_cycle(self) -> int:
        return max((a[-1].cycle for a in self.accesses if a), default=0)

    def validate(self):
        if len(self.accesses) != self.cores:
            raise ValueError("one access list per core required")
        for core, accs in enumerate(self.accesses):
            prev = -1
            for a in accs:
                if a.cycle <= prev:
                    raise ValueError(f"core {core}: issue cycles not strictly increasing")
                if a.address % LINE_BYTES or not 0 <= a.address < MEMORY_BYTES:
                    raise ValueError(f"core {core}: bad address {a.address:#x}")
                prev = a.cycle

    def to_text(self) -> str:
        head = [f"#cores={self.cores}", f"gen={self.generator}", f"seed={self.seed}"]
        head += [f"{k}={v}" for k, v in self.params.items()]
        rows = sorted((a.cycle, core, a.write, a.address)
                      for core, accs in enumerate(self.accesses) for a in accs)
        lines = [" ".join(head)]
        lines += [f"{core},{cyc},{'W' if w else 'R'},{addr:#x}" for cyc, core, w, addr in rows]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "AccessTrace":
        lines = text.splitlines()
        if not lines or not lines[0].startswith("#"):
            raise ValueError("trace header missing")
        fields = dict(tok.split("=", 1) for tok in lines[0][1:].split())
        cores = int(fields.pop("cores"))
        gen = fields.pop("gen", "custom")
        seed_s = fields.pop("seed", "None")
        seed = None if seed_s == "None" else int(seed_s)
        accesses: list[list[Access]] = [[] for _ in range(cores)]
        for ln in lines[1:]:
            if not ln.strip():
                continue
            core, cyc, op, addr = ln.split(",")
            if op not in ("R", "W"):
                raise ValueError(f"bad op {op!r}")
            accesses[int(core)].append(Access(int(cyc), op == "W", int(addr, 16)))
        trace = cls(cores, accesses, gen, seed, fields)
        trace.validate()
        return trace


def save_trace(trace: AccessTrace, path) -> None:
    Path(path).write_text(trace.to_text())


def load_trace(path) -> AccessTrace:
    return AccessTrace.from_text(Path(path).read_text())


def _pool(address_pool) -> list[int]:
    if isinstance(address_pool, int):
        return [i * LINE_BYTES for i in range(address_pool)]
    return [int(a) for a in address_pool]


def _bernoulli_cycles(rng: np.random.Generator, cores: int, length: int, rate: float):
    hits = rng.random((cores, length)) < rate
    return [np.flatnonzero(hits[c]) for c in range(cores)]


def gen_uniform_random(cores: int, length: int, rate: float, write_fraction: float,
                       address_pool, seed: int) -> AccessTrace:
    """Each core issues with probability ``rate`` per cycle to a uniform pool line."""
    if not 0 <= rate <= 1:
        raise ValueError("rate must be in [0, 1]")
    if not 0 <= write_fraction <= 1:
        raise ValueError("write_fraction must be in [0, 1]")
    pool = _pool(address_pool)
    rng = np.random.default_rng(seed)
    per_core = _bernoulli_cycles(rng, cores, length, rate) if rate > 0 else [[]] * cores
    accesses = []
    for c in range(cores):
        cyc = per_core[c]
        n = len(cyc)
        writes = rng.random(n) < write_fraction
        picks = rng.integers(0, len(pool), n) if n else []
        accesses.append([Access(int(t), bool(w), pool[int(i)])
                         for t, w, i in zip(cyc, writes, picks)])
    params = {"length": str(length), "rate": repr(rate), "write_fraction": repr(write_fraction),
              "pool": str(len(pool))}
    return AccessTrace(cores, accesses, "uniform_random", seed, params)


def sharing_groups(cores: int, k: int) -> list[list[int]]:
    """Consecutive core groups of size ``k``; a lone leftover core joins the last group."""
    groups = [list(range(i, min(i + k, cores))) for i in range(0, cores, k)]
    if len(groups) > 1 and len(groups[-1]) < 2:
        groups[-2].extend(groups.pop())
    return groups


def gen_shared_hotspot(cores: int, length: int, rate: float, sharing_degree: int,
                       hot_fraction: float, seed: int, hot_lines: int = 8,
                       private_lines: int = 256, hot_write_fraction: float = 0.1,
                       private_write_fraction: float = 0.3) -> AccessTrace:
    """Read-mostly hot lines shared inside groups of ``sharing_degree`` cores.

    The remaining ``1 - hot_fraction`` of accesses go to lines private to the
    issuing core.  Occasional writes to hot lines produce S-state upgrades and
    invalidation bursts.
    """
    k = sharing_degree
    if not 2 <= k <= cores:
        raise ValueError(f"sharing degree must be in [2, {cores}]")
    if not 0 <= hot_fraction <= 1:
        raise ValueError("hot_fraction must be in [0, 1]")
    rng = np.random.default_rng(seed)
    groups = sharing_groups(cores, k)
    group_of = {c: g for g, members in enumerate(groups) for c in members}
    per_core = _bernoulli_cycles(rng, cores, length, rate) if rate > 0 else [[]] * cores
    accesses = []
    for c in range(cores):
        cyc = per_core[c]
        n = len(cyc)
        hot = rng.random(n) < hot_fraction
        u = rng.random(n)
        hot_pick = rng.integers(0, hot_lines, n) if n else []
        priv_pick = rng.integers(0, private_lines, n) if n else []
        hot_base = HOT_BASE + group_of[c] * hot_lines * LINE_BYTES
        priv_base = PRIVATE_BASE + c * private_lines * LINE_BYTES
        row = []
        for t, h, x, hp, pp in zip(cyc, hot, u, hot_pick, priv_pick):
            if h:
                row.append(Access(int(t), bool(x < hot_write_fraction),
                                  hot_base + int(hp) * LINE_BYTES))
            else:
                row.append(Access(int(t), bool(x < private_write_fraction),
                                  priv_base + int(pp) * LINE_BYTES))
        accesses.append(row)
    params = {"length": str(length), "rate": repr(rate), "k": str(k),
              "hot_fraction": repr(hot_fraction), "hot_lines": str(hot_lines),
              "private_lines": str(private_lines)}
    return AccessTrace(cores, accesses, "shared_hotspot", seed, params)


# ---------------------------------------------------------------- task graphs


@dataclass
class Task:
    id: int
    compute_cycles: int
    core: int


@dataclass
class SharedRegion:
    start: int
    lines: int
    producer: int
    consumers: list[int]

    def addresses(self) -> list[int]:
        return [self.start + i * LINE_BYTES for i in range(self.lines)]


@dataclass
class TaskGraph:
    tasks: list[Task]
    edges: list[tuple[int, int]]
    regions: list[SharedRegion] = field(default_factory=list)
    cores: int | None = None

    def all_edges(self) -> list[tuple[int, int]]:
        edges = set(self.edges)
        for r in self.regions:
            edges.update((r.producer, c) for c in r.consumers)
        return sorted(edges)

    def topological_order(self) -> list[int]:
        ids = [t.id for t in self.tasks]
        indeg = {i: 0 for i in ids}
        succ = defaultdict(list)
        for a, b in self.all_edges():
            succ[a].append(b)
            indeg[b] += 1
        ready = deque(sorted(i for i in ids if indeg[i] == 0))
        order = []
        while ready:
            u = ready.popleft()
            order.append(u)
            for v in succ[u]:
                indeg[v] -= 1
                if indeg[v] == 0:
                    ready.append(v)
        if len(order) != len(ids):
            raise CyclicGraph("task graph has a cycle")
        return order

    def validate(self):
        ids = {t.id for t in self.tasks}
        for a, b in self.edges:
            if a not in ids or b not in ids:
                raise ValueError(f"edge ({a},{b}) names an unknown task")
        seen = set()
        for r in self.regions:
            if r.producer not in ids or any(c not in ids for c in r.consumers):
                raise ValueError("region names an unknown task")
            for addr in r.addresses():
                if addr in seen:
                    raise ValueError(f"line {addr:#x} has more than one producer")
                seen.add(addr)
        self.topological_order()


def gen_from_taskgraph(graph: TaskGraph) -> AccessTrace:
    """ASAP schedule: producers write their region while computing, consumers read on start."""
    graph.validate()
    order = graph.topological_order()
    tasks = {t.id: t for t in graph.tasks}
    preds = defaultdict(list)
    for a, b in graph.all_edges():
        preds[b].append(a)
    writes = defaultdict(list)
    reads = defaultdict(list)
    for r in graph.regions:
        writes[r.producer].extend(r.addresses())
        for c in r.consumers:
            reads[c].extend(r.addresses())

    cores = graph.cores or (max(t.core for t in graph.tasks) + 1)
    core_free = [0] * cores
    finish = {}
    accesses: list[list[Access]] = [[] for _ in range(cores)]
    for tid in order:
        t = tasks[tid]
        start = max([core_free[t.core]] + [finish[p] for p in preds[tid]])
        cyc = start
        row = accesses[t.core]
        for addr in reads[tid]:
            row.append(Access(cyc, False, addr))
            cyc += 1
        # spread the producer's writes over its compute window
        n_w = len(writes[tid])
        span = max(t.compute_cycles, n_w)
        step = max(1, span // n_w) if n_w else 1
        for i, addr in enumerate(writes[tid]):
            row.append(Access(cyc + i * step, True, addr))
        end = max(cyc + span, cyc + (n_w - 1) * step + 1 if n_w else cyc)
        finish[tid] = end
        core_free[t.core] = end
    trace = AccessTrace(cores, accesses, "taskgraph", None,
                        {"tasks": str(len(graph.tasks))})
    trace.validate()
    return trace


def motivating_taskgraph(compute_cycles: int = 200, lines: int = 16) -> TaskGraph:
    """Four tasks on four cores: t0 and t1 share data from core 0, t1 and t3 share data from core 3."""
    tasks = [Task(i, compute_cycles, i) for i in range(4)]
    edges = [(0, 1), (0, 2), (1, 3), (2, 3)]
    regions = [
        SharedRegion(TASK_BASE, lines, producer=0, consumers=[1]),
        SharedRegion(TASK_BASE + lines * LINE_BYTES, lines, producer=1, consumers=[3]),
        SharedRegion(TASK_BASE + 2 * lines * LINE_BYTES, lines, producer=2, consumers=[3]),
    ]
    return TaskGraph(tasks, edges, regions, cores=4)


def random_taskgraph(n_tasks: int, cores: int, seed: int, edge_prob: float = 0.3,
                     lines: int = 8, compute: tuple[int, int] = (50, 300)) -> TaskGraph:
    """Random DAG (edges only from lower to higher id) with one region per edge."""
    rng = np.random.default_rng(seed)
    tasks = [Task(i, int(rng.integers(*compute)), int(rng.integers(0, cores)))
             for i in range(n_tasks)]
    edges = [(a, b) for a in range(n_tasks) for b in range(a + 1, n_tasks)
             if rng.random() < edge_prob]
    regions = []
    base = TASK_BASE
    for a in range(n_tasks):
        consumers = [b for x, b in edges if x == a]
        if consumers:
            regions.append(SharedRegion(base, lines, a, consumers))
            base += lines * LINE_BYTES
    return TaskGraph(tasks, edges, regions, cores=cores)


def per_core_rate(trace: AccessTrace) -> float:
    span = max(1, trace.last_cycle + 1)
    return len(trace) / (trace.cores * span)


def distinct_lines(trace: AccessTrace) -> int:
    return len({a.address for accs in trace.accesses for a in accs})


def traces_equal(a: AccessTrace, b: AccessTrace) -> bool:
    return (a.cores == b.cores and a.accesses == b.accesses and a.generator == b.generator
            and a.seed == b.seed and a.params == b.params)


__all__ = [
    "AccessTrace", "CyclicGraph", "SharedRegion", "Task", "TaskGraph", "gen_from_taskgraph",
    "gen_shared_hotspot", "gen_uniform_random", "load_trace", "motivating_taskgraph",
    "random_taskgraph", "save_trace", "sharing_groups",
]
