"""Candidate NoC topologies and their canonical link enumeration.

Every graph built here is undirected; each link is traversable in both
directions.  Links are kept sorted by ``(min endpoint, max endpoint)`` so the
index of a link is stable for a given ``(kind, cores)`` pair.  The link-weight
predictor keys its output layer on that index.
"""

from __future__ import annotations

import enum
import math
from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence


class UnsupportedCoreCount(ValueError):
    pass


class TopologyKind(enum.IntEnum):
    CROSSBAR = 0
    MESH = 1
    PT2PT = 2
    TORUS = 3
    FATTREE = 4
    FLATTENED_BUTTERFLY = 5

    @classmethod
    def parse(cls, name: str | int | "TopologyKind") -> "TopologyKind":
        if isinstance(name, TopologyKind):
            return name
        if isinstance(name, int):
            return cls(name)
        key = str(name).strip().lower().replace("_", "").replace("-", "")
        for kind in cls:
            if kind.name.lower().replace("_", "") == key:
                return kind
        aliases = {"fbfly": cls.FLATTENED_BUTTERFLY, "butterfly": cls.FLATTENED_BUTTERFLY,
                   "p2p": cls.PT2PT, "xbar": cls.CROSSBAR}
        if key in aliases:
            return aliases[key]
        raise ValueError(f"unknown topology kind {name!r}")

    @property
    def label(self) -> str:
        return {
            TopologyKind.CROSSBAR: "Crossbar",
            TopologyKind.MESH: "Mesh",
            TopologyKind.PT2PT: "Pt2Pt",
            TopologyKind.TORUS: "Torus",
            TopologyKind.FATTREE: "FatTree",
            TopologyKind.FLATTENED_BUTTERFLY: "FlattenedButterfly",
        }[self]


GRID_CORE_COUNTS = (4, 16, 64)
GRID_KINDS = (TopologyKind.MESH, TopologyKind.TORUS, TopologyKind.FLATTENED_BUTTERFLY)

Link = tuple[int, int]


@dataclass
class NetworkGraph:
    """Routers, the core-hosting subset of them, and weighted undirected links."""

    node_count: int
    core_nodes: list[int]
    links: list[Link]
    link_weights: list[float] = field(default_factory=list)
    kind: TopologyKind | None = None

    def __post_init__(self):
        self.links = [canonical_link(a, b) for a, b in self.links]
        order = sorted(range(len(self.links)), key=lambda i: self.links[i])
        if not self.link_weights:
            self.link_weights = [1.0] * len(self.links)
        if len(self.link_weights) != len(self.links):
            raise ValueError("one weight per link required")
        self.links = [self.links[i] for i in order]
        self.link_weights = [float(self.link_weights[i]) for i in order]
        self._index = {link: i for i, link in enumerate(self.links)}

    @classmethod
    def from_links(cls, node_count: int, links: Iterable[Link],
                   core_nodes: Sequence[int] | None = None) -> "NetworkGraph":
        """Ad-hoc graph (used by tests and tooling); every node hosts a core unless told otherwise."""
        cores = list(range(node_count)) if core_nodes is None else list(core_nodes)
        return cls(node_count, cores, list(links))

    @property
    def cores(self) -> int:
        return len(self.core_nodes)

    def link_index(self, a: int, b: int) -> int:
        return self._index[canonical_link(a, b)]

    def weight(self, a: int, b: int) -> float:
        return self.link_weights[self._index[canonical_link(a, b)]]

    def neighbors(self) -> list[list[int]]:
        nbrs: list[list[int]] = [[] for _ in range(self.node_count)]
        for a, b in self.links:
            if 0 <= a < self.node_count and 0 <= b < self.node_count:
                nbrs[a].append(b)
                nbrs[b].append(a)
        for lst in nbrs:
            lst.sort()
        return nbrs

    def with_weights(self, weights: Sequence[float]) -> "NetworkGraph":
        """Copy of this graph carrying ``weights`` in canonical link order."""
        if len(weights) != len(self.links):
            raise ValueError(f"expected {len(self.links)} weights, got {len(weights)}")
        g = NetworkGraph(self.node_count, list(self.core_nodes), list(self.links),
                         [float(w) for w in weights], self.kind)
        return g

    def grid_side(self) -> int:
        side = math.isqrt(self.node_count)
        if self.kind not in GRID_KINDS or side * side != self.node_count:
            raise ValueError("not a grid topology")
        return side

    def to_edge_list(self) -> str:
        kind = self.kind.label if self.kind is not None else "Custom"
        lines = [f"{kind} {self.cores} {self.node_count} {len(self.links)}"]
        for (a, b), w in zip(self.links, self.link_weights):
            lines.append(f"{a} {b} {w!r}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_edge_list(cls, text: str) -> "NetworkGraph":
        rows = [ln.split() for ln in text.splitlines() if ln.strip()]
        kind_name, cores, nodes, n_links = rows[0]
        kind = None if kind_name == "Custom" else TopologyKind.parse(kind_name)
        if kind is not None:
            base = build_topology(kind, int(cores))
            core_nodes = base.core_nodes
        else:
            core_nodes = list(range(int(cores)))
        links = [(int(a), int(b)) for a, b, _ in rows[1:]]
        weights = [float(w) for _, _, w in rows[1:]]
        if len(links) != int(n_links):
            raise ValueError("edge list length does not match its header")
        return cls(int(nodes), core_nodes, links, weights, kind)


def canonical_link(a: int, b: int) -> Link:
    return (a, b) if a <= b else (b, a)


def _grid_side(kind: TopologyKind, cores: int) -> int:
    if cores not in GRID_CORE_COUNTS:
        raise UnsupportedCoreCount(
            f"{kind.label} supports {GRID_CORE_COUNTS} cores, got {cores}")
    return math.isqrt(cores)


def _mesh_links(n: int) -> set[Link]:
    links = set()
    for y in range(n):
        for x in range(n):
            i = y * n + x
            if x + 1 < n:
                links.add((i, i + 1))
            if y + 1 < n:
                links.add((i, i + n))
    return links


def _torus_links(n: int) -> set[Link]:
    links = _mesh_links(n)
    for y in range(n):
        links.add(canonical_link(y * n, y * n + n - 1))
    for x in range(n):
        links.add(canonical_link(x, (n - 1) * n + x))
    # for n == 2 the wraparound links coincide with mesh links; the set drops them
    return links


def _flattened_butterfly_links(n: int) -> set[Link]:
    links = set()
    for y in range(n):
        for x1 in range(n):
            for x2 in range(x1 + 1, n):
                links.add((y * n + x1, y * n + x2))
    for x in range(n):
        for y1 in range(n):
            for y2 in range(y1 + 1, n):
                links.add((y1 * n + x, y2 * n + x))
    return links


def _fat_tree_links(cores: int) -> tuple[int, set[Link]]:
    # leaves are the cores 0..cores-1; switches are numbered upward from there
    level = list(range(cores))
    next_id = cores
    links = set()
    while len(level) > 1:
        parents = []
        for i in range(0, len(level) - 1, 2):
            links.add((level[i], next_id))
            links.add((level[i + 1], next_id))
            parents.append(next_id)
            next_id += 1
        if len(level) % 2:
            parents.append(level[-1])
        level = parents
    return next_id, links


def build_topology(kind: TopologyKind | str, cores: int) -> NetworkGraph:
    kind = TopologyKind.parse(kind)
    if kind in GRID_KINDS:
        n = _grid_side(kind, cores)
        builder = {TopologyKind.MESH: _mesh_links, TopologyKind.TORUS: _torus_links,
                   TopologyKind.FLATTENED_BUTTERFLY: _flattened_butterfly_links}[kind]
        return NetworkGraph(cores, list(range(cores)), sorted(builder(n)), kind=kind)
    if cores < 2:
        raise UnsupportedCoreCount(f"{kind.label} needs at least 2 cores, got {cores}")
    if kind is TopologyKind.PT2PT:
        links = [(a, b) for a in range(cores) for b in range(a + 1, cores)]
        return NetworkGraph(cores, list(range(cores)), links, kind=kind)
    if kind is TopologyKind.CROSSBAR:
        switch = cores
        return NetworkGraph(cores + 1, list(range(cores)),
                            [(c, switch) for c in range(cores)], kind=kind)
    node_count, links = _fat_tree_links(cores)
    return NetworkGraph(node_count, list(range(cores)), sorted(links), kind=kind)


def enumerate_links(graph: NetworkGraph) -> list[Link]:
    return list(graph.links)


@dataclass
class ValidationReport:
    connected: bool
    degree_histogram: dict[int, int]
    violations: list[str]

    @property
    def ok(self) -> bool:
        return not self.violations

    def __str__(self) -> str:
        degs = ", ".join(f"{d}:{c}" for d, c in sorted(self.degree_histogram.items()))
        status = "valid" if self.ok else "INVALID: " + "; ".join(self.violations)
        return f"connected={self.connected} degrees={{{degs}}} {status}"


def validate(graph: NetworkGraph) -> ValidationReport:
    violations = []
    n = graph.node_count
    seen_links = Counter()
    degree = [0] * n
    for a, b in graph.links:
        if a == b:
            violations.append(f"self-loop at {a}")
            continue
        if not (0 <= a < n and 0 <= b < n):
            violations.append(f"link ({a},{b}) out of range")
            continue
        seen_links[(a, b)] += 1
        degree[a] += 1
        degree[b] += 1
    for link, count in seen_links.items():
        if count > 1:
            violations.append(f"duplicate link {link}")
    if list(graph.links) != sorted(graph.links):
        violations.append("links not in canonical order")
    for link, w in zip(graph.links, graph.link_weights):
        if not (w > 0) or not math.isfinite(w):
            violations.append(f"nonpositive weight on {link}")
    if len(set(graph.core_nodes)) != len(graph.core_nodes) or any(
            not 0 <= c < n for c in graph.core_nodes):
        violations.append("bad core node list")

    connected = n > 0
    if n:
        nbrs = graph.neighbors()
        seen = {0}
        todo = deque([0])
        while todo:
            u = todo.popleft()
            for v in nbrs[u]:
                if v not in seen:
                    seen.add(v)
                    todo.append(v)
        connected = len(seen) == n
    if not connected:
        violations.append("disconnected")
    return ValidationReport(connected, dict(Counter(degree)), violations)
