"""Table-based routing: weighted up*/down* shortest paths and XY for meshes.

Weighted routing is deadlock free with one VC per message class because every
link is oriented by a BFS spanning tree rooted at node 0 (the "up" end is the
endpoint with the smaller ``(bfs level, node id)``) and a packet may never take
an up link after it has taken a down link.  A packet therefore carries one bit
of routing state, its *phase*: 0 while it may still climb, 1 once it has
descended.  Tables are indexed by ``[phase][node][dst]``.
"""

from __future__ import annotations

import heapq
from collections import deque
from dataclasses import dataclass
from typing import Sequence

from ccnoc.topology import NetworkGraph, TopologyKind

UP, DOWN = 0, 1
_TIE_RTOL = 1e-12


class Unreachable(RuntimeError):
    pass


class NotAMesh(ValueError):
    pass


def bfs_levels(graph: NetworkGraph, root: int = 0) -> list[int]:
    nbrs = graph.neighbors()
    level = [-1] * graph.node_count
    level[root] = 0
    todo = deque([root])
    while todo:
        u = todo.popleft()
        for v in nbrs[u]:
            if level[v] < 0:
                level[v] = level[u] + 1
                todo.append(v)
    return level


def link_directions(graph: NetworkGraph, root: int = 0) -> dict[tuple[int, int], int]:
    """Map every directed hop ``(u, v)`` to UP or DOWN."""
    level = bfs_levels(graph, root)
    if min(level) < 0:
        raise Unreachable("graph is disconnected")
    out = {}
    for a, b in graph.links:
        a_up = (level[a], a) < (level[b], b)
        out[(b, a)] = UP if a_up else DOWN
        out[(a, b)] = DOWN if a_up else UP
    return out


@dataclass
class RoutingTables:
    """Next hop per ``(phase, node, dst)``; ``-1`` marks "already there"."""

    next_hop: list[list[list[int]]]
    direction: dict[tuple[int, int], int]
    restricted: bool
    name: str = "weighted"

    @property
    def node_count(self) -> int:
        return len(self.next_hop[0])

    def next_phase(self, phase: int, u: int, v: int) -> int:
        if not self.restricted:
            return phase
        return DOWN if phase == DOWN or self.direction[(u, v)] == DOWN else UP

    def path(self, src: int, dst: int) -> list[int]:
        """Node sequence a packet follows from ``src`` to ``dst``."""
        nodes = [src]
        u, phase = src, UP
        limit = self.node_count
        while u != dst:
            v = self.next_hop[phase][u][dst]
            if v < 0 or len(nodes) > limit:
                raise Unreachable(f"no route {src}->{dst}")
            phase = self.next_phase(phase, u, v)
            nodes.append(v)
            u = v
        return nodes

    def hops(self, src: int, dst: int) -> int:
        return len(self.path(src, dst)) - 1


def compute_routing_tables(graph: NetworkGraph, weights: Sequence[float] | None = None,
                           root: int = 0) -> RoutingTables:
    if weights is None:
        weights = graph.link_weights
    if len(weights) != len(graph.links):
        raise ValueError("one weight per link required")
    if any(not w > 0 for w in weights):
        raise ValueError("link weights must be positive")
    n = graph.node_count
    direction = link_directions(graph, root)
    w_of = {}
    for (a, b), w in zip(graph.links, weights):
        w_of[(a, b)] = w_of[(b, a)] = float(w)
    nbrs = graph.neighbors()

    # legal moves out of state (u, phase): up links only from phase UP
    def moves(u: int, phase: int):
        for v in nbrs[u]:
            d = direction[(u, v)]
            if d == UP and phase == DOWN:
                continue
            yield v, (DOWN if d == DOWN else phase)

    # reverse adjacency over the (node, phase) product graph
    rev: dict[tuple[int, int], list[tuple[tuple[int, int], float]]] = {}
    for u in range(n):
        for ph in (UP, DOWN):
            for v, nph in moves(u, ph):
                rev.setdefault((v, nph), []).append(((u, ph), w_of[(u, v)]))

    table = [[[-1] * n for _ in range(n)] for _ in (UP, DOWN)]
    inf = float("inf")
    for dst in range(n):
        dist = {(u, ph): inf for u in range(n) for ph in (UP, DOWN)}
        heap = []
        for ph in (UP, DOWN):
            dist[(dst, ph)] = 0.0
            heapq.heappush(heap, (0.0, dst, ph))
        while heap:
            d, u, ph = heapq.heappop(heap)
            if d > dist[(u, ph)]:
                continue
            for (p, pph), w in rev.get((u, ph), ()):
                nd = d + w
                if nd < dist[(p, pph)]:
                    dist[(p, pph)] = nd
                    heapq.heappush(heap, (nd, p, pph))
        for u in range(n):
            if u == dst:
                continue
            for ph in (UP, DOWN):
                best = dist[(u, ph)]
                if best == inf:
                    if ph == UP:
                        raise Unreachable(f"no legal route {u}->{dst}")
                    continue
                for v, nph in moves(u, ph):  # neighbours ascend, so first fit is the smallest id
                    cost = w_of[(u, v)] + dist[(v, nph)]
                    if cost <= best * (1 + _TIE_RTOL) + 1e-300:
                        table[ph][u][dst] = v
                        break
    return RoutingTables(table, direction, restricted=True)


def mesh_coords(node: int, side: int) -> tuple[int, int]:
    return node % side, node // side


def xy_routing_table(graph: NetworkGraph) -> RoutingTables:
    if graph.kind is not TopologyKind.MESH:
        raise NotAMesh(f"XY routing needs a Mesh, got {graph.kind}")
    side = graph.grid_side()
    n = graph.node_count
    row = [[-1] * n for _ in range(n)]
    for u in range(n):
        ux, uy = mesh_coords(u, side)
        for dst in range(n):
            if dst == u:
                continue
            dx, dy = mesh_coords(dst, side)
            if dx != ux:
                row[u][dst] = u + (1 if dx > ux else -1)
            else:
                row[u][dst] = u + (side if dy > uy else -side)
    direction = link_directions(graph)
    return RoutingTables([row, row], direction, restricted=False, name="xy")


def route_cost(graph: NetworkGraph, path: Sequence[int]) -> float:
    return sum(graph.weight(a, b) for a, b in zip(path, path[1:]))
