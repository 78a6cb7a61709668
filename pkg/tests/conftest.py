import heapq
import itertools
import random

import pytest

from ccnoc.ccta import Analyzer
from ccnoc.coherence import Access, CoherentSystem
from ccnoc.noc.routing import DOWN, UP, compute_routing_tables, link_directions
from ccnoc.topology import build_topology


def legal(direction, path):
    """True if the node sequence never climbs after descending."""
    phase = UP
    for u, v in zip(path, path[1:]):
        d = direction[(u, v)]
        if d == UP and phase == DOWN:
            return False
        if d == DOWN:
            phase = DOWN
    return True


def brute_force_route(graph, src, dst):
    """Lexicographically smallest min-cost legal simple path (exhaustive search)."""
    direction = link_directions(graph)
    nbrs = graph.neighbors()
    best = None

    def walk(path, cost, seen):
        nonlocal best
        u = path[-1]
        if u == dst:
            key = (cost, path)
            if best is None or key < best:
                best = (cost, list(path))
            return
        for v in nbrs[u]:
            if v not in seen and legal(direction, path + [v]):
                seen.add(v)
                walk(path + [v], cost + graph.weight(u, v), seen)
                seen.discard(v)

    walk([src], 0.0, {src})
    return best


def lexi_dijkstra(graph, src, dst):
    """Forward Dijkstra over (node, phase) states keyed by (cost, node sequence)."""
    direction = link_directions(graph)
    nbrs = graph.neighbors()
    heap = [(0.0, (src,), UP)]
    done = set()
    while heap:
        cost, path, phase = heapq.heappop(heap)
        u = path[-1]
        if u == dst:
            return cost, list(path)
        if (u, phase) in done:
            continue
        done.add((u, phase))
        for v in nbrs[u]:
            d = direction[(u, v)]
            if d == UP and phase == DOWN:
                continue
            nph = DOWN if d == DOWN else phase
            if (v, nph) not in done:
                heapq.heappush(heap, (cost + graph.weight(u, v), path + (v,), nph))
    return None


def make_system(kind="mesh", cores=16, accesses=None, ccta=True, check=True, **kw):
    g = build_topology(kind, cores)
    a = Analyzer() if ccta else None
    s = CoherentSystem(g, compute_routing_tables(g), accesses, ccta=a, check=check, **kw)
    return s, a


def do(system, core, write, addr):
    """Issue one access now and run until the system is quiet; returns (outcome, txn)."""
    system.start()
    out, txn = system.l1_cpu_request(core, write, addr)
    while system.busy():
        system.tick()
    return out, txn


def random_ops(seed, n_ops, cores=16, lines=64, write_p=0.3, line_addr=None):
    rng = random.Random(seed)
    line_addr = line_addr or (lambda i: i * 64)
    addrs = [line_addr(i) for i in range(lines)]
    acc = [[] for _ in range(cores)]
    for i in range(n_ops):
        c = i % cores
        acc[c].append(Access(len(acc[c]), rng.random() < write_p, rng.choice(addrs)))
    return acc


@pytest.fixture
def mesh16():
    return build_topology("mesh", 16)
