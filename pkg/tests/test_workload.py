import pytest
from hypothesis import given, settings, strategies as st

from ccnoc.ccta import Analyzer
from ccnoc.coherence import CoherentSystem
from ccnoc.noc.routing import compute_routing_tables
from ccnoc.topology import build_topology
from ccnoc.workload import (AccessTrace, CyclicGraph, SharedRegion, Task, TaskGraph,
                            gen_from_taskgraph, gen_shared_hotspot, gen_uniform_random,
                            load_trace, motivating_taskgraph, random_taskgraph, save_trace,
                            sharing_groups)


def test_rate_zero_is_empty():
    assert len(gen_uniform_random(4, 500, 0.0, 0.5, 64, 1)) == 0


def test_rate_one_single_core():
    t = gen_uniform_random(1, 10, 1.0, 0.5, 64, 3)
    assert [a.cycle for a in t.accesses[0]] == list(range(10))


def test_determinism_in_seed():
    a = gen_uniform_random(4, 2000, 0.1, 0.5, 64, 7)
    b = gen_uniform_random(4, 2000, 0.1, 0.5, 64, 7)
    c = gen_uniform_random(4, 2000, 0.1, 0.5, 64, 8)
    assert a.to_text() == b.to_text() != c.to_text()


def test_uniform_statistics():
    t = gen_uniform_random(8, 5000, 0.2, 0.25, 16, 1)
    n = len(t)
    assert n == pytest.approx(8 * 5000 * 0.2, rel=0.05)
    writes = sum(a.write for accs in t.accesses for a in accs)
    assert writes / n == pytest.approx(0.25, abs=0.02)
    assert {a.address for accs in t.accesses for a in accs} == {i * 64 for i in range(16)}


def test_bad_parameters():
    with pytest.raises(ValueError):
        gen_uniform_random(2, 10, 1.5, 0.5, 8, 0)
    with pytest.raises(ValueError):
        gen_uniform_random(2, 10, 0.5, -0.1, 8, 0)
    with pytest.raises(ValueError):
        gen_shared_hotspot(4, 10, 0.5, 1, 0.5, 0)
    with pytest.raises(ValueError):
        gen_shared_hotspot(4, 10, 0.5, 5, 0.5, 0)


def test_sharing_groups():
    assert sharing_groups(16, 4) == [[0, 1, 2, 3], [4, 5, 6, 7], [8, 9, 10, 11], [12, 13, 14, 15]]
    assert sharing_groups(5, 2) == [[0, 1], [2, 3, 4]]
    assert sharing_groups(4, 4) == [[0, 1, 2, 3]]


def _core_sets(trace):
    touched = {}
    for c, accs in enumerate(trace.accesses):
        for a in accs:
            touched.setdefault(a.address, set()).add(c)
    return touched


def test_hotspot_all_contended():
    t = gen_shared_hotspot(4, 3000, 0.2, 4, 1.0, 5, hot_lines=4)
    touched = _core_sets(t)
    assert len(touched) == 4
    assert all(cs == {0, 1, 2, 3} for cs in touched.values())


def test_hotspot_private_only():
    t = gen_shared_hotspot(8, 2000, 0.1, 2, 0.0, 5)
    assert all(len(cs) == 1 for cs in _core_sets(t).values())


def test_hotspot_groups_do_not_cross():
    t = gen_shared_hotspot(16, 4000, 0.1, 4, 0.8, 2)
    for cs in _core_sets(t).values():
        assert len({c // 4 for c in cs}) == 1


def test_hotspot_produces_upgrades():
    t = gen_shared_hotspot(16, 10_000, 0.05, 2, 0.5, 1)
    g = build_topology("mesh", 16)
    an = Analyzer()
    CoherentSystem(g, compute_routing_tables(g), t.accesses, ccta=an).run()
    assert an.report().counts["WriteHitS"] >= 1


def test_round_trip(tmp_path):
    t = gen_shared_hotspot(16, 1000, 0.05, 4, 0.5, 7)
    p = tmp_path / "t.trace"
    save_trace(t, p)
    back = load_trace(p)
    assert back.accesses == t.accesses and back.params == t.params
    assert (back.cores, back.generator, back.seed) == (16, "shared_hotspot", 7)
    save_trace(back, tmp_path / "u.trace")
    assert (tmp_path / "u.trace").read_bytes() == p.read_bytes()


def test_file_format(tmp_path):
    t = gen_uniform_random(2, 50, 0.5, 0.5, 8, 1)
    lines = t.to_text().splitlines()
    assert lines[0].startswith("#cores=2 gen=uniform_random seed=1")
    keys = []
    for ln in lines[1:]:
        core, cyc, op, addr = ln.split(",")
        assert op in "RW" and addr.startswith("0x") or addr == "0"
        keys.append((int(cyc), int(core)))
    assert keys == sorted(keys)


def test_load_rejects_bad_traces():
    with pytest.raises(ValueError):
        AccessTrace.from_text("0,1,R,0x0\n")
    with pytest.raises(ValueError):
        AccessTrace.from_text("#cores=1 gen=x seed=1\n0,1,X,0x0\n")
    with pytest.raises(ValueError):
        AccessTrace.from_text("#cores=1 gen=x seed=1\n0,1,R,0x0\n0,1,R,0x40\n")
    with pytest.raises(ValueError):
        AccessTrace.from_text("#cores=1 gen=x seed=1\n0,1,R,0x41\n")


def test_cyclic_graph_rejected():
    g = TaskGraph([Task(0, 10, 0), Task(1, 10, 1)], [(0, 1), (1, 0)])
    with pytest.raises(CyclicGraph):
        gen_from_taskgraph(g)


def test_region_needs_single_producer():
    r1 = SharedRegion(0x1000, 2, 0, [1])
    r2 = SharedRegion(0x1040, 2, 1, [0])
    g = TaskGraph([Task(0, 10, 0), Task(1, 10, 1)], [], [r1, r2])
    with pytest.raises(ValueError):
        g.validate()


def _check_producer_before_consumer(graph, trace):
    for r in graph.regions:
        addrs = set(r.addresses())
        prod_core = graph.tasks[r.producer].core
        last_write = max(a.cycle for a in trace.accesses[prod_core]
                         if a.write and a.address in addrs)
        for c in r.consumers:
            core = graph.tasks[c].core
            first_read = min(a.cycle for a in trace.accesses[core]
                             if not a.write and a.address in addrs)
            assert first_read > last_write


def test_motivating_graph_ordering():
    g = motivating_taskgraph()
    t = gen_from_taskgraph(g)
    _check_producer_before_consumer(g, t)
    t.validate()


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 10), st.integers(1, 6), st.integers(0, 10**6))
def test_random_graph_ordering(n, cores, seed):
    g = random_taskgraph(n, cores, seed)
    t = gen_from_taskgraph(g)
    t.validate()
    _check_producer_before_consumer(g, t)


def test_taskgraph_consumers_use_cache_to_cache():
    g = motivating_taskgraph(compute_cycles=100, lines=8)
    t = gen_from_taskgraph(g)
    topo = build_topology("mesh", 4)
    s = CoherentSystem(topo, compute_routing_tables(topo), t.accesses)
    s.run()
    assert s.message_histogram.get("DataOwnerToReq", 0) >= 8
