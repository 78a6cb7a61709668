"""Cycle-driven flit-level network with virtual channels and credit flow control.

Timing model, per hop: one cycle in the router (switch traversal) and one on
the link.  Injecting a flit from the network interface into the source router
takes one cycle, and a flit reaching its destination router is handed to the
ejection sink in the cycle it arrives.  A packet of ``F`` flits crossing ``h``
links on an idle network therefore has latency ``1 + 2h + (F - 1)``.

Each input port has four VCs split by message class: request 1, forward 1,
response 2.  A downstream VC stays allocated to a packet until the credit for
its tail flit comes back, so one VC buffer never holds two packets.
"""

from __future__ import annotations

import enum
import itertools
from array import array
from bisect import bisect_left, bisect_right
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Callable

from ccnoc.noc.routing import RoutingTables, UP
from ccnoc.topology import NetworkGraph


class DeadlockSuspected(RuntimeError):
    pass


class EmptyWindow(ValueError):
    pass


class VNet(enum.IntEnum):
    REQUEST = 0
    FORWARD = 1
    RESPONSE = 2


VCS_PER_PORT = 4
VC_CLASSES = {VNet.REQUEST: (0,), VNet.FORWARD: (1,), VNet.RESPONSE: (2, 3)}
CONTROL_FLITS = 1
DATA_FLITS = 5  # 64 B line / 16 B flit = 4 body flits + 1 head
WATCHDOG_CYCLES = 10_000


class Packet:
    __slots__ = ("id", "src", "dst", "vnet", "flit_count", "creation_cycle",
                 "injection_cycle", "ejection_cycle", "payload", "hops", "phase",
                 "sent_flits", "local_vc", "path")

    def __init__(self, src: int, dst: int, vnet: VNet, flit_count: int = CONTROL_FLITS,
                 payload: Any = None):
        if flit_count not in (CONTROL_FLITS, DATA_FLITS):
            raise ValueError(f"flit_count must be 1 or 5, got {flit_count}")
        self.id = -1
        self.src = src
        self.dst = dst
        self.vnet = VNet(vnet)
        self.flit_count = flit_count
        self.creation_cycle = -1
        self.injection_cycle = -1
        self.ejection_cycle = -1
        self.payload = payload
        self.hops = 0
        self.phase = UP
        self.sent_flits = 0
        self.local_vc = -1
        self.path: list[int] | None = None

    @property
    def latency(self) -> int:
        return self.ejection_cycle - self.creation_cycle

    def zero_load_latency(self) -> int:
        return zero_load_latency(self.hops, self.flit_count)

    def __repr__(self):
        return (f"Packet(id={self.id}, {self.src}->{self.dst}, {self.vnet.name}, "
                f"flits={self.flit_count}, created={self.creation_cycle})")


def zero_load_latency(hops: int, flit_count: int) -> int:
    return 1 + 2 * hops + (flit_count - 1)


@dataclass
class NoCMetrics:
    average_packet_latency: float = 0.0
    average_packet_delay: float = 0.0
    average_link_utilization: float = 0.0
    injected_packets: int = 0
    ejected_packets: int = 0
    link_flits: dict[tuple[int, int], int] = field(default_factory=dict)
    flit_hops: int = 0
    router_traversals: int = 0
    window: tuple[int, int] = (0, 0)
    empty: bool = False

    @property
    def L_t(self) -> float:
        return self.average_packet_latency

    @property
    def D_t(self) -> float:
        return self.average_packet_delay


class Network:
    """One NoC instance: routers, links, NIs.  Single owner, stepped by ``step()``."""

    def __init__(self, graph: NetworkGraph, tables: RoutingTables, vc_depth: int = 4,
                 check_invariants: bool = False, record_paths: bool = False,
                 event_log: Callable[[str], None] | None = None,
                 on_eject: Callable[[Packet, int], None] | None = None):
        self.graph = graph
        self.tables = tables
        self.depth = vc_depth
        self.check_invariants = check_invariants
        self.record_paths = record_paths
        self.event_log = event_log
        self.on_eject = on_eject
        self.cycle = 0

        n = graph.node_count
        nbrs = graph.neighbors()
        # port 0 is the local injection port; port i >= 1 faces nbrs[r][i - 1]
        self.port_node = [[-1] + list(nbrs[r]) for r in range(n)]
        self.port_of = [{v: i + 1 for i, v in enumerate(nbrs[r])} for r in range(n)]
        self.buf = [[[deque() for _ in range(VCS_PER_PORT)] for _ in self.port_node[r]]
                    for r in range(n)]
        self.route = [[[-1] * VCS_PER_PORT for _ in self.port_node[r]] for r in range(n)]
        self.outvc = [[[-1] * VCS_PER_PORT for _ in self.port_node[r]] for r in range(n)]
        self.credits = [[[vc_depth] * VCS_PER_PORT for _ in self.port_node[r]] for r in range(n)]
        self.owner = [[[-1] * VCS_PER_PORT for _ in self.port_node[r]] for r in range(n)]
        self.in_rr = [[0] * len(self.port_node[r]) for r in range(n)]
        self.out_rr = [[0] * len(self.port_node[r]) for r in range(n)]
        self.occupancy = [0] * n

        self.inj_queues = [[deque() for _ in VNet] for _ in range(n)]
        self.inj_rr = [0] * n
        self._injecting: set[int] = set()
        self._active: set[int] = set()
        self._links_now: list = []
        self._credits_now: list = []

        self._ids = itertools.count()
        self.live: dict[int, Packet] = {}
        self.injected_count = 0
        self.ejected_count = 0
        self._last_move = 0

        self.directed_links = [(a, b) for a, b in graph.links] + [(b, a) for a, b in graph.links]
        self._dlink_index = {l: i for i, l in enumerate(self.directed_links)}
        self._link_cycles = [array("l") for _ in self.directed_links]
        self._eject_cycles = array("l")
        self._latencies = array("l")
        self._zero_loads = array("l")
        self._eject_router_flits = array("l")
        self._inject_cycles = array("l")
        self.router_traversals = 0

    # ------------------------------------------------------------------ API

    def inject_packet(self, packet: Packet) -> bool:
        """Queue ``packet`` at its source NI.  Injection queues are unbounded."""
        if not (0 <= packet.src < self.graph.node_count and 0 <= packet.dst < self.graph.node_count):
            raise ValueError(f"bad endpoints for {packet!r}")
        packet.id = next(self._ids)
        packet.creation_cycle = self.cycle
        if self.record_paths:
            packet.path = [packet.src]
        self.inj_queues[packet.src][packet.vnet].append(packet)
        self._injecting.add(packet.src)
        self.live[packet.id] = packet
        self.injected_count += 1
        self._inject_cycles.append(self.cycle)
        self._log("create", packet.id, packet.src)
        return True

    @property
    def in_flight(self) -> int:
        return len(self.live)

    def idle(self) -> bool:
        return not self.live

    def step(self) -> int:
        """Advance one cycle; returns the number of flit movements."""
        now = self.cycle + 1
        self.cycle = now
        moved = 0

        # credits sent last cycle become usable now
        credits = self._credits_now
        self._credits_now = []
        for u, port, vc, tail in credits:
            self.credits[u][port][vc] += 1
            if tail:
                self.owner[u][port][vc] = -1

        # link traversal
        arrivals = self._links_now
        self._links_now = []
        for v, port, vc, pkt, seq in arrivals:
            moved += 1
            u = self.port_node[v][port]
            self._link_cycles[self._dlink_index[(u, v)]].append(now)
            if seq == 0:
                pkt.hops += 1
                pkt.phase = self.tables.next_phase(pkt.phase, u, v)
                if pkt.path is not None:
                    pkt.path.append(v)
            if pkt.dst == v:
                self._credits_now.append((u, self.port_of[u][v], vc, seq == pkt.flit_count - 1))
                if seq == pkt.flit_count - 1:
                    self._eject(pkt, now)
                continue
            q = self.buf[v][port][vc]
            q.append((pkt, seq, now))
            self.occupancy[v] += 1
            self._active.add(v)
            if seq == 0:
                self._route_head(v, port, vc, pkt)

        # switch allocation + traversal
        if self._active:
            for r in sorted(self._active):
                moved += self._switch(r, now)
            self._active = {r for r in self._active if self.occupancy[r]}

        # injection
        if self._injecting:
            for r in sorted(self._injecting):
                moved += self._inject(r, now)
            self._injecting = {r for r in self._injecting if any(self.inj_queues[r])}

        if moved:
            self._last_move = now
        elif self.live and now - self._last_move >= WATCHDOG_CYCLES:
            raise DeadlockSuspected(
                f"no flit moved for {WATCHDOG_CYCLES} cycles with {len(self.live)} packets live")
        if self.check_invariants:
            self.assert_invariants()
        return moved

    def drain(self, max_cycles: int | None = None) -> int:
        """Step until empty; returns the number of packets still live (0 on success)."""
        start = self.cycle
        while self.live:
            if max_cycles is not None and self.cycle - start >= max_cycles:
                break
            self.step()
        return len(self.live)

    # -------------------------------------------------------------- internals

    def _log(self, kind: str, pid: int, node: int):
        if self.event_log is not None:
            self.event_log(f"{self.cycle} {kind} {pid} {node}")

    def _route_head(self, r: int, port: int, vc: int, pkt: Packet):
        nxt = self.tables.next_hop[pkt.phase][r][pkt.dst]
        self.route[r][port][vc] = self.port_of[r][nxt]
        self.outvc[r][port][vc] = -1

    def _eject(self, pkt: Packet, now: int):
        pkt.ejection_cycle = now
        del self.live[pkt.id]
        self.ejected_count += 1
        self._eject_cycles.append(now)
        self._latencies.append(now - pkt.creation_cycle)
        self._zero_loads.append(zero_load_latency(pkt.hops, pkt.flit_count))
        self._eject_router_flits.append(pkt.flit_count if pkt.hops else 0)
        self._log("eject", pkt.id, pkt.dst)
        if self.on_eject is not None:
            self.on_eject(pkt, now)

    def _switch(self, r: int, now: int) -> int:
        bufs = self.buf[r]
        routes = self.route[r]
        outvcs = self.outvc[r]
        credits = self.credits[r]
        owner = self.owner[r]
        nports = len(bufs)

        # input arbitration: at most one VC per input port bids
        bids: dict[int, list[tuple[int, int]]] = {}
        for p in range(nports):
            pb = bufs[p]
            start = self.in_rr[r][p]
            for k in range(VCS_PER_PORT):
                vc = (start + k) % VCS_PER_PORT
                q = pb[vc]
                if not q:
                    continue
                pkt, seq, ready = q[0]
                if ready >= now:
                    continue
                op = routes[p][vc]
                ovc = outvcs[p][vc]
                if ovc >= 0:
                    if credits[op][ovc] <= 0:
                        continue
                else:
                    if not any(owner[op][c] < 0 and credits[op][c] > 0
                               for c in VC_CLASSES[pkt.vnet]):
                        continue
                bids.setdefault(op, []).append((p, vc))
                break

        moved = 0
        for op in sorted(bids):
            cands = bids[op]
            start = self.out_rr[r][op]
            p, vc = min(cands, key=lambda c: (c[0] - start) % nports)
            self.out_rr[r][op] = (p + 1) % nports
            self.in_rr[r][p] = (vc + 1) % VCS_PER_PORT
            q = bufs[p][vc]
            pkt, seq, _ = q.popleft()
            self.occupancy[r] -= 1
            ovc = outvcs[p][vc]
            if ovc < 0:
                ovc = next(c for c in VC_CLASSES[pkt.vnet]
                           if owner[op][c] < 0 and credits[op][c] > 0)
                owner[op][ovc] = pkt.id
                outvcs[p][vc] = ovc
            credits[op][ovc] -= 1
            tail = seq == pkt.flit_count - 1
            if p == 0:
                if tail:
                    owner[0][vc] = -1
            else:
                u = self.port_node[r][p]
                self._credits_now.append((u, self.port_of[u][r], vc, tail))
            if tail:
                routes[p][vc] = -1
                outvcs[p][vc] = -1
            v = self.port_node[r][op]
            self._links_now.append((v, self.port_of[v][r], ovc, pkt, seq))
            self.router_traversals += 1
            moved += 1
        return moved

    def _inject(self, r: int, now: int) -> int:
        queues = self.inj_queues[r]
        start = self.inj_rr[r]
        nv = len(queues)
        for k in range(nv):
            vn = (start + k) % nv
            q = queues[vn]
            if not q:
                continue
            pkt = q[0]
            seq = pkt.sent_flits
            if pkt.src == pkt.dst:
                # local delivery still uses the NI port, one flit per cycle
                if seq == 0:
                    pkt.injection_cycle = now
                pkt.sent_flits += 1
                if pkt.sent_flits == pkt.flit_count:
                    q.popleft()
                    self._eject(pkt, now)
                self.inj_rr[r] = (vn + 1) % nv
                return 1
            if seq == 0:
                vc = next((c for c in VC_CLASSES[pkt.vnet] if self.owner[r][0][c] < 0), -1)
                if vc < 0:
                    continue
                self.owner[r][0][vc] = pkt.id
                pkt.local_vc = vc
                pkt.injection_cycle = now
            else:
                vc = pkt.local_vc
                if len(self.buf[r][0][vc]) >= self.depth:
                    continue
            self.buf[r][0][vc].append((pkt, seq, now))
            self.occupancy[r] += 1
            self._active.add(r)
            if seq == 0:
                self._route_head(r, 0, vc, pkt)
                self._log("inject", pkt.id, r)
            pkt.sent_flits += 1
            if pkt.sent_flits == pkt.flit_count:
                q.popleft()
            self.inj_rr[r] = (vn + 1) % nv
            return 1
        return 0

    # ---------------------------------------------------------------- checks

    def assert_invariants(self):
        """Packet and credit conservation; raises AssertionError on violation."""
        assert self.injected_count == self.ejected_count + len(self.live), "packet conservation"
        on_link: dict[tuple[int, int, int], int] = {}
        for v, port, vc, pkt, seq in self._links_now:
            key = (v, port, vc)
            on_link[key] = on_link.get(key, 0) + 1
        returning: dict[tuple[int, int, int], int] = {}
        for u, port, vc, _ in self._credits_now:
            key = (u, port, vc)
            returning[key] = returning.get(key, 0) + 1
        for u in range(self.graph.node_count):
            for op in range(1, len(self.port_node[u])):
                v = self.port_node[u][op]
                ip = self.port_of[v][u]
                for vc in range(VCS_PER_PORT):
                    c = self.credits[u][op][vc]
                    occ = len(self.buf[v][ip][vc])
                    assert 0 <= occ <= self.depth, f"VC overflow at {v}:{ip}:{vc}"
                    total = c + on_link.get((v, ip, vc), 0) + occ + returning.get((u, op, vc), 0)
                    assert total == self.depth, (
                        f"credit conservation broken on {u}->{v} vc{vc}: {total} != {self.depth}")
        for r in range(self.graph.node_count):
            for vc in range(VCS_PER_PORT):
                assert len(self.buf[r][0][vc]) <= self.depth

    # --------------------------------------------------------------- metrics

    def collect_noc_metrics(self, window: tuple[int, int] | None = None,
                            strict: bool = False) -> NoCMetrics:
        """Metrics over events stamped in ``(start, end]``; defaults to the whole run."""
        start, end = window if window is not None else (0, self.cycle)
        if end < start or end > self.cycle:
            raise ValueError(f"window {window} outside simulated range (0, {self.cycle}]")
        lo = bisect_right(self._eject_cycles, start)
        hi = bisect_right(self._eject_cycles, end)
        n = hi - lo
        m = NoCMetrics(window=(start, end))
        m.ejected_packets = n
        # a packet created at cycle c enters the network during cycle c + 1
        m.injected_packets = (bisect_left(self._inject_cycles, end)
                              - bisect_left(self._inject_cycles, start))
        total = 0
        for (a, b), cycles in zip(self.directed_links, self._link_cycles):
            k = bisect_right(cycles, end) - bisect_right(cycles, start)
            if k:
                m.link_flits[(a, b)] = k
                total += k
        m.flit_hops = total
        span = end - start
        if self.directed_links and span > 0:
            m.average_link_utilization = total / (len(self.directed_links) * span)
        if n == 0:
            m.router_traversals = total
            m.empty = True
            if strict:
                raise EmptyWindow(f"no packet ejected in {window}")
            return m
        lat = self._latencies[lo:hi]
        zl = self._zero_loads[lo:hi]
        m.average_packet_latency = sum(lat) / n
        m.average_packet_delay = sum(l - z for l, z in zip(lat, zl)) / n
        # a packet crossing h links passes through h + 1 routers
        m.router_traversals = total + sum(self._eject_router_flits[lo:hi])
        return m

    def link_counts_csv(self) -> str:
        lines = ["link_a,link_b,flits"]
        for (a, b), cycles in zip(self.directed_links, self._link_cycles):
            lines.append(f"{a},{b},{len(cycles)}")
        return "\n".join(lines) + "\n"
