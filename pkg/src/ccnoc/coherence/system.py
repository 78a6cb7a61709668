"""Cores, L1s and home directories wired together over one Network.

Each cycle runs in a fixed order: the network steps, due memory fetches
complete, ejected messages are handed to their controllers in
``(destination node, packet id)`` order, and finally cores issue accesses in
core-id order.  Cores are in-order with one outstanding miss.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from typing import Callable, Sequence

from ccnoc.coherence.controllers import (DirectoryController, DirState, L1Config, L1Controller,
                                         L1State, Line)
from ccnoc.coherence.messages import (MEMORY_LATENCY, CoherenceMessage, MsgKind,
                                      ProtocolViolation, home_of, line_address)
from ccnoc.noc.network import Network, Packet
from ccnoc.noc.routing import RoutingTables
from ccnoc.topology import NetworkGraph


class TxnType(str, enum.Enum):
    WRITE_HIT_S = "WriteHitS"
    READ_MISS = "ReadMiss"
    WRITE_MISS = "WriteMiss"


class Outcome(str, enum.Enum):
    HIT = "Hit"
    MISS_ISSUED = "MissIssued"
    BLOCKED = "Blocked"


class CoherenceError(AssertionError):
    """The SWMR or data-value invariant failed."""


@dataclass(frozen=True)
class Access:
    cycle: int
    write: bool
    address: int


class _Core:
    __slots__ = ("accesses", "ptr", "busy", "next_free", "pending", "wait_wb", "write",
                 "txn_type")

    def __init__(self, accesses: Sequence[Access]):
        self.accesses = list(accesses)
        self.ptr = 0
        self.busy = False
        self.next_free = 0
        self.pending: int | None = None  # address of the outstanding access
        self.wait_wb: int | None = None
        self.write = False
        self.txn_type: TxnType | None = None

    @property
    def done(self) -> bool:
        return not self.busy and self.ptr >= len(self.accesses)


class CoherentSystem:
    def __init__(self, graph: NetworkGraph, tables: RoutingTables,
                 accesses: Sequence[Sequence[Access]] | None = None,
                 ccta=None, check: bool = False, vc_depth: int = 4,
                 l1_config: L1Config | None = None, memory_latency: int = MEMORY_LATENCY,
                 trace_log: Callable[[str], None] | None = None,
                 check_network: bool = False, record_paths: bool = False):
        self.graph = graph
        self.core_nodes = list(graph.core_nodes)
        self.node_core = {n: i for i, n in enumerate(self.core_nodes)}
        self.ccta = ccta
        self.check = check
        self.trace_log = trace_log
        self.vc_depth = vc_depth
        self._net_opts = dict(check_invariants=check_network, record_paths=record_paths)
        self.network = self._make_network(graph, tables, 0)
        self.networks = [self.network]

        self.l1s = [L1Controller(i, n, self, l1_config) for i, n in enumerate(self.core_nodes)]
        self.dirs = {n: DirectoryController(n, self, memory_latency) for n in self.core_nodes}
        ncores = len(self.core_nodes)
        accesses = accesses if accesses is not None else [[] for _ in range(ncores)]
        if len(accesses) != ncores:
            raise ValueError(f"{len(accesses)} access streams for {ncores} cores")
        self.cores = [_Core(a) for a in accesses]

        self._txn_ids = itertools.count()
        self._inbox: list[Packet] = []
        self.messages_sent = 0
        self.message_histogram: dict[str, int] = {}
        self.issue_enabled = True
        self.completed_accesses = 0

        # invariant bookkeeping (cheap, always on; checks only when self.check)
        self._writers: dict[int, int] = {}
        self._readers: dict[int, int] = {}
        self._dirty: set[int] = set()
        self.oracle: dict[int, int] = {}
        self._versions = itertools.count(1)
        self._expected: dict[int, int] = {}
        self.reads_checked = 0
        self.txn_open: dict[int, tuple[int, int, TxnType]] = {}

    # ------------------------------------------------------------ plumbing

    def _make_network(self, graph, tables, start_cycle):
        net = Network(graph, tables, vc_depth=self.vc_depth, on_eject=self._inbox_append,
                      **self._net_opts)
        net.cycle = start_cycle
        net._last_move = start_cycle
        return net

    def _inbox_append(self, pkt: Packet, now: int):
        self._inbox.append(pkt)

    @property
    def cycle(self) -> int:
        return self.network.cycle

    def home_of(self, addr: int) -> int:
        return home_of(addr, self.core_nodes)

    def send(self, kind: MsgKind, addr: int, src: int, dst: int, requester: int,
             txn: int | None, ack_count: int = 0, value: int = 0, exclusive: bool = False,
             upgrade: bool = False):
        msg = CoherenceMessage(kind, addr, src, dst, requester, txn, ack_count, value,
                               exclusive, upgrade)
        self.network.inject_packet(Packet(src, dst, kind.vnet, kind.flits, payload=msg))
        self.messages_sent += 1
        self.message_histogram[kind.value] = self.message_histogram.get(kind.value, 0) + 1
        if kind is MsgKind.Data or kind is MsgKind.DataOwnerToReq:
            # ordering point of a read: remember what it must observe
            if txn is not None:
                self._expected[txn] = self.oracle.get(addr, 0)
        if self.ccta is not None and txn is not None:
            self.ccta.on_coherence_msg(txn, msg, "sent", self.network.cycle)
        return msg

    def trace_event(self, now, node, unit, before, msg, after):
        if self.trace_log is not None:
            self.trace_log(f"{now},{node},{unit},{getattr(before, 'value', before)},"
                           f"{msg.kind.value},{getattr(after, 'value', after)},{msg.txn}")

    def on_l1_state(self, core: int, addr: int, old: L1State, new: L1State):
        if old is new:
            return
        for st, d in ((old, -1), (new, 1)):
            if st is L1State.M or st is L1State.E:
                self._writers[addr] = self._writers.get(addr, 0) + d
            elif st is L1State.S:
                self._readers[addr] = self._readers.get(addr, 0) + d
        self._dirty.add(addr)

    # ---------------------------------------------------------- CPU side

    def l1_cpu_request(self, core: int, write: bool, address: int) -> tuple[Outcome, int | None]:
        addr = line_address(address)
        l1 = self.l1s[core]
        if addr in l1.writebacks:
            return Outcome.BLOCKED, None
        ln = l1.line(addr)
        now = self.network.cycle
        if ln is not None:
            st = ln.state
            if not st.stable:
                return Outcome.BLOCKED, None
            if not write:
                l1.touch(addr)
                self._perform(core, ln, False, now, None)
                return Outcome.HIT, None
            if st is L1State.M or st is L1State.E:
                if st is L1State.E:
                    l1._set_state(ln, L1State.M)
                l1.touch(addr)
                self._perform(core, ln, True, now, None)
                return Outcome.HIT, None
            kind = TxnType.WRITE_HIT_S
        else:
            kind = TxnType.WRITE_MISS if write else TxnType.READ_MISS

        txn = next(self._txn_ids)
        c = self.cores[core]
        c.busy = True
        c.pending = addr
        c.write = write
        c.txn_type = kind
        self.txn_open[txn] = (core, addr, kind)
        if self.ccta is not None:
            self.ccta.on_transaction_start(core, kind.value, addr, now, txn_id=txn)
        if kind is not TxnType.WRITE_HIT_S:
            victim = l1.needs_victim(addr)
            if victim is not None and l1.evict(victim, txn):
                c.wait_wb = victim.addr
                return Outcome.MISS_ISSUED, txn
        l1.issue(addr, write, kind is TxnType.WRITE_HIT_S, txn)
        return Outcome.MISS_ISSUED, txn

    def evict(self, core: int, address: int, txn: int | None = None) -> int:
        """Evict a stable line from ``core``'s L1; returns messages the core sends now."""
        ln = self.l1s[core].line(line_address(address))
        if ln is None:
            return 0
        return self.l1s[core].evict(ln, txn)

    def on_writeback_done(self, core: int, addr: int, now: int):
        c = self.cores[core]
        if c.wait_wb == addr:
            c.wait_wb = None
            txn = next(t for t, v in self.txn_open.items() if v[0] == core)
            self.l1s[core].issue(c.pending, c.write, False, txn)

    def on_access_complete(self, core: int, ln: Line, now: int, txn: int | None):
        c = self.cores[core]
        expected = self._expected.pop(txn, None) if txn is not None else None
        self._perform(core, ln, c.write, now, expected)
        c.busy = False
        c.pending = None
        c.next_free = now + 1
        self.txn_open.pop(txn, None)
        if self.ccta is not None and txn is not None:
            self.ccta.on_transaction_end(txn, now)
        if self.l1s[core].line(ln.addr) is not None:
            self.l1s[core].touch(ln.addr)

    def _perform(self, core: int, ln: Line, write: bool, now: int, expected: int | None):
        self.completed_accesses += 1
        if write:
            v = next(self._versions)
            ln.value = v
            self.oracle[ln.addr] = v
            return
        if expected is None:
            expected = self.oracle.get(ln.addr, 0)
        if self.check and ln.value != expected:
            raise CoherenceError(
                f"cycle {now}: core {core} read {ln.addr:#x} = {ln.value}, expected {expected}")
        self.reads_checked += 1

    # ------------------------------------------------------------ stepping

    def _issue_phase(self, now: int):
        if not self.issue_enabled:
            return
        for i, c in enumerate(self.cores):
            if c.busy or c.ptr >= len(c.accesses) or c.next_free > now:
                continue
            acc = c.accesses[c.ptr]
            if acc.cycle > now:
                continue
            outcome, _ = self.l1_cpu_request(i, acc.write, acc.address)
            if outcome is Outcome.BLOCKED:
                continue
            c.ptr += 1
            if outcome is Outcome.HIT:
                c.next_free = now + 1

    def start(self):
        """Issue phase of cycle 0 (before the first network step)."""
        if self.network.cycle == 0:
            self._issue_phase(0)

    def tick(self):
        net = self.network
        net.step()
        now = net.cycle
        for d in self.dirs.values():
            if d._fetches and d._fetches[0][0] <= now:
                d.tick(now)
        if self._inbox:
            inbox = sorted(self._inbox, key=lambda p: (p.dst, p.id))
            self._inbox.clear()
            for pkt in inbox:
                self._deliver(pkt.payload, now)
        self._issue_phase(now)
        if self.check and self._dirty:
            self.check_swmr()
        self._dirty.clear()

    def _deliver(self, msg: CoherenceMessage, now: int):
        if msg.kind.to_directory:
            self.dirs[msg.dst].receive(msg, now)
            return
        core = self.node_core[msg.dst]
        if self.ccta is not None and msg.txn is not None and msg.dst == msg.requester:
            self.ccta.on_coherence_msg(msg.txn, msg, "received_at_L1_inport", now)
        self.l1s[core].receive(msg, now)

    def check_swmr(self):
        for addr in self._dirty:
            w = self._writers.get(addr, 0)
            r = self._readers.get(addr, 0)
            if w > 1 or (w == 1 and r > 0) or w < 0 or r < 0:
                raise CoherenceError(
                    f"SWMR violated at cycle {self.cycle} for {addr:#x}: {w} writers, {r} readers")

    def busy(self) -> bool:
        return (not self.network.idle() or bool(self.txn_open)
                or any(d._fetches or any(e.busy for e in d.entries.values())
                       for d in self.dirs.values()))

    def finished(self) -> bool:
        return all(c.done for c in self.cores) and not self.busy()

    def run(self, max_cycles: int | None = None, stop_at: int | None = None) -> int:
        """Run until every trace is consumed and the system is quiet (or a limit hits)."""
        self.start()
        start = self.cycle
        while not self.finished():
            if max_cycles is not None and self.cycle - start >= max_cycles:
                break
            if stop_at is not None and self.cycle >= stop_at:
                break
            self.tick()
        return self.cycle

    def quiesce(self, max_cycles: int = 1_000_000) -> int:
        """Stop issuing and step until no message, fetch or transaction is outstanding."""
        self.issue_enabled = False
        start = self.cycle
        try:
            while self.busy():
                if self.cycle - start >= max_cycles:
                    raise ProtocolViolation("system failed to quiesce")
                self.tick()
        finally:
            self.issue_enabled = True
        return self.cycle - start

    def reconfigure(self, graph: NetworkGraph, tables: RoutingTables):
        """Swap in a new network; caches and directories are kept."""
        if self.busy():
            self.quiesce()
        if list(graph.core_nodes) != self.core_nodes:
            raise ValueError("new topology must host the same cores")
        self.graph = graph
        self.network = self._make_network(graph, tables, self.network.cycle)
        self.networks.append(self.network)

    # ------------------------------------------------------------- queries

    def l1_state(self, core: int, address: int) -> L1State:
        return self.l1s[core].state_of(line_address(address))

    def directory_agreement(self) -> list[str]:
        """Directory vs. L1 disagreements (meaningful once quiesced)."""
        problems = []
        for node, d in self.dirs.items():
            for addr, e in d.entries.items():
                holders_s = {self.core_nodes[i] for i, l1 in enumerate(self.l1s)
                             if l1.state_of(addr) is L1State.S}
                owners = {self.core_nodes[i] for i, l1 in enumerate(self.l1s)
                          if l1.state_of(addr) in (L1State.M, L1State.E)}
                if e.state is DirState.OWNED:
                    if owners != {e.owner}:
                        problems.append(f"{addr:#x}: dir owner {e.owner}, L1 owners {owners}")
                elif owners:
                    problems.append(f"{addr:#x}: dir {e.state.value} but owners {owners}")
                if not holders_s <= e.sharers and e.state is not DirState.OWNED:
                    problems.append(f"{addr:#x}: sharers {holders_s - e.sharers} untracked")
                if e.state is DirState.OWNED and holders_s:
                    problems.append(f"{addr:#x}: S copies {holders_s} while owned")
        return problems
