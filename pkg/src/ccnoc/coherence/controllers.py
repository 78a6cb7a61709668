"""Private L1 and home directory controllers for directory-based MESI.

The L1 keeps the textbook transient states (IS_D, IM_AD, IM_A, SM_AD, SM_A,
MI_A, EI_A) plus IS_D_I, the "data arriving after an invalidation" state that
stale shared copies need.  Forwarded requests that reach a line which is still
becoming the owner are parked and replayed once the line is stable.

Controllers never touch the network directly: they call ``send`` on their
host, which stamps transaction bookkeeping and injects the packet.
"""

from __future__ import annotations

import enum
import heapq
from collections import OrderedDict, deque
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

from ccnoc.coherence.messages import (LINE_BYTES, MEMORY_LATENCY, CoherenceMessage, MsgKind,
                                      ProtocolViolation)

if TYPE_CHECKING:
    from ccnoc.coherence.system import CoherentSystem


class L1State(str, enum.Enum):
    M = "M"
    E = "E"
    S = "S"
    I = "I"
    IS_D = "IS_D"
    IS_D_I = "IS_D_I"
    IM_AD = "IM_AD"
    IM_A = "IM_A"
    SM_AD = "SM_AD"
    SM_A = "SM_A"
    MI_A = "MI_A"
    EI_A = "EI_A"

    @property
    def stable(self) -> bool:
        return self in _STABLE


_STABLE = frozenset({L1State.M, L1State.E, L1State.S, L1State.I})
_BECOMING_OWNER = frozenset({L1State.IS_D, L1State.IM_AD, L1State.IM_A,
                             L1State.SM_AD, L1State.SM_A})


@dataclass
class L1Config:
    size: int = 64 * 1024
    line: int = LINE_BYTES
    assoc: int = 4

    @property
    def sets(self) -> int:
        return self.size // (self.line * self.assoc)


class Line:
    __slots__ = ("addr", "state", "value", "pending", "has_data", "acks_known", "txn",
                 "expected")

    def __init__(self, addr: int, state: L1State):
        self.addr = addr
        self.state = state
        self.value = 0
        self.pending = 0
        self.has_data = False
        self.acks_known = False
        self.txn: int | None = None
        self.expected: int | None = None

    def __repr__(self):
        return f"Line({self.addr:#x}, {self.state.value}, v={self.value})"


class L1Controller:
    def __init__(self, core: int, node: int, host: "CoherentSystem", config: L1Config | None = None):
        self.core = core
        self.node = node
        self.host = host
        self.config = config or L1Config()
        self.sets: list[OrderedDict[int, Line]] = [OrderedDict() for _ in range(self.config.sets)]
        # evicted owned lines waiting for WBAck: addr -> Line in MI_A / EI_A
        self.writebacks: dict[int, Line] = {}
        self.parked: dict[int, deque[CoherenceMessage]] = {}

    # ---------------------------------------------------------------- lookup

    def set_of(self, addr: int) -> OrderedDict[int, Line]:
        return self.sets[(addr // self.config.line) % self.config.sets]

    def line(self, addr: int) -> Line | None:
        return self.set_of(addr).get(addr)

    def state_of(self, addr: int) -> L1State:
        ln = self.line(addr)
        if ln is not None:
            return ln.state
        wb = self.writebacks.get(addr)
        return wb.state if wb is not None else L1State.I

    def touch(self, addr: int):
        self.set_of(addr).move_to_end(addr)

    def lines(self):
        for s in self.sets:
            yield from s.values()

    def _set_state(self, ln: Line, state: L1State):
        old = ln.state
        ln.state = state
        self.host.on_l1_state(self.core, ln.addr, old, state)

    def _drop(self, ln: Line):
        old = ln.state
        del self.set_of(ln.addr)[ln.addr]
        self.host.on_l1_state(self.core, ln.addr, old, L1State.I)

    # ------------------------------------------------------------- requests

    def needs_victim(self, addr: int) -> Line | None:
        s = self.set_of(addr)
        if addr in s or len(s) < self.config.assoc:
            return None
        for ln in s.values():  # LRU first
            if ln.state.stable:
                return ln
        raise ProtocolViolation(f"core {self.core}: no stable victim in set of {addr:#x}")

    def evict(self, ln: Line, txn: int | None) -> int:
        """Replace a stable line; returns the number of messages sent."""
        st = ln.state
        if st is L1State.S:
            self._drop(ln)
            return 0
        if st in (L1State.M, L1State.E):
            self._drop(ln)
            wb = Line(ln.addr, L1State.MI_A if st is L1State.M else L1State.EI_A)
            wb.value = ln.value
            wb.txn = txn
            self.writebacks[ln.addr] = wb
            kind = MsgKind.PutM if st is L1State.M else MsgKind.PutE
            self.host.send(kind, ln.addr, self.node, self.host.home_of(ln.addr), self.node, txn,
                           value=ln.value)
            return 1
        raise ProtocolViolation(f"evict of transient line {ln!r}")

    def issue(self, addr: int, write: bool, upgrade: bool, txn: int):
        home = self.host.home_of(addr)
        if upgrade:
            ln = self.line(addr)
            self._set_state(ln, L1State.SM_AD)
            ln.has_data = True
        else:
            ln = Line(addr, L1State.I)
            self.set_of(addr)[addr] = ln
            self._set_state(ln, L1State.IM_AD if write else L1State.IS_D)
        ln.pending = 0
        ln.acks_known = False
        ln.txn = txn
        ln.expected = None
        kind = MsgKind.GetM if write else MsgKind.GetS
        self.host.send(kind, addr, self.node, home, self.node, txn, upgrade=upgrade)

    # -------------------------------------------------------------- receive

    def receive(self, msg: CoherenceMessage, now: int):
        kind = msg.kind
        addr = msg.address
        ln = self.line(addr)
        wb = self.writebacks.get(addr)
        before = ln.state if ln is not None else (wb.state if wb is not None else L1State.I)

        if kind in (MsgKind.Data, MsgKind.DataOwnerToReq):
            self._on_data(ln, msg, now)
        elif kind is MsgKind.AckCount:
            if ln is None or ln.state is not L1State.SM_AD:
                self._violation(msg, before)
            ln.pending += msg.ack_count
            ln.acks_known = True
            self._try_finish(ln, now)
        elif kind is MsgKind.InvAck:
            if ln is None or ln.state not in (L1State.IM_AD, L1State.IM_A,
                                              L1State.SM_AD, L1State.SM_A):
                self._violation(msg, before)
            ln.pending -= 1
            self._try_finish(ln, now)
        elif kind is MsgKind.Inv:
            self._on_inv(ln, wb, msg, before)
        elif kind in (MsgKind.FwdGetS, MsgKind.FwdGetM):
            self._on_fwd(ln, wb, msg, before)
        elif kind is MsgKind.WBAck:
            if wb is None:
                self._violation(msg, before)
            del self.writebacks[addr]
            self.host.on_writeback_done(self.core, addr, now)
        else:
            self._violation(msg, before)
        self.host.trace_event(now, self.node, "L1", before, msg, self.state_of(addr))

    def _on_data(self, ln: Line | None, msg: CoherenceMessage, now: int):
        if ln is None:
            self._violation(msg, L1State.I)
        st = ln.state
        ln.value = msg.value
        if st is L1State.IS_D:
            ln.has_data = True
            self._complete(ln, L1State.E if msg.exclusive else L1State.S, now)
        elif st is L1State.IS_D_I:
            if msg.exclusive:
                self._violation(msg, st)
            ln.has_data = True
            self._complete(ln, L1State.I, now)
        elif st in (L1State.IM_AD, L1State.SM_AD):
            ln.has_data = True
            ln.pending += msg.ack_count
            ln.acks_known = True
            self._try_finish(ln, now)
        else:
            self._violation(msg, st)

    def _try_finish(self, ln: Line, now: int):
        if ln.has_data and ln.acks_known:
            if ln.pending == 0:
                self._complete(ln, L1State.M, now)
            elif ln.state is L1State.IM_AD:
                self._set_state(ln, L1State.IM_A)
            elif ln.state is L1State.SM_AD:
                self._set_state(ln, L1State.SM_A)

    def _complete(self, ln: Line, final: L1State, now: int):
        txn = ln.txn
        ln.txn = None
        if final is L1State.I:
            self.host.on_access_complete(self.core, ln, now, txn)
            self._drop(ln)
        else:
            self._set_state(ln, final)
            self.host.on_access_complete(self.core, ln, now, txn)
        self._replay(ln.addr, now)

    def _on_inv(self, ln: Line | None, wb: Line | None, msg: CoherenceMessage, before: L1State):
        if ln is not None:
            st = ln.state
            if st is L1State.S:
                self._drop(ln)
            elif st is L1State.IS_D:
                self._set_state(ln, L1State.IS_D_I)
            elif st is L1State.SM_AD:
                ln.has_data = False
                self._set_state(ln, L1State.IM_AD)
            elif st in (L1State.IS_D_I, L1State.IM_AD, L1State.IM_A):
                pass  # a stale invalidation for a copy this core already dropped
            else:
                self._violation(msg, before)
        # absent or being written back: acknowledge, the copy is already gone
        self.host.send(MsgKind.InvAck, msg.address, self.node, msg.requester, msg.requester,
                       msg.txn)

    def _on_fwd(self, ln: Line | None, wb: Line | None, msg: CoherenceMessage, before: L1State):
        addr = msg.address
        if ln is not None and ln.state in _BECOMING_OWNER:
            self.parked.setdefault(addr, deque()).append(msg)
            return
        src = ln if ln is not None and ln.state in (L1State.M, L1State.E) else wb
        if src is None:
            self._violation(msg, before)
        self.host.send(MsgKind.DataOwnerToReq, addr, self.node, msg.requester, msg.requester,
                       msg.txn, value=src.value)
        if msg.kind is MsgKind.FwdGetS:
            self.host.send(MsgKind.DataOwnerToDir, addr, self.node, self.host.home_of(addr),
                           msg.requester, msg.txn, value=src.value)
            if src is ln:
                self._set_state(ln, L1State.S)
        elif src is ln:
            self._drop(ln)

    def _replay(self, addr: int, now: int):
        q = self.parked.get(addr)
        while q:
            ln = self.line(addr)
            if ln is not None and not ln.state.stable:
                return
            msg = q.popleft()
            self.receive(msg, now)
        self.parked.pop(addr, None)

    def _violation(self, msg: CoherenceMessage, state):
        raise ProtocolViolation(f"L1 core {self.core}: {msg} in state {getattr(state, 'value', state)}")


class DirState(str, enum.Enum):
    I = "I"
    S = "S"
    OWNED = "EM"


@dataclass
class DirectoryEntry:
    state: DirState = DirState.I
    owner: int = -1
    sharers: set[int] = field(default_factory=set)
    busy: bool = False
    queue: deque = field(default_factory=deque)
    # while waiting for DataOwnerToDir: the sharer set to install
    pending_sharers: tuple[int, ...] = ()


class DirectoryController:
    """Directory plus shared L2 slice for the lines homed at one node."""

    def __init__(self, node: int, host: "CoherentSystem", memory_latency: int = MEMORY_LATENCY):
        self.node = node
        self.host = host
        self.memory_latency = memory_latency
        self.entries: dict[int, DirectoryEntry] = {}
        self.l2: dict[int, int] = {}
        self.memory: dict[int, int] = {}
        self._fetches: list[tuple[int, int, int]] = []  # (ready cycle, seq, addr)
        self._fetch_msgs: dict[int, CoherenceMessage] = {}
        self._seq = 0

    def entry(self, addr: int) -> DirectoryEntry:
        e = self.entries.get(addr)
        if e is None:
            e = self.entries[addr] = DirectoryEntry()
        return e

    def receive(self, msg: CoherenceMessage, now: int):
        e = self.entry(msg.address)
        before = e.state
        if msg.kind is MsgKind.DataOwnerToDir:
            if not e.busy or not e.pending_sharers:
                raise ProtocolViolation(f"dir {self.node}: unexpected {msg}")
            self.l2[msg.address] = msg.value
            e.state = DirState.S
            e.owner = -1
            e.sharers = set(e.pending_sharers)
            e.pending_sharers = ()
            e.busy = False
            self.host.trace_event(now, self.node, "DIR", before, msg, e.state)
            self._drain_queue(msg.address, e, now)
            return
        if e.busy:
            e.queue.append(msg)
            return
        self._handle(msg, e, now)
        self.host.trace_event(now, self.node, "DIR", before, msg, e.state)

    def _handle(self, msg: CoherenceMessage, e: DirectoryEntry, now: int):
        kind = msg.kind
        addr = msg.address
        req = msg.src
        send = self.host.send
        if kind is MsgKind.GetS:
            if e.state is DirState.I:
                if self._fetch_needed(addr, msg, e, now):
                    return
                self._grant_exclusive(msg, e)
            elif e.state is DirState.S:
                e.sharers.add(req)
                send(MsgKind.Data, addr, self.node, req, req, msg.txn, value=self.l2[addr])
            else:
                if e.owner == req:
                    raise ProtocolViolation(f"dir {self.node}: GetS from owner {req}")
                send(MsgKind.FwdGetS, addr, self.node, e.owner, req, msg.txn)
                e.busy = True
                e.pending_sharers = (e.owner, req)
        elif kind is MsgKind.GetM:
            if e.state is DirState.I:
                if self._fetch_needed(addr, msg, e, now):
                    return
                self._grant_modified(msg, e)
            elif e.state is DirState.S:
                others = sorted(e.sharers - {req})
                for s in others:
                    send(MsgKind.Inv, addr, self.node, s, req, msg.txn)
                if msg.upgrade and req in e.sharers:
                    send(MsgKind.AckCount, addr, self.node, req, req, msg.txn,
                         ack_count=len(others))
                else:
                    send(MsgKind.Data, addr, self.node, req, req, msg.txn,
                         ack_count=len(others), value=self.l2[addr])
                e.state = DirState.OWNED
                e.owner = req
                e.sharers = set()
            else:
                if e.owner == req:
                    raise ProtocolViolation(f"dir {self.node}: GetM from owner {req}")
                send(MsgKind.FwdGetM, addr, self.node, e.owner, req, msg.txn)
                e.owner = req
        elif kind in (MsgKind.PutM, MsgKind.PutE):
            if e.state is DirState.OWNED and e.owner == req:
                if kind is MsgKind.PutM:
                    self.l2[addr] = msg.value
                e.state = DirState.I
                e.owner = -1
            elif e.state is DirState.S and req in e.sharers:
                e.sharers.discard(req)
                if not e.sharers:
                    e.state = DirState.I
            send(MsgKind.WBAck, addr, self.node, req, req, msg.txn)
        else:
            raise ProtocolViolation(f"dir {self.node}: cannot handle {msg}")

    def _fetch_needed(self, addr: int, msg: CoherenceMessage, e: DirectoryEntry, now: int) -> bool:
        if addr in self.l2:
            return False
        e.busy = True
        self._seq += 1
        heapq.heappush(self._fetches, (now + self.memory_latency, self._seq, addr))
        self._fetch_msgs[self._seq] = msg
        return True

    def _grant_exclusive(self, msg: CoherenceMessage, e: DirectoryEntry):
        self.host.send(MsgKind.Data, msg.address, self.node, msg.src, msg.src, msg.txn,
                       value=self.l2[msg.address], exclusive=True)
        e.state = DirState.OWNED
        e.owner = msg.src
        e.sharers = set()

    def _grant_modified(self, msg: CoherenceMessage, e: DirectoryEntry):
        self.host.send(MsgKind.Data, msg.address, self.node, msg.src, msg.src, msg.txn,
                       ack_count=0, value=self.l2[msg.address])
        e.state = DirState.OWNED
        e.owner = msg.src
        e.sharers = set()

    def next_fetch_cycle(self) -> int | None:
        return self._fetches[0][0] if self._fetches else None

    def tick(self, now: int):
        """Complete memory fetches that are due at ``now``."""
        while self._fetches and self._fetches[0][0] <= now:
            _, seq, addr = heapq.heappop(self._fetches)
            msg = self._fetch_msgs.pop(seq)
            e = self.entry(addr)
            self.l2[addr] = self.memory.get(addr, 0)
            e.busy = False
            if msg.kind is MsgKind.GetS:
                self._grant_exclusive(msg, e)
            else:
                self._grant_modified(msg, e)
            self._drain_queue(addr, e, now)

    def _drain_queue(self, addr: int, e: DirectoryEntry, now: int):
        while e.queue and not e.busy:
            msg = e.queue.popleft()
            before = e.state
            self._handle(msg, e, now)
            self.host.trace_event(now, self.node, "DIR", before, msg, e.state)
