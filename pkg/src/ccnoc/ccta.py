"""Cache Coherence Traffic Analyzer.

Observes a running :class:`~ccnoc.coherence.CoherentSystem` through three
callbacks and never feeds anything back into it.  Every protocol message
carries the id of the CPU transaction it serves, so attribution is exact even
when many transactions overlap.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

TXN_TYPES = ("WriteHitS", "ReadMiss", "WriteMiss")
RAW_HEADER = ["txn_id", "type", "core", "addr", "start", "first_in", "last_in", "end", "msgs"]
AGGREGATE_HEADER = ["window_start", "window_end", "H_t", "write_miss_avg", "mem_fetch_avg", "C_t"]


class DuplicateTransaction(RuntimeError):
    pass


class UnknownTransaction(KeyError):
    pass


@dataclass
class TransactionRecord:
    txn_id: int
    type: str
    core: int
    address: int
    start_cycle: int
    end_cycle: int | None = None
    message_count: int = 0
    first_inport_cycle: int | None = None
    last_inport_cycle: int | None = None
    kinds: dict[str, int] = field(default_factory=dict)

    @property
    def sealed(self) -> bool:
        return self.end_cycle is not None

    @property
    def duration(self) -> int:
        return self.end_cycle - self.start_cycle

    def csv_row(self) -> list:
        opt = lambda v: "" if v is None else v
        return [self.txn_id, self.type, self.core, f"{self.address:#x}", self.start_cycle,
                opt(self.first_inport_cycle), opt(self.last_inport_cycle), opt(self.end_cycle),
                self.message_count]


@dataclass
class CoherenceMetrics:
    cpu_delay_avg: float = 0.0
    write_miss_time_avg: float = 0.0
    mem_fetch_time_avg: float = 0.0
    total_messages: int = 0
    histogram: dict[str, int] = field(default_factory=dict)
    counts: dict[str, int] = field(default_factory=dict)
    window: tuple[int, int] = (0, 0)
    # categories with no sealed transaction in the window
    empty: tuple[str, ...] = ()

    @property
    def H_t(self) -> float:
        return self.cpu_delay_avg

    @property
    def C_t(self) -> int:
        return self.total_messages

    def csv_row(self) -> list:
        return [self.window[0], self.window[1], _fmt(self.cpu_delay_avg),
                _fmt(self.write_miss_time_avg), _fmt(self.mem_fetch_time_avg),
                self.total_messages]


def _fmt(x: float) -> str:
    return repr(float(x))


def aggregate(records, window: tuple[int, int] | None = None) -> CoherenceMetrics:
    """Aggregate sealed records whose end cycle lies in ``(start, end]``."""
    start, end = window if window is not None else (None, None)
    sums = {t: 0 for t in TXN_TYPES}
    counts = {t: 0 for t in TXN_TYPES}
    hist: dict[str, int] = {}
    total = 0
    lo, hi = None, None
    for r in records:
        if r.end_cycle is None:
            continue
        if window is not None and not (start < r.end_cycle <= end):
            continue
        sums[r.type] += r.end_cycle - r.start_cycle
        counts[r.type] += 1
        total += r.message_count
        for k, v in r.kinds.items():
            hist[k] = hist.get(k, 0) + v
        lo = r.start_cycle if lo is None else min(lo, r.start_cycle)
        hi = r.end_cycle if hi is None else max(hi, r.end_cycle)
    mean = lambda t: sums[t] / counts[t] if counts[t] else 0.0
    if window is None:
        window = (0, hi or 0)
    return CoherenceMetrics(
        cpu_delay_avg=mean("WriteHitS"),
        write_miss_time_avg=mean("WriteMiss"),
        mem_fetch_time_avg=mean("ReadMiss"),
        total_messages=total,
        histogram=hist,
        counts=counts,
        window=window,
        empty=tuple(t for t in TXN_TYPES if not counts[t]),
    )


class Analyzer:
    def __init__(self):
        self.records: dict[int, TransactionRecord] = {}
        self._live: dict[tuple[int, int], int] = {}
        self._next_id = 0

    def on_transaction_start(self, core: int, type: str, address: int, cycle: int,
                             txn_id: int | None = None) -> int:
        if type not in TXN_TYPES:
            raise ValueError(f"unknown transaction type {type!r}")
        if (core, address) in self._live:
            raise DuplicateTransaction(f"core {core} already has a transaction on {address:#x}")
        if txn_id is None:
            txn_id = self._next_id
        if txn_id in self.records:
            raise DuplicateTransaction(f"transaction id {txn_id} reused")
        self._next_id = max(self._next_id, txn_id + 1)
        self.records[txn_id] = TransactionRecord(txn_id, type, core, address, cycle)
        self._live[(core, address)] = txn_id
        return txn_id

    def _live_record(self, txn_id: int) -> TransactionRecord:
        r = self.records.get(txn_id)
        if r is None or r.sealed:
            raise UnknownTransaction(txn_id)
        return r

    def on_coherence_msg(self, txn_id: int, msg, direction: str, cycle: int):
        r = self._live_record(txn_id)
        if direction == "sent":
            r.message_count += 1
            kind = msg.kind.value
            r.kinds[kind] = r.kinds.get(kind, 0) + 1
        elif direction == "received_at_L1_inport":
            if r.first_inport_cycle is None:
                r.first_inport_cycle = cycle
            r.last_inport_cycle = cycle
        else:
            raise ValueError(f"bad direction {direction!r}")

    def on_transaction_end(self, txn_id: int, cycle: int):
        r = self._live_record(txn_id)
        r.end_cycle = cycle
        del self._live[(r.core, r.address)]

    def sealed(self):
        return [r for r in self.records.values() if r.sealed]

    def report(self, window: tuple[int, int] | None = None) -> CoherenceMetrics:
        return aggregate(self.records.values(), window)

    @property
    def total_messages(self) -> int:
        return sum(r.message_count for r in self.records.values())

    # ----------------------------------------------------------------- CSV

    def raw_csv(self) -> str:
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(RAW_HEADER)
        for tid in sorted(self.records):
            w.writerow(self.records[tid].csv_row())
        return out.getvalue()


def aggregate_csv(rows: list[CoherenceMetrics]) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(AGGREGATE_HEADER)
    for m in rows:
        w.writerow(m.csv_row())
    return out.getvalue()


def load_raw_csv(text: str) -> list[TransactionRecord]:
    """Parse a raw transaction dump back into records (no per-kind histogram)."""
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames != RAW_HEADER:
        raise ValueError(f"unexpected header {reader.fieldnames}")
    opt = lambda s: int(s) if s != "" else None
    out = []
    for row in reader:
        out.append(TransactionRecord(
            txn_id=int(row["txn_id"]), type=row["type"], core=int(row["core"]),
            address=int(row["addr"], 16), start_cycle=int(row["start"]),
            end_cycle=opt(row["end"]), message_count=int(row["msgs"]),
            first_inport_cycle=opt(row["first_in"]), last_inport_cycle=opt(row["last_in"])))
    return out


def load_aggregate_csv(text: str) -> list[dict]:
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames != AGGREGATE_HEADER:
        raise ValueError(f"unexpected header {reader.fieldnames}")
    return [dict(row) for row in reader]
