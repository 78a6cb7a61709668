from __future__ import annotations

import enum
from dataclasses import dataclass

from ccnoc.noc.network import CONTROL_FLITS, DATA_FLITS, VNet

LINE_BYTES = 64
MEMORY_BYTES = 512 * 1024 * 1024
MEMORY_LATENCY = 100


class ProtocolViolation(RuntimeError):
    pass


class MsgKind(enum.Enum):
    GetS = "GetS"
    GetM = "GetM"
    PutM = "PutM"
    PutE = "PutE"
    FwdGetS = "FwdGetS"
    FwdGetM = "FwdGetM"
    Inv = "Inv"
    InvAck = "InvAck"
    Data = "Data"
    DataOwnerToReq = "DataOwnerToReq"
    DataOwnerToDir = "DataOwnerToDir"
    AckCount = "AckCount"
    WBAck = "WBAck"

    @property
    def vnet(self) -> VNet:
        return _VNET[self]

    @property
    def carries_data(self) -> bool:
        return self in _DATA_KINDS

    @property
    def flits(self) -> int:
        return DATA_FLITS if self in _DATA_KINDS else CONTROL_FLITS

    @property
    def to_directory(self) -> bool:
        return self in _DIR_KINDS


_VNET = {
    MsgKind.GetS: VNet.REQUEST, MsgKind.GetM: VNet.REQUEST,
    MsgKind.PutM: VNet.REQUEST, MsgKind.PutE: VNet.REQUEST,
    MsgKind.FwdGetS: VNet.FORWARD, MsgKind.FwdGetM: VNet.FORWARD, MsgKind.Inv: VNet.FORWARD,
    MsgKind.InvAck: VNet.RESPONSE, MsgKind.Data: VNet.RESPONSE,
    MsgKind.DataOwnerToReq: VNet.RESPONSE, MsgKind.DataOwnerToDir: VNet.RESPONSE,
    MsgKind.AckCount: VNet.RESPONSE, MsgKind.WBAck: VNet.RESPONSE,
}
_DATA_KINDS = frozenset({MsgKind.Data, MsgKind.DataOwnerToReq, MsgKind.DataOwnerToDir, MsgKind.PutM})
_DIR_KINDS = frozenset({MsgKind.GetS, MsgKind.GetM, MsgKind.PutM, MsgKind.PutE,
                        MsgKind.DataOwnerToDir})


@dataclass(slots=True)
class CoherenceMessage:
    kind: MsgKind
    address: int
    src: int
    dst: int
    requester: int
    txn: int | None
    ack_count: int = 0
    value: int = 0
    exclusive: bool = False
    upgrade: bool = False

    def __str__(self):
        return f"{self.kind.value}[{self.address:#x} {self.src}->{self.dst} txn={self.txn}]"


def line_address(address: int) -> int:
    return address - address % LINE_BYTES


def home_of(address: int, core_nodes) -> int:
    """Node whose directory slice owns ``address`` (line-interleaved)."""
    if not 0 <= address < MEMORY_BYTES:
        raise ValueError(f"address {address:#x} outside the 512 MB space")
    return core_nodes[(address // LINE_BYTES) % len(core_nodes)]
