from ccnoc.coherence.controllers import (DirectoryController, DirectoryEntry, DirState, L1Config,
                                         L1Controller, L1State)
from ccnoc.coherence.messages import (LINE_BYTES, MEMORY_LATENCY, CoherenceMessage, MsgKind,
                                      ProtocolViolation, home_of, line_address)
from ccnoc.coherence.system import (Access, CoherenceError, CoherentSystem, Outcome, TxnType)

__all__ = [
    "Access", "CoherenceError", "CoherenceMessage", "CoherentSystem", "DirState",
    "DirectoryController", "DirectoryEntry", "L1Config", "L1Controller", "L1State",
    "LINE_BYTES", "MEMORY_LATENCY", "MsgKind", "Outcome", "ProtocolViolation", "TxnType",
    "home_of", "line_address",
]
