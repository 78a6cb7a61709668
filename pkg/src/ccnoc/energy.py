"""Abstract energy model driven by traffic counters.

The default constants are arbitrary round numbers.  Only relative comparisons
between runs (e.g. two routing policies on the same trace) mean anything.
"""

from __future__ import annotations

from dataclasses import dataclass

ENERGY_HEADER = ["dyn_J", "static_J", "total_J", "J_per_packet"]


@dataclass(frozen=True)
class EnergyParams:
    e_link: float = 1e-12      # J per flit-hop
    e_router: float = 2e-12    # J per flit router traversal
    p_static: float = 0.1e-12  # J per node per cycle

    def __post_init__(self):
        for name in ("e_link", "e_router", "p_static"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")


@dataclass(frozen=True)
class EnergyReport:
    dynamic_J: float
    static_J: float
    total_J: float
    J_per_packet: float
    # set when no packet was ejected and J_per_packet is reported as 0
    no_packets: bool = False

    def csv_row(self) -> list[str]:
        return [repr(self.dynamic_J), repr(self.static_J), repr(self.total_J),
                repr(self.J_per_packet)]


def estimate(flit_hops: int, router_traversals: int, ejected_packets: int, cycles: int,
             node_count: int, params: EnergyParams = EnergyParams()) -> EnergyReport:
    dyn = flit_hops * params.e_link + router_traversals * params.e_router
    static = params.p_static * node_count * cycles
    total = dyn + static
    if ejected_packets > 0:
        return EnergyReport(dyn, static, total, total / ejected_packets)
    return EnergyReport(dyn, static, total, 0.0, no_packets=True)


def estimate_from_metrics(noc, cycles: int, node_count: int,
                          params: EnergyParams = EnergyParams()) -> EnergyReport:
    return estimate(noc.flit_hops, noc.router_traversals, noc.ejected_packets, cycles,
                    node_count, params)
