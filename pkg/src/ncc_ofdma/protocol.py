"""One NCC-OFDMA frame, end to end.

Broadcast phase: the destination runs the constrained matching on its own
availability graph and assigns ``k_source`` subcarriers per source.  Sources
the matching could not saturate still transmit, on deterministically chosen
leftover subcarriers; those subcarriers are dead at the destination but may
well be alive at a relay, which is what keeps relay decoding statistically
independent of the destination's outages.

Relay phase: relays that decoded every source packet send network-coded
packets on ``k_relay`` subcarriers each, again matched by the destination.
Recovery is the erasure-code rule: with m coded packets on air, the frame
survives iff at most m of the n_sources + m packets are lost.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, Optional, TextIO

from .channel import (
    DESTINATION,
    ChannelRealization,
    Mode,
    NetworkConfig,
    draw_realization,
    subcarrier_ok,
)
from .matching import Matching, build_graph, max_constraint_matching


@dataclass(frozen=True)
class FrameOutcome:
    """Decode results of one frame."""

    relay_decode_set: frozenset[str]
    direct_success: dict[str, bool]
    coded_success: dict[str, bool]
    recovered: dict[str, bool]
    frame_outage: bool

    @property
    def m(self) -> int:
        return len(self.relay_decode_set)


def broadcast_allocate(real: ChannelRealization, config: NetworkConfig) -> Matching:
    """Destination-side matching of sources to broadcast subcarriers."""
    graph = build_graph(real, DESTINATION, config.sources, config.rate_threshold)
    return max_constraint_matching(graph, config.k_source)


def transmit_slots(alloc: Matching, config: NetworkConfig) -> dict[str, tuple[int, ...]]:
    """Subcarriers each source actually transmits on.

    Saturated sources use their matched subcarriers.  The rest get the lowest
    free indices, in source order: a fixed rule the destination can signal,
    carrying no information about any other receiver's channel.
    """
    used = {s for slots in alloc.assignment.values() for s in slots}
    slots: dict[str, tuple[int, ...]] = {}
    free = iter(s for s in range(config.grid.n_subcarriers) if s not in used)
    for u in config.sources:
        if u in alloc.saturated:
            slots[u] = alloc.assignment[u]
        else:
            take = tuple(next(free) for _ in range(config.k_source))
            slots[u] = take
    return slots


def _decodes(real: ChannelRealization, receiver: str, slots: tuple[int, ...],
             user: str, rate_threshold: float) -> bool:
    return all(subcarrier_ok(real, (user, receiver), s, rate_threshold) for s in slots)


def relay_decode_set(
    real: ChannelRealization, config: NetworkConfig, alloc: Matching
) -> frozenset[str]:
    """Relays that decode all source packets in the broadcast phase.

    REALISTIC: a relay needs every subcarrier a source transmitted on to be
    good on its own source->relay link; the destination's assignment gives it
    no frequency diversity.  OPTIMISTIC: each relay is granted its own ideal
    matching over its own availability graph.
    """
    slots = transmit_slots(alloc, config)
    decoded: set[str] = set()
    for r in config.relays:
        if config.mode is Mode.REALISTIC:
            ok = all(
                _decodes(real, r, slots[u], u, config.rate_threshold)
                for u in config.sources
            )
        else:
            graph = build_graph(real, r, config.sources, config.rate_threshold)
            own = max_constraint_matching(graph, config.k_source)
            ok = len(own.saturated) == config.n_sources
        if ok:
            decoded.add(r)
    return frozenset(decoded)


def mds_recover(
    direct_success: dict[Hashable, bool], coded_success: dict[Hashable, bool]
) -> tuple[dict[Hashable, bool], bool]:
    """Erasure-code recovery: all packets recovered iff failures <= #coded packets."""
    m = len(coded_success)
    failures = sum(not ok for ok in direct_success.values())
    failures += sum(not ok for ok in coded_success.values())
    if failures <= m:
        return {u: True for u in direct_success}, False
    return dict(direct_success), True


def relay_phase_and_decode(
    real: ChannelRealization,
    config: NetworkConfig,
    decode_set: frozenset[str],
    direct_success: dict[str, bool],
) -> FrameOutcome:
    """Allocate the relay phase, decode at the destination, apply recovery."""
    coded_success: dict[str, bool] = {}
    if decode_set:
        transmitters = tuple(r for r in config.relays if r in decode_set)
        graph = build_graph(real, DESTINATION, transmitters, config.rate_threshold)
        relay_alloc = max_constraint_matching(graph, config.k_relay)
        coded_success = {r: r in relay_alloc.saturated for r in transmitters}
    recovered, outage = mds_recover(direct_success, coded_success)
    return FrameOutcome(
        relay_decode_set=decode_set,
        direct_success=direct_success,
        coded_success=coded_success,
        recovered=recovered,
        frame_outage=outage,
    )


def run_frame(real: ChannelRealization, config: NetworkConfig) -> FrameOutcome:
    """Both phases on an existing channel realization."""
    alloc = broadcast_allocate(real, config)
    slots = transmit_slots(alloc, config)
    direct_success = {
        u: _decodes(real, DESTINATION, slots[u], u, config.rate_threshold)
        for u in config.sources
    }
    decode_set = relay_decode_set(real, config, alloc)
    return relay_phase_and_decode(real, config, decode_set, direct_success)


def simulate_frame(
    config: NetworkConfig,
    snr: float,
    seed: int,
    trace: Optional[TextIO] = None,
) -> FrameOutcome:
    """Draw a frame and run it; deterministic in (config, snr, seed)."""
    real = draw_realization(config, snr, seed)
    outcome = run_frame(real, config)
    if trace is not None:
        trace.write(trace_line(seed, outcome) + "\n")
    return outcome


def trace_line(seed: int, outcome: FrameOutcome) -> str:
    direct_fail = sum(not ok for ok in outcome.direct_success.values())
    coded_fail = sum(not ok for ok in outcome.coded_success.values())
    return (
        f"seed={seed} m={outcome.m} direct_fail={direct_fail} "
        f"coded_fail={coded_fail} outage={int(outcome.frame_outage)}"
    )
