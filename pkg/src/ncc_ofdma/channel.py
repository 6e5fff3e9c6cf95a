"""Block-fading OFDMA channel model.

One frame sees an independent Rayleigh power gain per (link, coherence
block); all subcarriers of a block share that gain.  A subcarrier is usable
on a link when its instantaneous capacity log2(1 + snr * gain) reaches the
per-subcarrier rate threshold.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

Link = tuple[str, str]

DESTINATION = "d"


class Mode(str, enum.Enum):
    """Relay decoding model.

    REALISTIC: relays listen on the subcarriers the destination assigned,
    which look arbitrary from the relay's channel state.
    OPTIMISTIC: relays are assumed to enjoy their own ideal allocation, the
    assumption this package exists to refute.
    """

    REALISTIC = "realistic"
    OPTIMISTIC = "optimistic"


@dataclass(frozen=True)
class OfdmaGrid:
    """OFDMA grid of ``n_blocks`` coherence blocks, ``block_size`` subcarriers each."""

    n_blocks: int
    block_size: int

    def __post_init__(self):
        if self.n_blocks < 1:
            raise ValueError(f"n_blocks must be >= 1, got {self.n_blocks}")
        if self.block_size < 1:
            raise ValueError(f"block_size must be >= 1, got {self.block_size}")

    @property
    def n_subcarriers(self) -> int:
        return self.n_blocks * self.block_size

    def block_of(self, subcarrier: int) -> int:
        if not 0 <= subcarrier < self.n_subcarriers:
            raise ValueError(f"subcarrier {subcarrier} out of range [0, {self.n_subcarriers})")
        return subcarrier // self.block_size


@dataclass(frozen=True)
class NetworkConfig:
    """Topology and resource quotas for one network.

    ``k_source`` subcarriers go to each source in the broadcast phase and
    ``k_relay`` to each forwarding relay in the relay phase.  ``rate_threshold``
    is the per-subcarrier spectral efficiency a link must support (bits/s/Hz);
    ``nominal_rate`` is only recorded in outputs.
    """

    n_sources: int
    n_relays: int
    grid: OfdmaGrid
    k_source: int = 1
    k_relay: int = 1
    rate_threshold: float = 1.0
    mode: Mode = Mode.REALISTIC
    nominal_rate: float = 1.0

    def __post_init__(self):
        n = self.grid.n_subcarriers
        if self.n_sources < 1:
            raise ValueError(f"n_sources must be >= 1, got {self.n_sources}")
        if self.n_relays < 0:
            raise ValueError(f"n_relays must be >= 0, got {self.n_relays}")
        if self.k_source < 1:
            raise ValueError(f"k_source must be >= 1, got {self.k_source}")
        if self.k_relay < 1:
            raise ValueError(f"k_relay must be >= 1, got {self.k_relay}")
        if self.n_sources * self.k_source > n:
            raise ValueError(
                f"broadcast phase over-subscribed: n_sources*k_source = "
                f"{self.n_sources * self.k_source} > {n} subcarriers"
            )
        if self.n_relays >= 1 and self.n_relays * self.k_relay > n:
            raise ValueError(
                f"relay phase over-subscribed: n_relays*k_relay = "
                f"{self.n_relays * self.k_relay} > {n} subcarriers"
            )
        if not self.rate_threshold > 0:
            raise ValueError(f"rate_threshold must be > 0, got {self.rate_threshold}")
        object.__setattr__(self, "mode", Mode(self.mode))

    @property
    def sources(self) -> tuple[str, ...]:
        return tuple(f"u{i + 1}" for i in range(self.n_sources))

    @property
    def relays(self) -> tuple[str, ...]:
        return tuple(f"r{j + 1}" for j in range(self.n_relays))

    def links(self) -> tuple[Link, ...]:
        """Canonical link order: source->dest, source->relay, relay->dest.

        Fixed because the Monte Carlo engines map raw random draws to links
        positionally.
        """
        sd = [(u, DESTINATION) for u in self.sources]
        sr = [(u, r) for u in self.sources for r in self.relays]
        rd = [(r, DESTINATION) for r in self.relays]
        return tuple(sd + sr + rd)


@dataclass(frozen=True)
class ChannelRealization:
    """Per-link block power gains for one frame at mean SNR ``snr``."""

    grid: OfdmaGrid
    snr: float
    gains: dict[Link, np.ndarray] = field(repr=False)

    def gain(self, link: Link, block: int) -> float:
        if link not in self.gains:
            raise ValueError(f"unknown link {link!r}")
        return float(self.gains[link][block])


def gain_threshold(snr: float, rate_threshold: float) -> float:
    """Smallest power gain keeping log2(1 + snr*g) >= rate_threshold."""
    return (2.0 ** rate_threshold - 1.0) / snr


def block_outage_prob(snr: float, rate_threshold: float) -> float:
    """Probability that one Rayleigh block fails the per-subcarrier threshold.

    Unit-mean exponential gain, so P[log2(1 + snr*g) < r] = 1 - exp(-(2^r - 1)/snr).
    """
    if not snr > 0:
        raise ValueError(f"snr must be > 0, got {snr}")
    if not rate_threshold > 0:
        raise ValueError(f"rate_threshold must be > 0, got {rate_threshold}")
    return -math.expm1(-gain_threshold(snr, rate_threshold))


def gains_from_uniforms(u: np.ndarray) -> np.ndarray:
    """Map uniforms in [0,1) to unit-mean exponential power gains.

    Inverse CDF on exactly one uniform per gain: keeps the draw count fixed so
    counter-based streams stay reproducible across batch shapes.
    """
    return -np.log1p(-u)


def uniforms_from_raw(raw: np.ndarray) -> np.ndarray:
    """53-bit uniforms in [0,1) from raw 64-bit draws."""
    return (raw >> np.uint64(11)) * np.float64(2.0 ** -53)


def draw_realization(config: NetworkConfig, snr: float, seed: int) -> ChannelRealization:
    """Draw one i.i.d. block-fading frame; deterministic in (config, snr, seed)."""
    if not snr > 0:
        raise ValueError(f"snr must be > 0, got {snr}")
    links = config.links()
    n_blocks = config.grid.n_blocks
    bg = np.random.Philox(key=np.random.SeedSequence((seed,)).generate_state(2, np.uint64))
    raw = bg.random_raw(len(links) * n_blocks)
    flat = gains_from_uniforms(uniforms_from_raw(raw))
    gains = {
        link: flat[i * n_blocks:(i + 1) * n_blocks].copy()
        for i, link in enumerate(links)
    }
    return ChannelRealization(grid=config.grid, snr=snr, gains=gains)


def subcarrier_ok(
    real: ChannelRealization, link: Link, subcarrier: int, rate_threshold: float
) -> bool:
    """True when the subcarrier's block supports ``rate_threshold`` on ``link``.

    Block fading: every subcarrier of one block gives the same answer.
    """
    block = real.grid.block_of(subcarrier)
    return real.gain(link, block) >= gain_threshold(real.snr, rate_threshold)
