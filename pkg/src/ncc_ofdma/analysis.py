"""Closed-form outage chain and diversity-order estimation.

The chain mirrors the simulated protocol exactly when each coherence block
holds every user's quota (block_size >= n_sources*k_source and, with relays,
block_size >= n_relays*k_relay):

* a source is lost at the destination iff all its blocks fail there,
* a relay decodes a source iff the one block the destination assigned is
  good on that source->relay link (REALISTIC), or iff any of that link's
  blocks is good (OPTIMISTIC),
* a forwarding relay's coded packet is lost iff all its relay->destination
  blocks fail,

with every event independent across links.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .channel import Mode, NetworkConfig, block_outage_prob


@dataclass(frozen=True)
class OutagePoint:
    snr: float
    outage: float
    stderr: float = 0.0
    trials: int = 0

    def __post_init__(self):
        if not 0.0 <= self.outage <= 1.0:
            raise ValueError(f"outage {self.outage} outside [0, 1]")
        if self.stderr < 0.0:
            raise ValueError(f"stderr {self.stderr} < 0")

    @property
    def snr_db(self) -> float:
        return 10.0 * math.log10(self.snr)


@dataclass(frozen=True)
class OutageCurve:
    points: tuple[OutagePoint, ...]
    mode: str
    engine: str
    n_sources: int
    n_relays: int
    n_blocks: int

    def __post_init__(self):
        snrs = [p.snr for p in self.points]
        if any(b <= a for a, b in zip(snrs, snrs[1:])):
            raise ValueError("curve SNRs must be strictly increasing")

    @property
    def snr(self) -> np.ndarray:
        return np.array([p.snr for p in self.points])

    @property
    def outage(self) -> np.ndarray:
        return np.array([p.outage for p in self.points])


@dataclass(frozen=True)
class AnalyticParams:
    """Block outage probability per link class, plus the network shape."""

    p_sd: float
    p_sr: float
    p_rd: float
    n_sources: int
    n_relays: int
    n_blocks: int

    def __post_init__(self):
        for name in ("p_sd", "p_sr", "p_rd"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} = {v} outside [0, 1]")


def params_from_config(config: NetworkConfig, snr: float) -> AnalyticParams:
    """All link classes i.i.d. Rayleigh at the same mean SNR."""
    p = block_outage_prob(snr, config.rate_threshold)
    return AnalyticParams(
        p_sd=p, p_sr=p, p_rd=p,
        n_sources=config.n_sources,
        n_relays=config.n_relays,
        n_blocks=config.grid.n_blocks,
    )


def dest_frame_outage(p_sub: float, n_blocks: int) -> float:
    """Per-source outage at the allocating receiver: all blocks must fail."""
    if not 0.0 <= p_sub <= 1.0:
        raise ValueError(f"p_sub = {p_sub} outside [0, 1]")
    if n_blocks < 1:
        raise ValueError(f"n_blocks must be >= 1, got {n_blocks}")
    return p_sub ** n_blocks


def relay_success_all(p_sr: float, n_sources: int) -> float:
    """Probability one relay decodes every source: one block outage kills a source."""
    if not 0.0 <= p_sr <= 1.0:
        raise ValueError(f"p_sr = {p_sr} outside [0, 1]")
    if n_sources < 1:
        raise ValueError(f"n_sources must be >= 1, got {n_sources}")
    return (1.0 - p_sr) ** n_sources


def relay_count_distribution(p_relay: float, n_relays: int) -> np.ndarray:
    """Binomial distribution of the number of relays that decoded everything."""
    if not 0.0 <= p_relay <= 1.0:
        raise ValueError(f"p_relay = {p_relay} outside [0, 1]")
    m = np.arange(n_relays + 1)
    pmf = np.array([
        math.comb(n_relays, k) * p_relay ** k * (1.0 - p_relay) ** (n_relays - k)
        for k in m
    ])
    return pmf


def conditional_outage(eps_direct: float, eps_coded: float, n_sources: int, m: int) -> float:
    """P[more than m losses among n_sources direct + m coded packets].

    Exact convolution of the two binomial loss counts.
    """
    for name, v in (("eps_direct", eps_direct), ("eps_coded", eps_coded)):
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"{name} = {v} outside [0, 1]")
    if m < 0:
        raise ValueError(f"m must be >= 0, got {m}")
    total = 0.0
    for a in range(n_sources + 1):
        pa = math.comb(n_sources, a) * eps_direct ** a * (1.0 - eps_direct) ** (n_sources - a)
        for b in range(m + 1):
            if a + b <= m:
                continue
            pb = math.comb(m, b) * eps_coded ** b * (1.0 - eps_coded) ** (m - b)
            total += pa * pb
    return min(total, 1.0)


def overall_outage(params: AnalyticParams, mode: Mode | str) -> float:
    """Frame outage probability of the full scheme.

    REALISTIC uses the single-block relay decoding probability; OPTIMISTIC
    grants source->relay links the full per-frame diversity, which is the
    assumption being corrected.
    """
    mode = Mode(mode)
    L = params.n_blocks
    eps_direct = dest_frame_outage(params.p_sd, L)
    eps_coded = dest_frame_outage(params.p_rd, L)
    if mode is Mode.REALISTIC:
        p_relay = relay_success_all(params.p_sr, params.n_sources)
    else:
        p_relay = relay_success_all(params.p_sr ** L, params.n_sources)
    pmf = relay_count_distribution(p_relay, params.n_relays)
    return float(sum(
        pmf[m] * conditional_outage(eps_direct, eps_coded, params.n_sources, m)
        for m in range(params.n_relays + 1)
    ))


def analytic_sweep(
    config: NetworkConfig, snr_grid: Sequence[float], mode: Mode | str | None = None
) -> OutageCurve:
    """Exact outage curve over a strictly increasing grid of linear SNRs."""
    mode = Mode(mode) if mode is not None else config.mode
    points = tuple(
        OutagePoint(snr=g, outage=overall_outage(params_from_config(config, g), mode))
        for g in snr_grid
    )
    return OutageCurve(
        points=points, mode=mode.value, engine="analytic",
        n_sources=config.n_sources, n_relays=config.n_relays,
        n_blocks=config.grid.n_blocks,
    )


@dataclass(frozen=True)
class LeadingTerm:
    """High-SNR leading term coeff * p^exponent of the realistic frame outage.

    ``reported_coefficient`` is the published value for the n_sources ==
    n_relays case; ``model_coefficient`` is what this package's outage chain
    expands to.  They need not agree (the published expansion relies on
    intermediate expressions not available here); the exponent does.
    """

    exponent: int
    reported_coefficient: float
    model_coefficient: float


def asymptotic_leading_term(n_sources: int, n_relays: int, n_blocks: int) -> LeadingTerm:
    """Leading-order realistic outage term for the symmetric case."""
    if n_sources != n_relays:
        raise ValueError(
            f"leading term requires n_sources == n_relays, got {n_sources} != {n_relays}"
        )
    P, M, L = n_sources, n_relays, n_blocks
    exponent = M + L
    reported = float((M - 1) ** M)
    if L > 1:
        # Only the m = 0 term of the sum reaches order p^(M+L).
        model = float(P ** (M + 1))
    else:
        model = float(sum(
            math.comb(M, m) * P ** (M - m) * math.comb(P + m, m + 1)
            for m in range(M + 1)
        ))
    return LeadingTerm(exponent=exponent, reported_coefficient=reported,
                       model_coefficient=model)


@dataclass(frozen=True)
class SlopeFit:
    """Least-squares diversity slope of log10(outage) vs log10(snr)."""

    slope: float
    residual: float
    n_points: int
    window: tuple[float, float]


def diversity_slope(curve: OutageCurve, window: tuple[float, float]) -> SlopeFit:
    """Negated log-log slope over ``window`` = (snr_lo, snr_hi), linear SNR."""
    lo, hi = window
    if not lo < hi:
        raise ValueError(f"window must satisfy lo < hi, got {window}")
    sel = [p for p in curve.points if lo <= p.snr <= hi]
    if len(sel) < 3:
        raise ValueError(f"need >= 3 points in window, found {len(sel)}")
    if any(p.outage <= 0.0 for p in sel):
        raise ValueError("window contains nonpositive outage estimates; "
                         "raise trials or shrink the window")
    x = np.log10([p.snr for p in sel])
    y = np.log10([p.outage for p in sel])
    (slope, intercept), res = np.polyfit(x, y, 1), 0.0
    res = float(np.sqrt(np.mean((y - (slope * x + intercept)) ** 2)))
    return SlopeFit(slope=float(-slope), residual=res, n_points=len(sel),
                    window=(lo, hi))


def default_fit_window(curve: OutageCurve, floor: float = 1e-9) -> tuple[float, float]:
    """Highest SNR decade anchored where the curve still reaches ``floor``.

    The decade runs upward from the last point with outage >= floor, deep into
    the asymptotic region where the local slope has converged.
    """
    anchored = [p.snr for p in curve.points if p.outage >= floor]
    if not anchored:
        raise ValueError(f"no curve point reaches outage >= {floor}")
    lo = max(anchored)
    if lo * 10.0 > curve.points[-1].snr * (1 + 1e-9):
        raise ValueError("grid does not extend a full decade beyond the anchor; "
                         "extend the SNR grid")
    return (lo, lo * 10.0)
