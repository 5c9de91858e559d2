"""Differentially private release of counter summaries.

The SpaceSaving mechanism runs a non-private pass with an expanded
capacity k_tilde > k, adds independent Laplace(1/epsilon) noise to every
tracked counter, and releases exactly the labels whose noisy counts
clear max(T/k, T/k_tilde + 1 + gamma) with gamma = ln(2/delta)/epsilon.
The expanded table pins every unstable (neighbour-dependent) label near
the minimum count, where that threshold suppresses it with probability
at least 1 - delta.

The MisraGries baseline mechanism adds one shared draw to all counters
(hiding the all-counters-shift case between neighbouring streams) plus
independent per-counter draws, then thresholds at max(T/k, 1 + 2*gamma);
isolated labels there have true count at most 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional

from .noise import NoiseSource
from .summaries import StreamSummary, mg_process, ss_process


class InfeasibleCapacityError(ValueError):
    """No finite expanded capacity can keep the recall threshold at T/k."""


@dataclass(frozen=True)
class PrivacyParams:
    """Privacy budget plus the two capacities of a private release.

    k is the heavy-hitter target (admit labels with frequency above T/k);
    k_tilde is the expanded table size, defaulting to 2*k.
    """

    epsilon: float
    delta: float
    k: int
    k_tilde: Optional[int] = None

    def __post_init__(self) -> None:
        if self.epsilon <= 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if not 0 < self.delta < 1:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if self.k_tilde is None:
            object.__setattr__(self, "k_tilde", 2 * self.k)
        if self.k_tilde <= self.k:
            raise ValueError(f"k_tilde must exceed k, got k_tilde={self.k_tilde} k={self.k}")

    @property
    def gamma(self) -> float:
        """Noise suppression margin ln(2/delta)/epsilon, recomputed on demand."""
        return math.log(2.0 / self.delta) / self.epsilon


def compute_gamma(params: PrivacyParams) -> float:
    return params.gamma


@dataclass
class ReleaseReport:
    """A private release: surviving labels with noisy counts, and the threshold used."""

    released: dict[int, float]
    threshold: float
    stream_length: int
    mechanism: str


def dpss_threshold(stream_length: int, params: PrivacyParams) -> float:
    """Release threshold max(T/k, T/k_tilde + 1 + gamma)."""
    if stream_length < 0:
        raise ValueError("stream_length must be non-negative")
    return max(
        stream_length / params.k,
        stream_length / params.k_tilde + 1.0 + params.gamma,
    )


def dpss_release_from_summary(
    summary: StreamSummary, params: PrivacyParams, noise: NoiseSource
) -> ReleaseReport:
    """Noise-and-threshold stage over an existing SpaceSaving summary."""
    threshold = dpss_threshold(summary.processed, params)
    scale = 1.0 / params.epsilon
    released = {}
    for label, count in summary.counts.items():
        noisy = count + noise.laplace(scale)
        if noisy > threshold:
            released[label] = noisy
    return ReleaseReport(released, threshold, summary.processed, "dpss")


def dpss_release(
    stream: Iterable[int], params: PrivacyParams, noise: NoiseSource
) -> ReleaseReport:
    """Private SpaceSaving release: expanded pass, per-counter noise, threshold."""
    summary = ss_process(stream, params.k_tilde)
    return dpss_release_from_summary(summary, params, noise)


def dpmg_threshold(stream_length: int, params: PrivacyParams) -> float:
    """Baseline threshold max(T/k, 1 + 2*gamma); absorbs shared plus per-counter noise."""
    if stream_length < 0:
        raise ValueError("stream_length must be non-negative")
    return max(stream_length / params.k, 1.0 + 2.0 * params.gamma)


def dpmg_release_from_summary(
    summary: StreamSummary, params: PrivacyParams, noise: NoiseSource
) -> ReleaseReport:
    """Noise-and-threshold stage over an existing MisraGries summary."""
    threshold = dpmg_threshold(summary.processed, params)
    scale = 1.0 / params.epsilon
    shared = noise.laplace(scale)
    released = {}
    for label, count in summary.counts.items():
        noisy = count + shared + noise.laplace(scale)
        if noisy > threshold:
            released[label] = noisy
    return ReleaseReport(released, threshold, summary.processed, "dpmg")


def dpmg_release(
    stream: Iterable[int], params: PrivacyParams, noise: NoiseSource
) -> ReleaseReport:
    """Private MisraGries release with shared plus per-counter noise."""
    summary = mg_process(stream, params.k_tilde)
    return dpmg_release_from_summary(summary, params, noise)


def capacity_for_recall(
    stream_length: int, k: int, epsilon: float, delta: float
) -> int:
    """Smallest k_tilde > k whose suppression arm stays below T/k.

    That is the least integer with T/k_tilde + 1 + gamma <= T/k, so the
    threshold never exceeds T/k and true heavy hitters stay releasable.
    """
    gamma = math.log(2.0 / delta) / epsilon
    headroom = stream_length / k - (1.0 + gamma)
    if headroom <= 0:
        raise InfeasibleCapacityError(
            f"T/k = {stream_length / k:.6g} must exceed 1 + gamma = {1.0 + gamma:.6g}"
        )
    candidate = max(math.ceil(stream_length / headroom), k + 1)
    # Guard the ceiling against float rounding on either side.
    while stream_length / candidate + 1.0 + gamma > stream_length / k:
        candidate += 1
    while candidate - 1 > k and stream_length / (candidate - 1) + 1.0 + gamma <= stream_length / k:
        candidate -= 1
    return candidate
