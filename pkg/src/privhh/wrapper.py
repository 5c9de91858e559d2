"""Label-private heavy hitters from any frequency oracle.

Works with any oracle exposing update(label) -> fresh estimate and
query(label) -> estimate: a candidate set of at most k_tilde labels is
tracked online by estimate, and at release time a single threshold tied
to the oracle's error envelope suppresses every label whose tracked
presence could depend on one stream update.  A label is released only
when both its stored tracking estimate and a fresh release-time query
clear the threshold.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Iterable, KeysView, Optional, Protocol

from .mechanisms import ReleaseReport
from .sketches import ErrorEnvelope


class EnvelopeError(ValueError):
    """The supplied error envelope is not monotone (or not ordered)."""


class FrequencyOracle(Protocol):
    kind: str

    def update(self, label: int) -> float: ...

    def query(self, label: int) -> float: ...


class ExactOracle:
    """Exact hash-count oracle; the zero envelope is valid for it."""

    kind = "exact"

    def __init__(self) -> None:
        self.counts: dict[int, int] = {}

    def update(self, label: int) -> float:
        value = self.counts.get(label, 0) + 1
        self.counts[label] = value
        return float(value)

    def query(self, label: int) -> float:
        return float(self.counts.get(label, 0))


@dataclass
class TrackedCandidates:
    """Top-k_tilde candidate labels with their latest oracle estimates."""

    estimates: dict[int, float]
    refreshed: dict[int, int]
    capacity: int
    processed: int

    @property
    def tracked(self) -> KeysView[int]:
        return self.estimates.keys()


_MECHANISM_TAGS = {"count-min": "eehh-cms", "count-sketch": "eehh-cs"}


def topk_track(oracle: FrequencyOracle, stream: Iterable[int], k_tilde: int) -> TrackedCandidates:
    """One-pass candidate tracking over the oracle's running estimates.

    Tracked arrivals refresh their stored estimate; new labels fill free
    slots, and once full they evict the minimum-estimate candidate only
    when the arrival's estimate strictly exceeds it.  Ties on the
    minimum break toward the oldest last-refresh, so the pass is
    deterministic for a deterministic oracle.
    """
    if k_tilde < 1:
        raise ValueError(f"k_tilde must be >= 1, got {k_tilde}")
    estimates: dict[int, float] = {}
    refreshed: dict[int, int] = {}
    heap: list[tuple[float, int, int]] = []  # (estimate, refresh position, label); stale entries skipped
    position = 0
    for label in stream:
        position += 1
        estimate = oracle.update(label)
        if label in estimates:
            estimates[label] = estimate
            refreshed[label] = position
            heapq.heappush(heap, (estimate, position, label))
        elif len(estimates) < k_tilde:
            estimates[label] = estimate
            refreshed[label] = position
            heapq.heappush(heap, (estimate, position, label))
        else:
            while True:
                low_est, low_pos, low_label = heap[0]
                if refreshed.get(low_label) == low_pos and estimates[low_label] == low_est:
                    break
                heapq.heappop(heap)
            if estimate > low_est:
                heapq.heappop(heap)
                del estimates[low_label]
                del refreshed[low_label]
                estimates[label] = estimate
                refreshed[label] = position
                heapq.heappush(heap, (estimate, position, label))
    return TrackedCandidates(estimates, refreshed, k_tilde, position)


def eehh_threshold(stream_length: int, k: int, k_tilde: int, envelope: ErrorEnvelope) -> float:
    return max(
        stream_length / k,
        stream_length / k_tilde + envelope.gamma1(stream_length) + envelope.gamma2(stream_length),
    )


def eehh_release_from_candidates(
    oracle: FrequencyOracle,
    candidates: TrackedCandidates,
    k: int,
    k_tilde: int,
    envelope: ErrorEnvelope,
    mechanism: Optional[str] = None,
) -> ReleaseReport:
    """Release stage over an already-tracked candidate set.

    A label is released only when both its stored tracking estimate and
    a fresh oracle query exceed the envelope threshold.
    """
    horizon = candidates.processed
    if not envelope.is_monotone(horizon):
        raise EnvelopeError("error envelope must be non-decreasing with gamma1 >= gamma2")
    threshold = eehh_threshold(horizon, k, k_tilde, envelope)
    released = {}
    for label, estimate in candidates.estimates.items():
        if estimate > threshold:
            fresh = oracle.query(label)
            if fresh > threshold:
                released[label] = float(fresh)
    if mechanism is None:
        kind = getattr(oracle, "kind", "oracle")
        mechanism = _MECHANISM_TAGS.get(kind, f"eehh-{kind}")
    return ReleaseReport(released, threshold, horizon, mechanism)


def eehh_release(
    oracle: FrequencyOracle,
    stream: Iterable[int],
    k: int,
    k_tilde: int,
    envelope: ErrorEnvelope,
    delta: float = 0.001,
    mechanism: Optional[str] = None,
) -> ReleaseReport:
    """Envelope-thresholded heavy-hitter release over a frequency oracle.

    Tracks top candidates, then releases label x only when both the
    stored estimate and a fresh oracle query exceed
    max(T/k, T/k_tilde + gamma1(T) + gamma2(T)).
    """
    if k < 1 or k_tilde <= k:
        raise ValueError(f"need k_tilde > k >= 1, got k={k} k_tilde={k_tilde}")
    if not 0 < delta < 1:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    candidates = topk_track(oracle, stream, k_tilde)
    return eehh_release_from_candidates(oracle, candidates, k, k_tilde, envelope, mechanism)
