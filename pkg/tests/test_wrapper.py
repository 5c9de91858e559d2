"""Candidate tracking and envelope-thresholded release."""

import math
from collections import Counter

import numpy as np
import pytest

from privhh.sketches import ErrorEnvelope, exact_envelope
from privhh.wrapper import (
    EnvelopeError,
    ExactOracle,
    eehh_release,
    eehh_threshold,
    topk_track,
)


class BoundedErrorOracle:
    """Exact counts plus a per-label perturbation inside [lo, hi].

    The perturbation is a deterministic hash of (label, seed), so every
    estimate this oracle ever returns respects the constant envelope
    gamma1 = hi, gamma2 = lo at every arrival time.
    """

    kind = "mock"

    def __init__(self, lo: float, hi: float, seed: int) -> None:
        self.lo, self.hi, self.seed = lo, hi, seed
        self.counts: dict[int, int] = {}

    def _shift(self, label: int) -> float:
        u = (hash((label, self.seed)) % 10_000) / 9_999.0
        return self.lo + (self.hi - self.lo) * u

    def update(self, label: int) -> float:
        self.counts[label] = self.counts.get(label, 0) + 1
        return self.counts[label] + self._shift(label)

    def query(self, label: int) -> float:
        return self.counts.get(label, 0) + self._shift(label)

    def envelope(self) -> ErrorEnvelope:
        return ErrorEnvelope(lambda t: self.hi, lambda t: self.lo, 0.0)


class TestTopkTrack:
    def test_empty_stream(self):
        candidates = topk_track(ExactOracle(), [], 4)
        assert dict(candidates.estimates) == {} and candidates.processed == 0

    def test_no_eviction_on_tie(self):
        # the newcomer's estimate must strictly exceed the tracked minimum
        candidates = topk_track(ExactOracle(), [1, 1, 2, 3], 2)
        assert candidates.estimates == {1: 2.0, 2: 1.0}

    def test_eviction_prefers_oldest_refresh(self):
        # labels 1 and 2 tie at estimate 1; label 1 was refreshed first
        candidates = topk_track(ExactOracle(), [1, 2, 3, 3], 2)
        assert candidates.estimates == {2: 1.0, 3: 2.0}

    def test_capacity_respected(self):
        rng = np.random.Generator(np.random.PCG64(0))
        stream = rng.integers(0, 100, size=3000).tolist()
        candidates = topk_track(ExactOracle(), stream, 7)
        assert len(candidates.estimates) <= 7

    def test_invalid_capacity(self):
        with pytest.raises(ValueError):
            topk_track(ExactOracle(), [1], 0)

    def test_tracked_estimates_final_with_exact_oracle(self):
        # after a label's last arrival its exact count never changes, so the
        # stored estimate equals the final frequency
        rng = np.random.Generator(np.random.PCG64(1))
        stream = rng.integers(0, 30, size=800).tolist()
        truth = Counter(stream)
        candidates = topk_track(ExactOracle(), stream, 8)
        for label, estimate in candidates.estimates.items():
            assert estimate == truth[label]


class TestEehhRelease:
    def test_empty_stream(self):
        report = eehh_release(ExactOracle(), [], 2, 4, exact_envelope())
        assert report.released == {}

    def test_exact_oracle_hand_example(self):
        stream = [1] * 60 + [2] * 30 + [3] * 10
        report = eehh_release(ExactOracle(), stream, 4, 8, exact_envelope())
        assert report.threshold == pytest.approx(25.0)
        assert report.released == {1: 60.0, 2: 30.0}

    def test_matches_brute_force_with_exact_oracle(self):
        rng = np.random.Generator(np.random.PCG64(21))
        for _ in range(150):
            length = int(rng.integers(20, 500))
            universe = int(rng.integers(5, 60))
            k = int(rng.integers(2, 7))
            stream = rng.integers(0, universe, size=length).tolist()
            oracle = ExactOracle()
            candidates = topk_track(oracle, stream, 2 * k)
            report = eehh_release(ExactOracle(), stream, k, 2 * k, exact_envelope())
            threshold = eehh_threshold(length, k, 2 * k, exact_envelope())
            truth = Counter(stream)
            expected = {
                y: float(truth[y])
                for y in candidates.estimates
                if truth[y] > threshold
            }
            assert report.released == expected

    def test_released_values_clear_threshold(self):
        rng = np.random.Generator(np.random.PCG64(3))
        stream = rng.integers(0, 40, size=600).tolist()
        oracle = BoundedErrorOracle(-3.0, 5.0, seed=9)
        report = eehh_release(oracle, stream, 3, 6, oracle.envelope())
        assert all(value > report.threshold for value in report.released.values())

    def test_non_monotone_envelope_rejected(self):
        bad = ErrorEnvelope(lambda t: -t, lambda t: -2 * t, 0.0)
        with pytest.raises(EnvelopeError):
            eehh_release(ExactOracle(), [1, 2, 3], 2, 4, bad)

    def test_parameter_validation(self):
        with pytest.raises(ValueError):
            eehh_release(ExactOracle(), [1], 4, 4, exact_envelope())
        with pytest.raises(ValueError):
            eehh_release(ExactOracle(), [1], 2, 4, exact_envelope(), delta=2.0)

    def test_mechanism_tag_from_oracle(self):
        report = eehh_release(ExactOracle(), [1, 1, 1], 2, 4, exact_envelope())
        assert report.mechanism == "eehh-exact"


def _neighbor_pair_streams(rng, length, heavy, k_tilde):
    """A stream whose one-update neighbour must track different labels.

    The body keeps `heavy` labels safely tracked; the tail appends fresh
    singletons that contend for the remaining slots, and the dropped
    update is one of those singletons, so the two runs fill the last
    slots differently.
    """
    planted = k_tilde - heavy + 1
    body = (rng.integers(0, heavy, size=length - planted)).tolist()
    tail = [1000 + i for i in range(planted)]
    stream = body + tail
    drop = len(stream) - 2  # the next-to-last planted singleton
    return stream, stream[:drop] + stream[drop + 1 :]


class TestSuppressionOfUnstableLabels:
    def test_symmetric_difference_never_released(self):
        # labels tracked in one run but not its neighbour stay below the
        # threshold in both runs whenever the envelope holds
        rng = np.random.Generator(np.random.PCG64(77))
        k, k_tilde = 3, 6
        checked = 0
        for trial in range(400):
            stream, neighbor = _neighbor_pair_streams(rng, 120, heavy=4, k_tilde=k_tilde)
            lo, hi = -4.0, 6.0
            oracle_a = BoundedErrorOracle(lo, hi, seed=trial)
            oracle_b = BoundedErrorOracle(lo, hi, seed=trial)
            cand_a = topk_track(oracle_a, stream, k_tilde)
            cand_b = topk_track(oracle_b, neighbor, k_tilde)
            unstable = set(cand_a.estimates) ^ set(cand_b.estimates)
            if not unstable:
                continue
            checked += 1
            report_a = eehh_release(
                BoundedErrorOracle(lo, hi, seed=trial), stream, k, k_tilde,
                oracle_a.envelope(),
            )
            report_b = eehh_release(
                BoundedErrorOracle(lo, hi, seed=trial), neighbor, k, k_tilde,
                oracle_b.envelope(),
            )
            assert not (set(report_a.released) & unstable)
            assert not (set(report_b.released) & unstable)
        assert checked >= 150

    def test_unstable_labels_sit_below_threshold(self):
        # the bound behind the suppression rule: an unstable label's true
        # final frequency is at most T/k_tilde + gamma1(T) - gamma2(T) + 1,
        # which the max(T/k, ...) threshold covers in this regime
        rng = np.random.Generator(np.random.PCG64(177))
        k, k_tilde = 3, 6
        for trial in range(300):
            stream, neighbor = _neighbor_pair_streams(rng, 150, heavy=4, k_tilde=k_tilde)
            lo, hi = -2.0, 2.0
            oracle_a = BoundedErrorOracle(lo, hi, seed=trial)
            oracle_b = BoundedErrorOracle(lo, hi, seed=trial)
            cand_a = topk_track(oracle_a, stream, k_tilde)
            cand_b = topk_track(oracle_b, neighbor, k_tilde)
            truth = Counter(stream)
            total = len(stream)
            threshold = max(total / k, total / k_tilde + hi + lo)
            for label in set(cand_a.estimates) ^ set(cand_b.estimates):
                assert truth[label] <= total / k_tilde + hi - lo + 1
                assert truth[label] <= threshold
