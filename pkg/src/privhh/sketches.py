"""Count-Min and Count sketches with up-front privacy noise and error envelopes.

Each sketch hashes 64-bit labels into a depth x width counter grid with
seeded pairwise-independent rows ((a*x + b) mod (2^61 - 1)) mod width.
The row and sign coefficient streams are derived from one master seed
via numpy's splittable SeedSequence, so a sketch is reproducible from
(kind, depth, width, seed) alone.

Privacy noise is injected once, before any update: every cell receives
independent Laplace(2*depth/epsilon), covering the between-neighbours
cell sensitivity of 2*depth.  All later queries, mid-stream or at
release, are then post-processing of a single epsilon-DP object.
Noised queries may come back negative; callers clamp for display.

An ErrorEnvelope packages monotone bounds gamma1(t) >= est - true >=
gamma2(t) with a per-query failure probability; the release wrapper
turns it into a suppression threshold.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .noise import NoiseSource

_PRIME = (1 << 61) - 1
_MAGIC = b"SKCH"
_HEADER = struct.Struct("<4sBBIIQBd")
_KIND_CODES = {"count-min": 0, "count-sketch": 1}


class SketchStateError(RuntimeError):
    """Raised on invalid sketch state transitions (e.g. double noising)."""


def _hash_coeffs(rng: np.random.Generator, depth: int) -> tuple[list[int], list[int]]:
    a = [int(v) for v in rng.integers(1, _PRIME, size=depth)]
    b = [int(v) for v in rng.integers(0, _PRIME, size=depth)]
    return a, b


class _SketchBase:
    kind = ""

    def __init__(self, depth: int, width: int, seed: int) -> None:
        if depth < 1 or width < 1:
            raise ValueError(f"depth and width must be >= 1, got {depth}x{width}")
        self.depth = depth
        self.width = width
        self.seed = seed
        self.cells = np.zeros((depth, width))
        self.noised = False
        self.noise_scale = 0.0
        bucket_seq, sign_seq = np.random.SeedSequence(seed).spawn(2)
        self._row_a, self._row_b = _hash_coeffs(
            np.random.Generator(np.random.PCG64(bucket_seq)), depth
        )
        self._sign_seq = sign_seq

    def _bucket(self, row: int, label: int) -> int:
        return ((self._row_a[row] * label + self._row_b[row]) % _PRIME) % self.width

    def row_sums(self) -> np.ndarray:
        return self.cells.sum(axis=1)

    def memory_bytes(self) -> int:
        # 8-byte cells plus two 8-byte hash coefficients per row.
        per_row_coeffs = 2 if self.kind == "count-min" else 4
        return self.depth * self.width * 8 + self.depth * per_row_coeffs * 8


class CountMinSketch(_SketchBase):
    """Point-increment sketch; queries take the minimum over rows."""

    kind = "count-min"

    def update(self, label: int) -> float:
        """Add one occurrence and return the post-update estimate."""
        cells = self.cells
        est = math.inf
        for row in range(self.depth):
            j = self._bucket(row, label)
            value = cells[row, j] + 1.0
            cells[row, j] = value
            if value < est:
                est = value
        return est

    def extend(self, labels) -> None:
        """Bulk-insert an iterable of labels (order-independent result)."""
        labels = [int(x) for x in labels]
        for row in range(self.depth):
            a, b, w = self._row_a[row], self._row_b[row], self.width
            idx = np.fromiter(
                ((a * x + b) % _PRIME % w for x in labels), dtype=np.int64, count=len(labels)
            )
            np.add.at(self.cells[row], idx, 1.0)

    def query(self, label: int) -> float:
        cells = self.cells
        return min(cells[row, self._bucket(row, label)] for row in range(self.depth))


class CountSketch(_SketchBase):
    """Signed-increment sketch; queries take the median over rows.

    Odd depths give an unambiguous median; even depths average the two
    middle row estimates.
    """

    kind = "count-sketch"

    def __init__(self, depth: int, width: int, seed: int) -> None:
        super().__init__(depth, width, seed)
        self._sign_a, self._sign_b = _hash_coeffs(
            np.random.Generator(np.random.PCG64(self._sign_seq)), depth
        )

    def _sign(self, row: int, label: int) -> float:
        bit = ((self._sign_a[row] * label + self._sign_b[row]) % _PRIME) & 1
        return 1.0 - 2.0 * bit

    def _row_estimates(self, label: int) -> list[float]:
        cells = self.cells
        return [
            self._sign(row, label) * cells[row, self._bucket(row, label)]
            for row in range(self.depth)
        ]

    def update(self, label: int) -> float:
        cells = self.cells
        estimates = []
        for row in range(self.depth):
            j = self._bucket(row, label)
            sign = self._sign(row, label)
            cells[row, j] += sign
            estimates.append(sign * cells[row, j])
        return _median(estimates)

    def extend(self, labels) -> None:
        labels = [int(x) for x in labels]
        for row in range(self.depth):
            a, b, w = self._row_a[row], self._row_b[row], self.width
            sa, sb = self._sign_a[row], self._sign_b[row]
            idx = np.fromiter(
                ((a * x + b) % _PRIME % w for x in labels), dtype=np.int64, count=len(labels)
            )
            signs = np.fromiter(
                (1.0 - 2.0 * ((sa * x + sb) % _PRIME & 1) for x in labels),
                dtype=np.float64,
                count=len(labels),
            )
            np.add.at(self.cells[row], idx, signs)

    def query(self, label: int) -> float:
        return _median(self._row_estimates(label))


def _median(values: list[float]) -> float:
    ordered = sorted(values)
    n = len(ordered)
    mid = n // 2
    if n % 2:
        return ordered[mid]
    return 0.5 * (ordered[mid - 1] + ordered[mid])


def privatize_sketch(sketch: _SketchBase, epsilon: float, noise: NoiseSource) -> _SketchBase:
    """Add Laplace(2*depth/epsilon) to every cell, in place; one-shot only."""
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    if sketch.noised:
        raise SketchStateError("sketch already carries privacy noise")
    scale = 2.0 * sketch.depth / epsilon
    sketch.cells += noise.laplace(scale, size=sketch.cells.shape)
    sketch.noised = True
    sketch.noise_scale = scale
    return sketch


def f2_estimate(sketch: _SketchBase) -> float:
    """Estimate sum_y f_y^2 as the median over rows of the row's sum of squares.

    Noised sketches are corrected by the expected per-row noise mass
    width * 2 * scale^2 (clamped at zero).
    """
    if sketch.kind != "count-sketch":
        raise ValueError(f"F2 estimation needs a count-sketch, got {sketch.kind!r}")
    rows = (sketch.cells**2).sum(axis=1)
    if sketch.noised:
        rows = np.maximum(rows - sketch.width * 2.0 * sketch.noise_scale**2, 0.0)
    return float(np.median(rows))


def sketch_to_bytes(sketch: _SketchBase) -> bytes:
    """Versioned little-endian blob: header then row-major 64-bit cells."""
    header = _HEADER.pack(
        _MAGIC,
        1,
        _KIND_CODES[sketch.kind],
        sketch.depth,
        sketch.width,
        sketch.seed,
        int(sketch.noised),
        sketch.noise_scale,
    )
    return header + sketch.cells.astype("<f8").tobytes()


def sketch_from_bytes(blob: bytes) -> _SketchBase:
    if len(blob) < _HEADER.size:
        raise ValueError("truncated sketch blob")
    magic, version, kind_code, depth, width, seed, noised, noise_scale = _HEADER.unpack_from(blob)
    if magic != _MAGIC or version != 1:
        raise ValueError("not a version-1 sketch blob")
    expected = _HEADER.size + depth * width * 8
    if len(blob) != expected:
        raise ValueError(f"sketch blob length {len(blob)} != expected {expected}")
    cls = CountMinSketch if kind_code == 0 else CountSketch
    sketch = cls(depth, width, seed)
    sketch.cells = np.frombuffer(blob, dtype="<f8", offset=_HEADER.size).reshape(
        depth, width
    ).copy()
    sketch.noised = bool(noised)
    sketch.noise_scale = noise_scale
    return sketch


@dataclass
class ErrorEnvelope:
    """Monotone bounds gamma1(t) >= estimate - truth >= gamma2(t).

    Both bounds must be non-decreasing in t and hold per query with
    probability at least 1 - failure_prob_per_query.
    """

    gamma1: Callable[[float], float]
    gamma2: Callable[[float], float]
    failure_prob_per_query: float

    def is_monotone(self, horizon: float, points: int = 100) -> bool:
        ts = np.linspace(0.0, max(horizon, 1.0), points + 1)
        g1 = [self.gamma1(t) for t in ts]
        g2 = [self.gamma2(t) for t in ts]
        slack = 1e-9
        nondecreasing = all(b >= a - slack for a, b in zip(g1, g1[1:])) and all(
            b >= a - slack for a, b in zip(g2, g2[1:])
        )
        ordered = all(hi >= lo for hi, lo in zip(g1, g2))
        return nondecreasing and ordered


def exact_envelope() -> ErrorEnvelope:
    """Zero-error envelope for exact oracles."""
    return ErrorEnvelope(lambda t: 0.0, lambda t: 0.0, 0.0)


def noise_tail_bound(depth: int, capacity: int, epsilon: float, delta: float) -> float:
    """Margin psi = (2d/eps) * ln(4*capacity*d/delta).

    A Laplace(2d/eps) draw exceeds psi in magnitude with probability
    delta/(4*capacity*d); a union bound over all 2*capacity*d cells of a
    width-2*capacity sketch keeps every cell within +-psi w.p. 1 - delta/2.
    """
    return (2.0 * depth / epsilon) * math.log(4.0 * capacity * depth / delta)


def envelope_depth(stream_length: int, delta: float) -> int:
    """Depth ceil(ln(2T/delta)) used by the envelope constructions."""
    if stream_length < 1:
        raise ValueError("stream_length must be >= 1")
    return max(1, math.ceil(math.log(2.0 * stream_length / delta)))


def cms_envelope(capacity: int, stream_length: int, epsilon: float, delta: float) -> ErrorEnvelope:
    """Envelope for a width-2*capacity, noised Count-Min sketch.

    Collisions inflate estimates by at most t/capacity and noise stays
    within +-psi, giving gamma1(t) = t/capacity + psi, gamma2(t) = -psi.
    """
    if capacity < 1 or epsilon <= 0 or not 0 < delta < 1:
        raise ValueError("need capacity >= 1, epsilon > 0, delta in (0, 1)")
    depth = envelope_depth(stream_length, delta)
    psi = noise_tail_bound(depth, capacity, epsilon, delta)
    return ErrorEnvelope(
        gamma1=lambda t: t / capacity + psi,
        gamma2=lambda t: -psi,
        failure_prob_per_query=delta / (2.0 * stream_length),
    )


def cs_envelope(
    capacity: int,
    stream_length: int,
    epsilon: float,
    delta: float,
    sketch: CountSketch,
) -> ErrorEnvelope:
    """Envelope for a noised Count sketch, reading its running F2 bound.

    The deviation term sqrt(3 * F2 / width) is evaluated lazily against
    the sketch's current state, using the largest row estimate doubled as
    a conservative F2 upper bound (the max over rows already sits above
    the true F2 with high probability; doubling covers estimator spread).
    """
    if capacity < 1 or epsilon <= 0 or not 0 < delta < 1:
        raise ValueError("need capacity >= 1, epsilon > 0, delta in (0, 1)")
    if sketch.kind != "count-sketch":
        raise ValueError(f"cs_envelope needs a count-sketch, got {sketch.kind!r}")
    depth = envelope_depth(stream_length, delta)
    psi = noise_tail_bound(depth, capacity, epsilon, delta)

    def deviation() -> float:
        rows = (sketch.cells**2).sum(axis=1)
        if sketch.noised:
            rows = np.maximum(rows - sketch.width * 2.0 * sketch.noise_scale**2, 0.0)
        f2_bound = 2.0 * float(rows.max())
        return math.sqrt(3.0 * f2_bound / sketch.width)

    return ErrorEnvelope(
        gamma1=lambda t: deviation() + psi,
        gamma2=lambda t: -deviation() - psi,
        failure_prob_per_query=delta / (2.0 * stream_length),
    )


def build_cms_oracle(
    k_tilde: int,
    stream_length: int,
    epsilon: float,
    delta: float,
    seed: int,
    noise: NoiseSource,
) -> tuple[CountMinSketch, ErrorEnvelope]:
    """Noised Count-Min oracle (width 2*k_tilde) with its matching envelope."""
    depth = envelope_depth(stream_length, delta)
    sketch = CountMinSketch(depth, 2 * k_tilde, seed)
    privatize_sketch(sketch, epsilon, noise)
    return sketch, cms_envelope(k_tilde, stream_length, epsilon, delta)


def build_cs_oracle(
    k_tilde: int,
    stream_length: int,
    epsilon: float,
    delta: float,
    seed: int,
    noise: NoiseSource,
) -> tuple[CountSketch, ErrorEnvelope]:
    """Noised Count sketch oracle (width 2*k_tilde) with its matching envelope."""
    depth = envelope_depth(stream_length, delta)
    sketch = CountSketch(depth, 2 * k_tilde, seed)
    privatize_sketch(sketch, epsilon, noise)
    return sketch, cs_envelope(k_tilde, stream_length, epsilon, delta, sketch)
