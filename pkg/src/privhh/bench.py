"""Experiment driver: stream sources, exact baseline, metrics, CSV emission.

Each configuration is repeated with fresh per-run seeds; one CSV row is
written per repeat plus mean / 5th / 95th percentile summary rows.  The
update loop alone is timed (after a short warm-up pass on a scratch
structure), and memory is accounted analytically from the structure
parameters so the numbers are portable across interpreters.
"""

from __future__ import annotations

import csv
import io
import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Iterable, Iterator, Optional, Union

import numpy as np

from .mechanisms import (
    PrivacyParams,
    ReleaseReport,
    dpmg_release_from_summary,
    dpss_release_from_summary,
)
from .noise import NoiseSource
from .sketches import build_cms_oracle, build_cs_oracle
from .summaries import MisraGries, SpaceSaving
from .wrapper import eehh_release_from_candidates, topk_track

ALGORITHMS = ("mg", "ss", "dpss", "dpmg", "eehh-cms", "eehh-cs", "exact")

CSV_COLUMNS = (
    "algo,k,ktilde,eps,delta,skew,length,run,recall,precision,are,"
    "update_ns,bytes,released_count"
).split(",")

CSV_NOTE = (
    "# are: mean |released - true| / true over released true positives; "
    "false positives carry no relative error and are excluded"
)

_WARMUP_UPDATES = 10_000


class StreamParseError(ValueError):
    """Malformed input stream file; carries the byte offset of the defect."""

    def __init__(self, message: str, byte_offset: int) -> None:
        super().__init__(f"{message} (byte offset {byte_offset})")
        self.byte_offset = byte_offset


@dataclass(frozen=True)
class ZipfSource:
    skew: float
    length: int
    universe: int


@dataclass(frozen=True)
class FileSource:
    path: str
    format: str  # tokens | u64le


@dataclass(frozen=True)
class ExperimentConfig:
    algo: str
    k: int
    source: Union[ZipfSource, FileSource]
    k_tilde_factor: int = 2
    epsilon: float = 1.0
    delta: float = 0.001
    seed: int = 0
    repeats: int = 20

    def __post_init__(self) -> None:
        if self.algo not in ALGORITHMS:
            raise ValueError(f"unknown algo {self.algo!r}; pick one of {ALGORITHMS}")
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if self.k_tilde_factor < 2:
            raise ValueError(f"k_tilde_factor must be >= 2, got {self.k_tilde_factor}")
        if self.repeats < 1:
            raise ValueError(f"repeats must be >= 1, got {self.repeats}")
        if isinstance(self.source, ZipfSource) and not 1.0 <= self.source.skew <= 4.0:
            raise ValueError(f"skew must lie in [1.0, 4.0], got {self.source.skew}")

    @property
    def k_tilde(self) -> int:
        return self.k * self.k_tilde_factor


def generate_zipf(length: int, universe: int, skew: float, seed: int) -> np.ndarray:
    """I.i.d. ranks in [1, universe] with Pr[r] proportional to r**-skew."""
    if universe < 1:
        raise ValueError(f"universe must be >= 1, got {universe}")
    if length < 0:
        raise ValueError(f"length must be >= 0, got {length}")
    ranks = np.arange(1, universe + 1, dtype=np.float64)
    cdf = np.cumsum(ranks ** -skew)
    cdf /= cdf[-1]
    rng = np.random.Generator(np.random.PCG64(seed))
    return (np.searchsorted(cdf, rng.random(length), side="right") + 1).astype(np.int64)


def ingest(path: str, format: str) -> Iterator[int]:
    """Stream 64-bit tokens from a file without materializing it.

    tokens: one decimal label per line.  u64le: packed little-endian
    8-byte records.  Malformed input raises StreamParseError with the
    byte offset of the offending line or record.
    """
    if format == "tokens":
        yield from _ingest_tokens(path)
    elif format == "u64le":
        yield from _ingest_u64le(path)
    else:
        raise ValueError(f"unknown format {format!r}; expected tokens or u64le")


def _ingest_tokens(path: str) -> Iterator[int]:
    offset = 0
    with open(path, "rb") as handle:
        for line in handle:
            text = line.strip()
            if not text.isdigit():
                raise StreamParseError(f"bad token line {text[:40]!r}", offset)
            yield int(text)
            offset += len(line)


def _ingest_u64le(path: str) -> Iterator[int]:
    offset = 0
    with open(path, "rb") as handle:
        while True:
            block = handle.read(8 << 16)
            if not block:
                return
            full, leftover = divmod(len(block), 8)
            if leftover:
                raise StreamParseError("truncated 8-byte record", offset + full * 8)
            yield from (int(v) for v in np.frombuffer(block, dtype="<u8"))
            offset += len(block)


def write_u64le(path: str, labels: Iterable[int]) -> None:
    with open(path, "wb") as handle:
        handle.write(np.asarray(list(labels), dtype="<u8").tobytes())


def exact_heavy_hitters(stream, k: int) -> tuple[set[int], dict[int, int]]:
    """Exact frequencies plus the labels strictly above T/k."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if isinstance(stream, np.ndarray):
        values, counts = np.unique(stream, return_counts=True)
        truth = {int(v): int(c) for v, c in zip(values, counts)}
    else:
        truth = dict(Counter(stream))
    total = sum(truth.values())
    bar = total / k
    return {y for y, f in truth.items() if f > bar}, truth


def compute_metrics(report: ReleaseReport, exact: set[int], truth: dict[int, int]) -> dict:
    """Recall/precision against the exact heavy hitters, plus relative error.

    Empty reference sets score 1.0 by convention; ARE averages
    |noisy - true| / true over released true positives only.
    """
    released = set(report.released)
    hits = released & exact
    recall = 1.0 if not exact else len(hits) / len(exact)
    precision = 1.0 if not released else len(hits) / len(released)
    if hits:
        are = sum(abs(report.released[y] - truth[y]) / truth[y] for y in hits) / len(hits)
    else:
        are = 0.0
    return {
        "recall": recall,
        "precision": precision,
        "are": are,
        "released_count": len(released),
    }


def structure_bytes(algo: str, k_tilde: int, sketch=None, distinct: int = 0) -> int:
    """Analytic resident size: entries x entry width, cells x 8 bytes."""
    if algo in ("mg", "dpmg"):
        return 16 * k_tilde  # label + counter
    if algo in ("ss", "dpss"):
        return 24 * k_tilde  # label + counter + recency
    if algo in ("eehh-cms", "eehh-cs"):
        return sketch.memory_bytes() + 24 * k_tilde  # grid + candidate tracker
    if algo == "exact":
        return 16 * distinct
    raise ValueError(f"unknown algo {algo!r}")


def _materialize(config: ExperimentConfig, run_index: int) -> list[int]:
    source = config.source
    if isinstance(source, ZipfSource):
        return generate_zipf(
            source.length, source.universe, source.skew, config.seed + run_index
        ).tolist()
    return list(ingest(source.path, source.format))


def _timed_pass(structure_update, labels: list[int]) -> int:
    start = time.perf_counter_ns()
    for label in labels:
        structure_update(label)
    return time.perf_counter_ns() - start


def run_single(config: ExperimentConfig, run_index: int) -> dict:
    """One repeat: build, timed update pass, release, metrics."""
    labels = _materialize(config, run_index)
    total = len(labels)
    exact, truth = exact_heavy_hitters(labels, config.k)
    noise = NoiseSource(config.seed + run_index + (1 << 32))
    sketch_seed = config.seed + run_index + (1 << 33)
    warmup = labels[:_WARMUP_UPDATES] or [0]
    k, k_tilde = config.k, config.k_tilde
    algo = config.algo
    sketch = None
    distinct = len(truth)

    if algo in ("ss", "dpss"):
        scratch = SpaceSaving(k_tilde)
        for label in warmup:
            scratch.update(label)
        structure = SpaceSaving(k_tilde)
        elapsed = _timed_pass(structure.update, labels)
        summary = structure.summary()
        if algo == "ss":
            report = _plain_release(summary.counts, total, k, "ss")
        else:
            params = PrivacyParams(config.epsilon, config.delta, k, k_tilde)
            report = dpss_release_from_summary(summary, params, noise)
    elif algo in ("mg", "dpmg"):
        scratch = MisraGries(k_tilde)
        for label in warmup:
            scratch.update(label)
        structure = MisraGries(k_tilde)
        elapsed = _timed_pass(structure.update, labels)
        summary = structure.summary()
        if algo == "mg":
            report = _plain_release(summary.counts, total, k, "mg")
        else:
            params = PrivacyParams(config.epsilon, config.delta, k, k_tilde)
            report = dpmg_release_from_summary(summary, params, noise)
    elif algo in ("eehh-cms", "eehh-cs"):
        build = build_cms_oracle if algo == "eehh-cms" else build_cs_oracle
        scratch_oracle, _ = build(
            k_tilde, max(total, 1), config.epsilon, config.delta, sketch_seed + 1, noise
        )
        topk_track(scratch_oracle, warmup, k_tilde)
        sketch, envelope = build(
            k_tilde, max(total, 1), config.epsilon, config.delta, sketch_seed, noise
        )
        start = time.perf_counter_ns()
        candidates = topk_track(sketch, labels, k_tilde)
        elapsed = time.perf_counter_ns() - start
        report = eehh_release_from_candidates(sketch, candidates, k, k_tilde, envelope)
    elif algo == "exact":
        scratch_counts: dict[int, int] = {}
        for label in warmup:
            scratch_counts[label] = scratch_counts.get(label, 0) + 1
        counts: dict[int, int] = {}

        def count_update(label: int) -> None:
            counts[label] = counts.get(label, 0) + 1

        elapsed = _timed_pass(count_update, labels)
        report = _plain_release(counts, total, k, "exact")
    else:  # pragma: no cover - config validation rejects this earlier
        raise ValueError(f"unknown algo {algo!r}")

    metrics = compute_metrics(report, exact, truth)
    source = config.source
    return {
        "algo": algo,
        "k": k,
        "ktilde": k_tilde,
        "eps": config.epsilon,
        "delta": config.delta,
        "skew": source.skew if isinstance(source, ZipfSource) else "",
        "length": total,
        "run": run_index,
        "recall": metrics["recall"],
        "precision": metrics["precision"],
        "are": metrics["are"],
        "update_ns": elapsed / max(total, 1),
        "bytes": structure_bytes(algo, k_tilde, sketch=sketch, distinct=distinct),
        "released_count": metrics["released_count"],
    }


def _plain_release(counts: dict[int, int], total: int, k: int, mechanism: str) -> ReleaseReport:
    bar = total / k
    released = {y: float(c) for y, c in counts.items() if c > bar}
    return ReleaseReport(released, bar, total, mechanism)


_SUMMARY_METRICS = ("recall", "precision", "are", "update_ns", "bytes", "released_count")


def summarize(rows: list[dict]) -> list[dict]:
    """Mean / 5th / 95th percentile rows over the repeat rows."""
    out = []
    for tag, reducer in (
        ("mean", np.mean),
        ("p05", lambda v: np.percentile(v, 5)),
        ("p95", lambda v: np.percentile(v, 95)),
    ):
        row = dict(rows[0])
        row["run"] = tag
        for metric in _SUMMARY_METRICS:
            row[metric] = float(reducer([r[metric] for r in rows]))
        out.append(row)
    return out


def _format_value(value) -> str:
    if isinstance(value, float):
        return f"{value:.10g}"
    return str(value)


def rows_to_csv(rows: list[dict]) -> str:
    buffer = io.StringIO()
    buffer.write(CSV_NOTE + "\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow([_format_value(row[col]) for col in CSV_COLUMNS])
    return buffer.getvalue()


def run_experiment(
    config: ExperimentConfig,
    out_path: Optional[str] = None,
    workers: int = 1,
    timing_strict: bool = False,
) -> list[dict]:
    """All repeats of one configuration; returns repeat rows plus summaries.

    Repeats may run on a process pool; --timing-strict pins them to
    sequential execution so update timings never share a core.
    """
    indices = list(range(config.repeats))
    if workers > 1 and not timing_strict:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(run_single, [config] * len(indices), indices))
    else:
        rows = [run_single(config, r) for r in indices]
    rows.extend(summarize(rows[: config.repeats]))
    if out_path is not None:
        with open(out_path, "w", encoding="utf8") as handle:
            handle.write(rows_to_csv(rows))
    return rows


_SWEEP_PARAMS = ("k", "skew", "eps", "ktilde")


def sweep(
    config: ExperimentConfig,
    param: str,
    values: list,
    out_path: Optional[str] = None,
    workers: int = 1,
    timing_strict: bool = False,
) -> list[dict]:
    """Run the base configuration once per parameter value; one combined CSV."""
    if param not in _SWEEP_PARAMS:
        raise ValueError(f"sweep param must be one of {_SWEEP_PARAMS}, got {param!r}")
    rows: list[dict] = []
    for value in values:
        if param == "k":
            varied = replace(config, k=int(value))
        elif param == "eps":
            varied = replace(config, epsilon=float(value))
        elif param == "ktilde":
            varied = replace(config, k_tilde_factor=int(value))
        else:
            if not isinstance(config.source, ZipfSource):
                raise ValueError("skew sweeps need a zipf source")
            varied = replace(config, source=replace(config.source, skew=float(value)))
        rows.extend(run_experiment(varied, None, workers, timing_strict))
    if out_path is not None:
        with open(out_path, "w", encoding="utf8") as handle:
            handle.write(rows_to_csv(rows))
    return rows
