"""Differentially private heavy hitters for one-pass data streams.

Counter summaries (MisraGries, SpaceSaving with recency-determined
eviction), private release mechanisms over them, Count-Min / Count
sketches with up-front privacy noise and error envelopes, a generic
envelope-thresholded release wrapper for frequency oracles, an
executable verifier for summary behaviour on neighbouring streams, and
a benchmark harness.
"""

from .bench import (
    ExperimentConfig,
    FileSource,
    StreamParseError,
    ZipfSource,
    compute_metrics,
    exact_heavy_hitters,
    generate_zipf,
    ingest,
    run_experiment,
    sweep,
    write_u64le,
)
from .mechanisms import (
    InfeasibleCapacityError,
    PrivacyParams,
    ReleaseReport,
    capacity_for_recall,
    compute_gamma,
    dpmg_release,
    dpss_release,
    dpss_threshold,
)
from .neighbors import (
    NeighborPairError,
    StateLabel,
    StateMachineViolation,
    StatePair,
    classify,
    verify_corollary,
    verify_exhaustive,
    verify_random_trials,
    verify_trajectory,
)
from .noise import NoiseSource, ZeroNoiseSource, sample_laplace
from .sketches import (
    CountMinSketch,
    CountSketch,
    ErrorEnvelope,
    SketchStateError,
    cms_envelope,
    cs_envelope,
    exact_envelope,
    f2_estimate,
    privatize_sketch,
    sketch_from_bytes,
    sketch_to_bytes,
)
from .summaries import (
    MisraGries,
    SpaceSaving,
    StreamSummary,
    mg_process,
    ss_estimate,
    ss_process,
)
from .wrapper import (
    EnvelopeError,
    ExactOracle,
    TrackedCandidates,
    eehh_release,
    topk_track,
)

__all__ = [name for name in dir() if not name.startswith("_")]
