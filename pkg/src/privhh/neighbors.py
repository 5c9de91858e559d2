"""State classification for SpaceSaving runs on neighbouring streams.

Two streams are neighbours when one is the other with a single update
replaced by a no-op; positions stay aligned so recency values remain
comparable across the two runs.  After the removal point the paired
summaries always fall into one of four states:

  S1: identical tracked sets; exactly one shared counter is one higher
      on the full stream, all others equal.
  S2: tracked sets differ by one label each (isolated labels z / z');
      shared counters equal; C[z] = C'[z'] + 1 with z' at the right
      run's minimum and C[z] at most the left minimum plus one.
  S3: one isolated label each, both pinned at the common minimum count,
      plus exactly one shared counter that is one higher on the left.
  S4: two isolated labels each; shared counters equal; the right pair
      sits at the common minimum, the left pair at minimum and
      minimum+1; the right run's eviction register (most recent member
      of its minimum-count set) holds an isolated label.

The classical analysis of this structure states the move relation
S1->{S1,S2}, S2->{S1,S2,S3}, S3->{S1,S3,S4}, S4->{S2,S3,S4} with the
first classified step S1 or S2.  Exhaustive verification with this very
module shows that relation is incomplete: two further moves are
reachable and hand-checkable on four-label streams.

  S1->S3 (stream [d,a,a,d,a,a,b,b,c], remove position 5, k=2): the
      incremented label can sit at the left minimum while its right
      counter is strictly below every other counter, so the runs evict
      different non-incremented labels and the +1 witness migrates to
      the freshly installed label.
  S3->S2 (stream [a,b,c,a], remove position 1, k=2): when the left
      isolated label itself arrives, the right run can evict a shared
      minimum-count label, handing the new arrival equal counters in
      both runs and dissolving the +1 witness.

STATED_TRANSITIONS carries the classical relation and is the default
contract checked by the verifiers; COMPLETED_TRANSITIONS adds the two
observed moves.  The privacy argument rests on the four-state coverage
and the pooled corollary only, and those hold in every trial to date.

Short prefixes where a table is not yet full are handled by the
standard equivalence that a free slot is a zero-count placeholder: the
run that processed one update fewer can have at most one extra free
slot, and that slot plays the role of z' with count 0.  Under this
reading the clauses above cover streams of every length.

Bulk verification (exhaustive and randomized) runs on a flat-array twin
of the simulator compiled with numba; the pure-Python path stays the
reference and produces the witness dumps.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Optional, Sequence

import numpy as np
from numba import njit

from .summaries import SpaceSaving

STATED_TRANSITIONS = {
    "S1": {"S1", "S2"},
    "S2": {"S1", "S2", "S3"},
    "S3": {"S1", "S3", "S4"},
    "S4": {"S2", "S3", "S4"},
}
COMPLETED_TRANSITIONS = {
    "S1": {"S1", "S2", "S3"},
    "S2": {"S1", "S2", "S3"},
    "S3": {"S1", "S2", "S3", "S4"},
    "S4": {"S2", "S3", "S4"},
}
# Backwards-friendly alias: the default contract the verifiers enforce.
LEGAL_TRANSITIONS = STATED_TRANSITIONS
BASE_STATES = {"S1", "S2"}

_TAG_NAMES = {0: "Violation", 1: "S1", 2: "S2", 3: "S3", 4: "S4"}
_TAG_CODES = {"S1": 1, "S2": 2, "S3": 3, "S4": 4}


class NeighborPairError(ValueError):
    """The two summaries cannot be a neighbour pair (e.g. capacity mismatch)."""


class StateMachineViolation(RuntimeError):
    """A pair left the four-state space or took an illegal transition."""

    def __init__(self, message: str, witness: dict) -> None:
        super().__init__(f"{message}\nwitness: {witness}")
        self.witness = witness


@dataclass
class StateLabel:
    tag: str
    witness: dict


@dataclass
class StatePair:
    """Summaries of a stream and its one-update-removed neighbour at one time."""

    left: object  # StreamSummary or live SpaceSaving (duck-typed)
    right: object
    removal_index: int
    time: int

    def __post_init__(self) -> None:
        if self.left.capacity != self.right.capacity:
            raise NeighborPairError(
                f"capacity mismatch: {self.left.capacity} vs {self.right.capacity}"
            )


def classify(pair: StatePair) -> StateLabel:
    """Classify a neighbour pair into S1..S4, or Violation.

    All four clause sets are evaluated; exactly one may hold.  Free
    slots count as zero-count placeholders (see module docstring).
    """
    k = pair.left.capacity
    counts_l = dict(pair.left.counts)
    counts_r = dict(pair.right.counts)
    free_l = k - len(counts_l)
    free_r = k - len(counts_r)
    virtual = free_r - free_l  # extra empty right slots acting as count-0 labels

    isolated_l = [y for y in counts_l if y not in counts_r]
    isolated_r = [y for y in counts_r if y not in counts_l]
    shared = counts_l.keys() & counts_r.keys()
    diffs = [y for y in shared if counts_l[y] != counts_r[y]]
    plus_one = len(diffs) == 1 and counts_l[diffs[0]] == counts_r[diffs[0]] + 1

    min_l = 0 if free_l > 0 else min(counts_l.values())
    min_r = 0 if free_r > 0 else min(counts_r.values())

    effective_r = len(isolated_r) + max(virtual, 0)

    diagnostics = {
        "counts_left": counts_l,
        "counts_right": counts_r,
        "isolated_left": sorted(isolated_l),
        "isolated_right": sorted(isolated_r),
        "free_slots": (free_l, free_r),
        "min_counts": (min_l, min_r),
        "shared_diffs": sorted(diffs),
        "time": pair.time,
        "removal_index": pair.removal_index,
    }

    matches: list[StateLabel] = []
    if virtual in (0, 1):
        if not isolated_l and effective_r == 0 and plus_one:
            matches.append(StateLabel("S1", {"incremented": diffs[0]}))

        if len(isolated_l) == 1 and effective_r == 1 and not diffs:
            z = isolated_l[0]
            z_prime = isolated_r[0] if isolated_r else None  # None: empty right slot
            count_zp = counts_r[z_prime] if z_prime is not None else 0
            if (
                counts_l[z] == count_zp + 1
                and count_zp == min_r
                and counts_l[z] <= min_l + 1
            ):
                matches.append(StateLabel("S2", {"z": z, "z_prime": z_prime}))

        if len(isolated_l) == 1 and effective_r == 1 and plus_one:
            z = isolated_l[0]
            z_prime = isolated_r[0] if isolated_r else None
            count_zp = counts_r[z_prime] if z_prime is not None else 0
            if counts_l[z] == count_zp == min_l == min_r:
                matches.append(
                    StateLabel("S3", {"z": z, "z_prime": z_prime, "incremented": diffs[0]})
                )

        if len(isolated_l) == 2 and len(isolated_r) == 2 and virtual == 0 and not diffs:
            counts_pair = sorted(counts_l[y] for y in isolated_l)
            lo, hi = counts_pair
            if (
                hi == lo + 1
                and lo == min_l == min_r
                and all(counts_r[y] == lo for y in isolated_r)
                and _eviction_register(counts_r, pair.right.recency, min_r) in isolated_r
            ):
                z2, z1 = sorted(isolated_l, key=counts_l.get)
                matches.append(
                    StateLabel(
                        "S4",
                        {"z1": z1, "z2": z2, "z_primes": sorted(isolated_r)},
                    )
                )

    if len(matches) == 1:
        return matches[0]
    diagnostics["matched_states"] = [m.tag for m in matches]
    return StateLabel("Violation", diagnostics)


def _eviction_register(counts: dict[int, int], recency: dict[int, int], min_count: int) -> int:
    """Most recent member of the minimum-count set: the unique eviction candidate."""
    best, best_rec = -1, -1
    for label, count in counts.items():
        if count == min_count and recency[label] > best_rec:
            best, best_rec = label, recency[label]
    return best


def verify_corollary(pair: StatePair) -> bool:
    """Check the pooled guarantees every genuine neighbour pair satisfies.

    At most two labels per side are outside the shared core, every
    counter outside it is at most the right minimum plus one, and at most
    one shared counter differs (by exactly +1 on the left).
    """
    k = pair.left.capacity
    counts_l = dict(pair.left.counts)
    counts_r = dict(pair.right.counts)
    free_l = k - len(counts_l)
    free_r = k - len(counts_r)
    shared_size = len(counts_l.keys() & counts_r.keys()) + min(free_l, free_r)
    if shared_size < k - 2:
        return False
    min_r = 0 if free_r > 0 else min(counts_r.values())
    outside = [counts_l[y] for y in counts_l if y not in counts_r]
    outside += [counts_r[y] for y in counts_r if y not in counts_l]
    if any(count > min_r + 1 for count in outside):
        return False
    diffs = [y for y in counts_l.keys() & counts_r.keys() if counts_l[y] != counts_r[y]]
    if len(diffs) > 1:
        return False
    if diffs and counts_l[diffs[0]] != counts_r[diffs[0]] + 1:
        return False
    return True


def neighbor_pairs(
    stream: Sequence[int], k: int, removal_index: int
) -> Iterator[StatePair]:
    """Lockstep pairs (full run vs removal run) for t = removal_index..len(stream)."""
    n = len(stream)
    if not 1 <= removal_index <= n:
        raise ValueError(f"removal_index must lie in 1..{n}, got {removal_index}")
    left = SpaceSaving(k)
    right = SpaceSaving(k)
    for t, label in enumerate(stream, start=1):
        left.update(label)
        if t == removal_index:
            right.skip()
        else:
            right.update(label)
        if t >= removal_index:
            yield StatePair(left, right, removal_index, t)


def verify_trajectory(
    stream: Sequence[int],
    k: int,
    removal_index: int,
    relation: Optional[dict[str, set[str]]] = None,
) -> list[StateLabel]:
    """Classify every step from the removal point on and check legality.

    Raises StateMachineViolation (with a witness dump) on any Violation
    classification, a base state outside {S1, S2}, or a move outside
    the given relation (STATED_TRANSITIONS unless overridden); otherwise
    returns the trajectory of state labels.
    """
    if relation is None:
        relation = STATED_TRANSITIONS
    trajectory: list[StateLabel] = []
    previous: Optional[str] = None
    for pair in neighbor_pairs(stream, k, removal_index):
        label = classify(pair)
        if label.tag == "Violation":
            raise StateMachineViolation(
                f"no unique state at t={pair.time}", _witness_dump(pair, label)
            )
        if previous is None:
            if label.tag not in BASE_STATES:
                raise StateMachineViolation(
                    f"base state {label.tag} at t={pair.time} (must be S1 or S2)",
                    _witness_dump(pair, label),
                )
        elif label.tag not in relation[previous]:
            raise StateMachineViolation(
                f"illegal transition {previous} -> {label.tag} at t={pair.time}",
                _witness_dump(pair, label),
            )
        trajectory.append(label)
        previous = label.tag
    return trajectory


def _witness_dump(pair: StatePair, label: StateLabel) -> dict:
    counts_l = dict(pair.left.counts)
    counts_r = dict(pair.right.counts)
    min_l = min(counts_l.values(), default=0)
    min_r = min(counts_r.values(), default=0)
    return {
        "state": label.tag,
        "detail": label.witness,
        "time": pair.time,
        "removal_index": pair.removal_index,
        "counts_left": counts_l,
        "counts_right": counts_r,
        "recency_left": dict(pair.left.recency or {}),
        "recency_right": dict(pair.right.recency or {}),
        "min_set_left": sorted(y for y, c in counts_l.items() if c == min_l),
        "min_set_right": sorted(y for y, c in counts_r.items() if c == min_r),
    }


# ---------------------------------------------------------------------------
# Flat-array twin for bulk verification (numba-compiled).
# Labels must be dense ints in [0, universe); recency 0 means untracked-fresh.


def _relation_matrix(relation: dict[str, set[str]]) -> np.ndarray:
    matrix = np.zeros((5, 5), dtype=np.bool_)
    for src, dsts in relation.items():
        for dst in dsts:
            matrix[_TAG_CODES[src], _TAG_CODES[dst]] = True
    return matrix


@njit(cache=True)
def _ss_step(counts, rec, size, k, x, t):
    if counts[x] > 0:
        counts[x] += 1
        rec[x] = t
        return size
    if size < k:
        counts[x] = 1
        rec[x] = t
        return size + 1
    universe = counts.shape[0]
    min_count = np.int64(1) << 60
    for y in range(universe):
        c = counts[y]
        if 0 < c < min_count:
            min_count = c
    victim = -1
    victim_rec = np.int64(-1)
    for y in range(universe):
        if counts[y] == min_count and rec[y] > victim_rec:
            victim_rec = rec[y]
            victim = y
    counts[victim] = 0
    rec[victim] = 0
    counts[x] = min_count + 1
    rec[x] = t
    return size


@njit(cache=True)
def _classify_arrays(counts_l, counts_r, rec_r, size_l, size_r, k):
    universe = counts_l.shape[0]
    free_l = k - size_l
    free_r = k - size_r
    virtual = free_r - free_l
    if virtual < 0 or virtual > 1:
        return 0

    n_iso_l = 0
    iso_l1 = -1
    iso_l2 = -1
    n_iso_r = 0
    iso_r1 = -1
    iso_r2 = -1
    n_diff = 0
    diff_is_plus_one = True
    min_l = np.int64(1) << 60
    min_r = np.int64(1) << 60
    for y in range(universe):
        a = counts_l[y]
        b = counts_r[y]
        if a > 0:
            if a < min_l:
                min_l = a
            if b > 0:
                if a != b:
                    n_diff += 1
                    if a != b + 1:
                        diff_is_plus_one = False
            else:
                if n_iso_l == 0:
                    iso_l1 = y
                elif n_iso_l == 1:
                    iso_l2 = y
                n_iso_l += 1
        if b > 0:
            if b < min_r:
                min_r = b
            if a == 0:
                if n_iso_r == 0:
                    iso_r1 = y
                elif n_iso_r == 1:
                    iso_r2 = y
                n_iso_r += 1
    if free_l > 0:
        min_l = 0
    if free_r > 0:
        min_r = 0
    plus_one = n_diff == 1 and diff_is_plus_one
    effective_r = n_iso_r + virtual

    matches = 0
    tag = 0
    if n_iso_l == 0 and effective_r == 0 and plus_one:
        matches += 1
        tag = 1
    if n_iso_l == 1 and effective_r == 1 and n_diff == 0:
        cz = counts_l[iso_l1]
        czp = counts_r[iso_r1] if n_iso_r == 1 else 0
        if cz == czp + 1 and czp == min_r and cz <= min_l + 1:
            matches += 1
            tag = 2
    if n_iso_l == 1 and effective_r == 1 and plus_one:
        cz = counts_l[iso_l1]
        czp = counts_r[iso_r1] if n_iso_r == 1 else 0
        if cz == czp and cz == min_l and cz == min_r:
            matches += 1
            tag = 3
    if n_iso_l == 2 and n_iso_r == 2 and virtual == 0 and n_diff == 0:
        c1 = counts_l[iso_l1]
        c2 = counts_l[iso_l2]
        lo = c1 if c1 < c2 else c2
        hi = c1 + c2 - lo
        if (
            hi == lo + 1
            and lo == min_l
            and lo == min_r
            and counts_r[iso_r1] == lo
            and counts_r[iso_r2] == lo
        ):
            register = -1
            register_rec = np.int64(-1)
            for y in range(universe):
                if counts_r[y] == min_r and rec_r[y] > register_rec:
                    register_rec = rec_r[y]
                    register = y
            if register == iso_r1 or register == iso_r2:
                matches += 1
                tag = 4
    if matches == 1:
        return tag
    return 0


@njit(cache=True)
def _verify_kernel(labels, length, k, removal_index, counts_l, counts_r, rec_l, rec_r, legal, coverage):
    """Simulate one neighbour pair and classify every step from the removal on.

    Returns 0 when the whole trajectory is legal, else the failing time.
    coverage[0, s] counts base states, coverage[prev, s] counts transitions.
    """
    counts_l[:] = 0
    counts_r[:] = 0
    rec_l[:] = 0
    rec_r[:] = 0
    size_l = 0
    size_r = 0
    previous = 0
    for t in range(1, length + 1):
        x = labels[t - 1]
        size_l = _ss_step(counts_l, rec_l, size_l, k, x, t)
        if t != removal_index:
            size_r = _ss_step(counts_r, rec_r, size_r, k, x, t)
        if t >= removal_index:
            state = _classify_arrays(counts_l, counts_r, rec_r, size_l, size_r, k)
            if state == 0:
                return t
            if previous == 0:
                if state > 2:
                    return t
            elif not legal[previous, state]:
                return t
            coverage[previous, state] += 1
            previous = state
    return 0


@njit(cache=True)
def _verify_batch(streams, lengths, ks, removals, universe, legal, coverage):
    """Run _verify_kernel over a batch; returns the first failing row or -1."""
    counts_l = np.zeros(universe, dtype=np.int64)
    counts_r = np.zeros(universe, dtype=np.int64)
    rec_l = np.zeros(universe, dtype=np.int64)
    rec_r = np.zeros(universe, dtype=np.int64)
    for i in range(streams.shape[0]):
        failed_at = _verify_kernel(
            streams[i],
            lengths[i],
            ks[i],
            removals[i],
            counts_l,
            counts_r,
            rec_l,
            rec_r,
            legal,
            coverage,
        )
        if failed_at != 0:
            return i
    return -1


def _restricted_growth_strings(length: int, max_labels: int) -> Iterator[tuple[int, ...]]:
    """All label sequences of the given length, canonical up to renaming."""
    seq = [0] * length

    def rec(i: int, used: int) -> Iterator[tuple[int, ...]]:
        if i == length:
            yield tuple(seq)
            return
        limit = min(used + 1, max_labels)
        for v in range(limit):
            seq[i] = v
            yield from rec(i + 1, max(used, v + 1))

    yield from rec(0, 0)


def _raise_from_row(streams: np.ndarray, lengths, ks, removals, row: int, relation) -> None:
    stream = [int(v) for v in streams[row, : lengths[row]]]
    # Reconstruct through the reference path for a full witness dump.
    verify_trajectory(stream, int(ks[row]), int(removals[row]), relation)
    raise StateMachineViolation(
        "fast verifier failed but reference run passed; implementations disagree",
        {"stream": stream, "k": int(ks[row]), "removal_index": int(removals[row])},
    )


def verify_exhaustive(
    max_universe: int = 5,
    max_length: int = 10,
    ks: Sequence[int] = (2, 3),
    relation: Optional[dict[str, set[str]]] = None,
) -> dict:
    """Verify every stream behaviour up to the given size, all removals, all ks.

    Streams are enumerated canonically up to label renaming; the summary
    update rule depends only on the equality pattern and arrival order,
    so this covers every stream over a universe of the given size.
    Raises StateMachineViolation on the first failure.
    """
    if relation is None:
        relation = STATED_TRANSITIONS
    legal = _relation_matrix(relation)
    coverage = np.zeros((5, 5), dtype=np.int64)
    trajectories = 0
    for length in range(1, max_length + 1):
        canon = list(_restricted_growth_strings(length, max_universe))
        streams = np.array(canon, dtype=np.int64).reshape(len(canon), length)
        rows = []
        for i in range(len(canon)):
            for removal in range(1, length + 1):
                for k in ks:
                    rows.append((i, removal, k))
        idx = np.array([r[0] for r in rows], dtype=np.int64)
        removals = np.array([r[1] for r in rows], dtype=np.int64)
        kvec = np.array([r[2] for r in rows], dtype=np.int64)
        batch = streams[idx]
        lengths = np.full(len(rows), length, dtype=np.int64)
        bad = _verify_batch(batch, lengths, kvec, removals, max_universe, legal, coverage)
        if bad >= 0:
            _raise_from_row(batch, lengths, kvec, removals, bad, relation)
        trajectories += len(rows)
    return {"trajectories": trajectories, "coverage": coverage}


def verify_random_trials(
    trials: int,
    universe: int = 16,
    length: int = 200,
    ks: Sequence[int] = tuple(range(2, 9)),
    seed: int = 0,
    chunk: int = 50_000,
    relation: Optional[dict[str, set[str]]] = None,
) -> dict:
    """Randomized lockstep verification; raises on the first violation."""
    if universe < 1 or length < 1 or trials < 0:
        raise ValueError("universe and length must be >= 1, trials >= 0")
    if relation is None:
        relation = STATED_TRANSITIONS
    legal = _relation_matrix(relation)
    rng = np.random.Generator(np.random.PCG64(seed))
    ks = np.array(sorted(ks), dtype=np.int64)
    coverage = np.zeros((5, 5), dtype=np.int64)
    done = 0
    while done < trials:
        size = min(chunk, trials - done)
        streams = rng.integers(0, universe, size=(size, length), dtype=np.int64)
        kvec = rng.choice(ks, size=size)
        removals = rng.integers(1, length + 1, size=size, dtype=np.int64)
        lengths = np.full(size, length, dtype=np.int64)
        bad = _verify_batch(streams, lengths, kvec, removals, universe, legal, coverage)
        if bad >= 0:
            _raise_from_row(streams, lengths, kvec, removals, bad, relation)
        done += size
    return {"trajectories": trials, "coverage": coverage}


def observed_transitions(coverage: np.ndarray) -> set[tuple[str, str]]:
    pairs = set()
    for src in range(1, 5):
        for dst in range(1, 5):
            if coverage[src, dst] > 0:
                pairs.add((_TAG_NAMES[src], _TAG_NAMES[dst]))
    return pairs


def relation_pairs(relation: Optional[dict[str, set[str]]] = None) -> set[tuple[str, str]]:
    if relation is None:
        relation = STATED_TRANSITIONS
    return {(src, dst) for src, dsts in relation.items() for dst in dsts}


# Minimal reproducers for the two moves outside STATED_TRANSITIONS; both
# hand-checkable with pencil and paper (see module docstring).
EXTRA_TRANSITION_WITNESSES = {
    ("S1", "S3"): {"stream": [3, 1, 1, 3, 1, 1, 2, 2, 0], "k": 2, "removal_index": 5},
    ("S3", "S2"): {"stream": [0, 1, 2, 0], "k": 2, "removal_index": 1},
}
