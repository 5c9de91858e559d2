"""Counter-based one-pass stream summaries: MisraGries and SpaceSaving.

A stream is any iterable of integer labels; arrival positions are the
implicit 1-based indices.  Both summaries keep at most ``capacity``
(label, count) entries and process each update in O(1) amortised time.

SpaceSaving resolves minimum-count eviction ties toward the tracked
label that arrived most recently, which makes the whole pass a pure
function of the input stream.  MisraGries decrements every counter when
an unknown label hits a full table and drops entries that reach zero;
the arriving label is not installed in that case.

Counters live in a doubly linked list of "count groups" (one node per
distinct counter value, members kept in arrival order), so the minimum
group is always the list head and the most recent member of any group
is its last entry.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, KeysView, Optional


@dataclass
class StreamSummary:
    """Frozen snapshot of a counter table after (part of) a pass.

    ``counts`` holds exactly the tracked labels, so ``tracked`` is its
    key set.  ``recency`` maps tracked labels to their last arrival
    position (SpaceSaving only).  ``processed`` counts actual updates,
    which can lag the position clock when no-op gaps were skipped.
    """

    counts: dict[int, int]
    capacity: int
    processed: int
    recency: Optional[dict[int, int]] = None

    @property
    def tracked(self) -> KeysView[int]:
        return self.counts.keys()


class _Group:
    __slots__ = ("count", "members", "prev", "next")

    def __init__(self, count: int) -> None:
        self.count = count
        self.members: dict[int, None] = {}  # insertion order == arrival order
        self.prev: Optional[_Group] = None
        self.next: Optional[_Group] = None


class _GroupTable:
    """Shared count-group machinery for both summaries."""

    def __init__(self, capacity: int) -> None:
        if capacity < 1:
            raise ValueError(f"capacity must be >= 1, got {capacity}")
        self.capacity = capacity
        self._head: Optional[_Group] = None
        self._group_of: dict[int, _Group] = {}

    def __len__(self) -> int:
        return len(self._group_of)

    def __contains__(self, label: int) -> bool:
        return label in self._group_of

    def count_of(self, label: int) -> int:
        group = self._group_of.get(label)
        return 0 if group is None else group.count

    def _unlink(self, group: _Group) -> None:
        if group.prev is not None:
            group.prev.next = group.next
        else:
            self._head = group.next
        if group.next is not None:
            group.next.prev = group.prev

    def _insert_member_after(self, label: int, count: int, base: Optional[_Group]) -> None:
        # Land `label` in the group holding `count`, creating it right
        # after `base` (or at the head when base is None).
        nxt = self._head if base is None else base.next
        if nxt is not None and nxt.count == count:
            target = nxt
        else:
            target = _Group(count)
            target.prev = base
            target.next = nxt
            if base is None:
                self._head = target
            else:
                base.next = target
            if nxt is not None:
                nxt.prev = target
        target.members[label] = None
        self._group_of[label] = target

    def increment(self, label: int) -> None:
        group = self._group_of[label]
        del group.members[label]
        self._insert_member_after(label, group.count + 1, group)
        if not group.members:
            self._unlink(group)

    def insert_new(self, label: int, count: int) -> None:
        # New minimum-or-near entries always sit at or before the head.
        head = self._head
        if head is not None and head.count < count:
            self._insert_member_after(label, count, head)
        else:
            self._insert_member_after(label, count, None)

    def min_group(self) -> _Group:
        assert self._head is not None
        return self._head

    def pop_most_recent_min(self) -> tuple[int, int]:
        """Remove and return (label, count) of the newest minimum-count member."""
        head = self.min_group()
        label, _ = head.members.popitem()
        count = head.count
        del self._group_of[label]
        if not head.members:
            self._unlink(head)
        return label, count

    def counts(self, offset: int = 0) -> dict[int, int]:
        return {label: group.count - offset for label, group in self._group_of.items()}


class SpaceSaving:
    """Deterministic SpaceSaving summary with most-recent-minimum eviction."""

    def __init__(self, capacity: int) -> None:
        self._table = _GroupTable(capacity)
        self.capacity = capacity
        self.recency: dict[int, int] = {}
        self.processed = 0
        self.position = 0

    def update(self, label: int) -> None:
        self.position += 1
        self.processed += 1
        table = self._table
        if label in table:
            table.increment(label)
        elif len(table) < self.capacity:
            table.insert_new(label, 1)
        else:
            victim, min_count = table.pop_most_recent_min()
            del self.recency[victim]
            table.insert_new(label, min_count + 1)
        self.recency[label] = self.position

    def skip(self) -> None:
        """Advance the position clock without an update (no-op arrival)."""
        self.position += 1

    @property
    def counts(self) -> dict[int, int]:
        return self._table.counts()

    def count_of(self, label: int) -> int:
        return self._table.count_of(label)

    def summary(self) -> StreamSummary:
        return StreamSummary(
            counts=self.counts,
            capacity=self.capacity,
            processed=self.processed,
            recency=dict(self.recency),
        )


class MisraGries:
    """MisraGries summary; a full-table miss decrements every counter."""

    def __init__(self, capacity: int) -> None:
        self._table = _GroupTable(capacity)
        self.capacity = capacity
        self.processed = 0
        # Stored counts are offset by the number of global decrements so a
        # decrement-all touches only the head group.
        self._offset = 0

    def update(self, label: int) -> None:
        self.processed += 1
        table = self._table
        if label in table:
            table.increment(label)
        elif len(table) < self.capacity:
            table.insert_new(label, self._offset + 1)
        else:
            self._offset += 1
            head = table.min_group()
            if head.count == self._offset:
                while head.members:
                    table.pop_most_recent_min()

    @property
    def counts(self) -> dict[int, int]:
        return self._table.counts(self._offset)

    def count_of(self, label: int) -> int:
        count = self._table.count_of(label)
        return count - self._offset if count else 0

    def summary(self) -> StreamSummary:
        return StreamSummary(
            counts=self.counts,
            capacity=self.capacity,
            processed=self.processed,
        )


def mg_process(stream: Iterable[int], k: int) -> StreamSummary:
    """Run MisraGries with k counters over the stream and return the table."""
    summary = MisraGries(k)
    update = summary.update
    for label in stream:
        update(label)
    return summary.summary()


def ss_process(stream: Iterable[int], k: int) -> StreamSummary:
    """Run SpaceSaving with k counters over the stream and return the table."""
    summary = SpaceSaving(k)
    update = summary.update
    for label in stream:
        update(label)
    return summary.summary()


def ss_estimate(summary: StreamSummary, label: int) -> int:
    """Frequency estimate for a label: its counter if tracked, else 0.

    For tracked labels the estimate e satisfies f <= e <= f + T/k where f
    is the true frequency and T the number of processed updates.
    """
    return summary.counts.get(label, 0)
