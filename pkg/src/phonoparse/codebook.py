"""Class-specific codebooks of unique binary structures."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from functools import cached_property
from typing import Mapping, Optional, Sequence

import numpy as np

from .bitops import pattern_to_row, patterns_to_rows, popcount_rows
from .model import BinaryPattern, Decision, SegmentAnnotation, Task, ValidationError
from .similarity import as_metric, best_of, best_scores, score_matrix

BIT_ORDER = "anchor-first-right-context"


@dataclass(frozen=True)
class Codebook:
    """Unique patterns observed for one class of one task, with counts."""

    task: Task
    label: Decision
    k: int
    context: int
    entries: Mapping[BinaryPattern, int]

    def __post_init__(self):
        if self.label not in (Decision.A, Decision.B):
            raise ValidationError("codebook label must be A or B")
        if self.k < 1 or self.context < 0:
            raise ValidationError(f"bad codebook shape K={self.k} context={self.context}")
        width = self.width
        for p, n in self.entries.items():
            if p.width != width:
                raise ValidationError(f"entry {p} has width {p.width}, codebook width is {width}")
            if n < 1:
                raise ValidationError(f"entry {p} has count {n} < 1")
        # normalise the context tag on entries so equality ignores it
        entries = {BinaryPattern(p.bits, width, self.context): int(n) for p, n in self.entries.items()}
        object.__setattr__(self, "entries", entries)

    def __hash__(self):
        return hash((self.task, self.label, self.k, self.context, frozenset(self.entries.items())))

    @property
    def width(self) -> int:
        return self.k * (1 + self.context)

    @property
    def class_name(self) -> str:
        return self.task.class_name(self.label)

    def __len__(self):
        return len(self.entries)

    def __contains__(self, pattern):
        return pattern in self.entries

    @property
    def total(self) -> int:
        return sum(self.entries.values())

    @cached_property
    def rows(self) -> np.ndarray:
        """Packed member matrix in a fixed (sorted) order."""
        members = sorted(self.entries, key=lambda p: p.bits)
        return patterns_to_rows(members, self.width)

    @cached_property
    def popcounts(self) -> np.ndarray:
        return popcount_rows(self.rows)

    def merged(self, other: "Codebook") -> "Codebook":
        if (other.task, other.label, other.k, other.context) != (
            self.task, self.label, self.k, self.context
        ):
            raise ValidationError("can only merge codebooks of the same task, class and shape")
        counts = Counter(self.entries)
        counts.update(other.entries)
        return Codebook(self.task, self.label, self.k, self.context, dict(counts))


@dataclass(frozen=True)
class CodebookPair:
    task: Task
    class_a: Codebook
    class_b: Codebook

    def __post_init__(self):
        for book, want in ((self.class_a, Decision.A), (self.class_b, Decision.B)):
            if book.task is not self.task or book.label is not want:
                raise ValidationError(
                    f"codebook {book.task.value}/{book.label.value} does not fit "
                    f"slot {self.task.value}/{want.value}"
                )
        if (self.class_a.k, self.class_a.context) != (self.class_b.k, self.class_b.context):
            raise ValidationError("codebooks in a pair must share K and context")

    @property
    def k(self) -> int:
        return self.class_a.k

    @property
    def context(self) -> int:
        return self.class_a.context

    @property
    def width(self) -> int:
        return self.class_a.width

    def book(self, label: Decision) -> Codebook:
        return self.class_a if label is Decision.A else self.class_b


def build_codebooks(
    patterns: Sequence[Optional[BinaryPattern]],
    annotations: Sequence[SegmentAnnotation],
    task: Task,
    k: Optional[int] = None,
    context: Optional[int] = None,
) -> CodebookPair:
    """Insert each frame's pattern into the book of its enclosing segment's class.

    ``patterns`` is aligned 1:1 with frames; None entries (anchors dropped
    under SKIP) are ignored, as are frames outside every segment labelled
    for ``task``. ``k``/``context`` are only needed when no pattern is
    present to infer them from.
    """
    present = [p for p in patterns if p is not None]
    if present:
        context = present[0].context if context is None else context
        k = present[0].width // (1 + context) if k is None else k
    if k is None or context is None:
        raise ValidationError("cannot infer K and context from an empty pattern list")
    width = k * (1 + context)
    n = len(patterns)
    counts = {Decision.A: Counter(), Decision.B: Counter()}
    for seg in annotations:
        if seg.end > n:
            raise ValidationError(f"segment [{seg.start}, {seg.end}) exceeds N={n}")
        label = seg.labels.get(task)
        if label is None:
            continue
        for t in range(seg.start, seg.end):
            p = patterns[t]
            if p is None:
                continue
            if p.width != width:
                raise ValidationError(f"pattern at frame {t} has width {p.width}, expected {width}")
            counts[label][BinaryPattern(p.bits, width, context)] += 1
    return CodebookPair(
        task,
        Codebook(task, Decision.A, k, context, dict(counts[Decision.A])),
        Codebook(task, Decision.B, k, context, dict(counts[Decision.B])),
    )


def _check_book(book: Codebook, width: int):
    if not book.entries:
        raise ValidationError(f"empty codebook for {book.task.value}/{book.class_name}")
    if book.width != width:
        raise ValidationError(f"pattern width {width} != codebook width {book.width}")


def match(pattern: BinaryPattern, book: Codebook, metric):
    """Best score of ``pattern`` against any member of ``book``."""
    metric = as_metric(metric)
    _check_book(book, pattern.width)
    row = pattern_to_row(pattern)[None]
    best = best_of(metric, score_matrix(metric.kind, row, book.rows, book.width,
                                        right_pop=book.popcounts))[0]
    return best.item()


def match_rows(rows: np.ndarray, book: Codebook, metric) -> np.ndarray:
    """Vectorised ``match`` for packed query rows of the book's width."""
    metric = as_metric(metric)
    _check_book(book, book.width)
    if rows.shape[0] == 0:
        return np.empty(0)
    return best_scores(metric, rows, book.rows, book.width, right_pop=book.popcounts)


@dataclass(frozen=True)
class SparsityStats:
    unique_count: int
    total_count: int
    width: int
    ratio_of_total: float
    ratio_of_possible: float
    log10_ratio_of_possible: float
    possible_overflow: bool  # ratio_of_possible not representable; reported as 0

    def as_dict(self):
        return {
            "unique_count": self.unique_count,
            "total_count": self.total_count,
            "width": self.width,
            "ratio_of_total": self.ratio_of_total,
            "ratio_of_possible": self.ratio_of_possible,
            "log10_ratio_of_possible": self.log10_ratio_of_possible,
            "possible_overflow": self.possible_overflow,
        }


def sparsity_stats(patterns: Sequence[BinaryPattern], width: int) -> SparsityStats:
    patterns = [p for p in patterns if p is not None]
    if not patterns:
        raise ValidationError("sparsity_stats needs at least one pattern")
    for p in patterns:
        if p.width != width:
            raise ValidationError(f"pattern width {p.width} != {width}")
    unique = len({p.bits for p in patterns})
    total = len(patterns)
    log10_possible = math.log10(unique) - width * math.log10(2.0)
    try:
        ratio_possible = unique / float(2**width)
        overflow = ratio_possible == 0.0
    except OverflowError:
        ratio_possible, overflow = 0.0, True
    return SparsityStats(unique, total, width, unique / total, ratio_possible, log10_possible, overflow)
