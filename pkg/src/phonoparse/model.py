"""Core domain types: posterior sequences, binary patterns, segments, tasks."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping, Optional, Sequence

import numpy as np


class ValidationError(ValueError):
    """Raised when input data breaks a type invariant."""

    def __init__(self, message, violations=()):
        super().__init__(message)
        self.violations = list(violations)


class Decision(enum.Enum):
    """Outcome of a binary decision. A and B index the task's two classes."""

    A = "A"
    B = "B"
    UNLABELED = "-"

    def opposite(self):
        if self is Decision.A:
            return Decision.B
        if self is Decision.B:
            return Decision.A
        return self


class Task(enum.Enum):
    CV = "cv"
    STRESS = "stress"
    ACCENT = "accent"

    @property
    def class_names(self) -> tuple[str, str]:
        return _CLASS_NAMES[self]

    @property
    def label_tokens(self) -> tuple[str, str]:
        """Canonical label tokens used in label and codebook files."""
        return _LABEL_TOKENS[self]

    def class_name(self, decision: Decision) -> str:
        if decision is Decision.UNLABELED:
            return "Unlabeled"
        return self.class_names[0 if decision is Decision.A else 1]

    def token(self, decision: Decision) -> str:
        if decision is Decision.UNLABELED:
            return "-"
        return self.label_tokens[0 if decision is Decision.A else 1]

    def parse_label(self, text: str) -> Decision:
        """Map a label token or class name (case-insensitive) to A or B."""
        t = text.strip().lower()
        for decision, idx in ((Decision.A, 0), (Decision.B, 1)):
            if t in (self.label_tokens[idx].lower(), self.class_names[idx].lower()):
                return decision
        raise ValueError(f"unknown {self.value} label {text!r}")

    @classmethod
    def parse(cls, text: str) -> "Task":
        t = text.strip().lower().replace("-", "")
        for task in cls:
            if t == task.value:
                return task
        raise ValueError(f"unknown task {text!r}")


_CLASS_NAMES = {
    Task.CV: ("Consonant", "Vowel"),
    Task.STRESS: ("Stressed", "Unstressed"),
    Task.ACCENT: ("Accented", "Unaccented"),
}

_LABEL_TOKENS = {
    Task.CV: ("C", "V"),
    Task.STRESS: ("1", "0"),
    Task.ACCENT: ("1", "0"),
}

# A posterior frame is any sequence of K probabilities.
PosteriorFrame = Sequence[float]


@dataclass(frozen=True)
class Violation:
    rule: str
    frame: Optional[int] = None
    klass: Optional[int] = None

    def __str__(self):
        where = []
        if self.frame is not None:
            where.append(f"frame {self.frame}")
        if self.klass is not None:
            where.append(f"class {self.klass}")
        loc = ", ".join(where)
        return f"{loc}: {self.rule}" if loc else self.rule


@dataclass(frozen=True)
class PosteriorSequence:
    """N frames of K class-conditional posteriors.

    Construction does not validate, so malformed data can still be held and
    reported by :func:`validate_sequence`. Use :meth:`checked` to get a
    sequence that is known to be valid.
    """

    frames: tuple
    class_names: Optional[tuple] = None
    frame_rate_hz: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(
            self, "frames", tuple(tuple(float(v) for v in row) for row in self.frames)
        )
        if self.class_names is not None:
            object.__setattr__(self, "class_names", tuple(self.class_names))

    @classmethod
    def from_array(cls, probs, class_names=None, frame_rate_hz=None):
        arr = np.asarray(probs, dtype=np.float64)
        if arr.ndim != 2:
            raise ValidationError(f"expected a 2-d array, got shape {arr.shape}")
        seq = cls(tuple(map(tuple, arr.tolist())), class_names, frame_rate_hz)
        return seq

    @property
    def n(self) -> int:
        return len(self.frames)

    @property
    def k(self) -> int:
        return len(self.frames[0]) if self.frames else 0

    def __len__(self):
        return len(self.frames)

    @cached_property
    def array(self) -> np.ndarray:
        """Read-only (N, K) float64 view. Requires a valid sequence."""
        self.check()
        arr = np.array(self.frames, dtype=np.float64)
        arr.setflags(write=False)
        return arr

    def check(self) -> "PosteriorSequence":
        violations = validate_sequence(self)
        if violations:
            shown = "; ".join(str(v) for v in violations[:5])
            more = f" (+{len(violations) - 5} more)" if len(violations) > 5 else ""
            raise ValidationError(f"invalid posterior sequence: {shown}{more}", violations)
        return self


def validate_frame(frame: PosteriorFrame, k: Optional[int] = None, index=None) -> list:
    violations = []
    if k is not None and len(frame) != k:
        violations.append(Violation(f"ragged K (expected {k}, got {len(frame)})", index))
        return violations
    for c, p in enumerate(frame):
        if not math.isfinite(p):
            violations.append(Violation("not finite", index, c))
        elif not 0.0 <= p <= 1.0:
            violations.append(Violation("out of [0,1]", index, c))
    return violations


def validate_sequence(seq: PosteriorSequence) -> list:
    """List every invariant violation in ``seq``; empty iff valid."""
    violations = []
    if not seq.frames:
        return [Violation("empty sequence (N must be >= 1)")]
    k = len(seq.frames[0])
    if k < 1:
        violations.append(Violation("K must be >= 1", 0))
    for i, row in enumerate(seq.frames):
        violations.extend(validate_frame(row, k, i))
    if seq.class_names is not None and len(seq.class_names) != k:
        violations.append(Violation(f"class_names has {len(seq.class_names)} entries, K={k}"))
    if seq.frame_rate_hz is not None and not (
        math.isfinite(seq.frame_rate_hz) and seq.frame_rate_hz > 0
    ):
        violations.append(Violation("frame_rate_hz must be positive"))
    return violations


@dataclass(frozen=True)
class BinaryPattern:
    """Fixed-width bit vector.

    Bit ``k + j*K`` holds class ``k`` of the frame ``j`` positions to the right
    of the anchor (``j = 0`` is the anchor itself). ``bits`` stores bit index
    ``i`` at integer position ``i`` (least significant first).
    """

    bits: int
    width: int
    context: int = 0

    def __post_init__(self):
        if self.width < 1:
            raise ValidationError(f"pattern width must be positive, got {self.width}")
        if self.context < 0:
            raise ValidationError(f"context must be non-negative, got {self.context}")
        if self.width % (1 + self.context):
            raise ValidationError(
                f"width {self.width} is not a multiple of 1+context={1 + self.context}"
            )
        if self.bits < 0 or self.bits >> self.width:
            raise ValidationError(f"bits do not fit in width {self.width}")

    @property
    def k(self) -> int:
        return self.width // (1 + self.context)

    @classmethod
    def from_bits(cls, values, context=0) -> "BinaryPattern":
        """Build from an iterable of 0/1 values, index 0 first."""
        bits = 0
        n = 0
        for i, v in enumerate(values):
            if v:
                bits |= 1 << i
            n = i + 1
        return cls(bits, n, context)

    @classmethod
    def from_string(cls, text: str, context=0) -> "BinaryPattern":
        """Parse ``"101"``; the leftmost character is bit index 0."""
        if not text or set(text) - {"0", "1"}:
            raise ValueError(f"not a bitstring: {text!r}")
        return cls(int(text[::-1], 2), len(text), context)

    def to_string(self) -> str:
        return format(self.bits, f"0{self.width}b")[::-1]

    def to_bits(self) -> list:
        return [(self.bits >> i) & 1 for i in range(self.width)]

    def popcount(self) -> int:
        return self.bits.bit_count()

    def frame(self, j: int) -> "BinaryPattern":
        """The first-order pattern of the j-th frame inside this window."""
        k = self.k
        return BinaryPattern((self.bits >> (j * k)) & ((1 << k) - 1), k, 0)

    def __str__(self):
        return self.to_string()


@dataclass(frozen=True)
class SegmentAnnotation:
    """Frame range ``[start, end)`` with one label per annotated task."""

    start: int
    end: int
    labels: Mapping[Task, Decision] = field(default_factory=dict)

    def __post_init__(self):
        if not 0 <= self.start < self.end:
            raise ValidationError(f"invalid segment range [{self.start}, {self.end})")
        for task, label in self.labels.items():
            if not isinstance(task, Task):
                raise ValidationError(f"unknown task {task!r}")
            if label not in (Decision.A, Decision.B):
                raise ValidationError(f"segment label for {task.value} must be A or B")
        object.__setattr__(self, "labels", dict(self.labels))

    def __hash__(self):
        return hash((self.start, self.end, tuple(sorted((t.value, d.value) for t, d in self.labels.items()))))

    @property
    def length(self) -> int:
        return self.end - self.start

    def label(self, task: Task) -> Optional[Decision]:
        return self.labels.get(task)


def validate_annotations(annotations: Sequence[SegmentAnnotation], n_frames=None) -> list:
    """Bounds and per-tier overlap checks. Returns violations, never raises."""
    violations = []
    for i, seg in enumerate(annotations):
        if n_frames is not None and seg.end > n_frames:
            violations.append(
                Violation(f"segment {i} [{seg.start}, {seg.end}) exceeds N={n_frames}")
            )
    for task in Task:
        tier = sorted(
            (seg.start, seg.end, i) for i, seg in enumerate(annotations) if task in seg.labels
        )
        for (s0, e0, i0), (s1, e1, i1) in zip(tier, tier[1:]):
            if s1 < e0:
                violations.append(
                    Violation(f"{task.value} segments {i0} and {i1} overlap at frame {s1}")
                )
    return violations


def frame_labels(annotations: Sequence[SegmentAnnotation], task: Task, n_frames: int) -> list:
    """Per-frame labels by segment containment; None outside every segment."""
    out = [None] * n_frames
    for seg in annotations:
        label = seg.labels.get(task)
        if label is None:
            continue
        for t in range(seg.start, min(seg.end, n_frames)):
            out[t] = label
    return out
