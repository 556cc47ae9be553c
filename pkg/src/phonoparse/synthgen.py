"""Synthetic posterior corpora with known class structure, and a naive oracle.

Each task that has templates owns a contiguous block of the K dimensions.
A segment draws a class per task, then walks the class's ordered template
list from a random start, one template per frame, so consecutive frames
carry class-specific sequences. Template bits are flipped with
``noise_flip_prob`` and then softened into posteriors.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np

from .model import (
    Decision,
    PosteriorSequence,
    SegmentAnnotation,
    Task,
    ValidationError,
    validate_annotations,
)
from .parser import ParseConfig, SegmentResult
from .quantize import BoundaryPolicy
from .similarity import MetricKind, Polarity


class TemplateOverlap(enum.Enum):
    DISJOINT = "disjoint"  # the two classes of a task never share a template
    SHARED = "shared"  # templates drawn independently per class; may coincide


class AccentMode(enum.Enum):
    INDEPENDENT = "independent"
    COPY_STRESS = "copy-stress"
    COMPLEMENT_STRESS = "complement-stress"


def default_templates():
    return {(task, lab): 4 for task in Task for lab in (Decision.A, Decision.B)}


@dataclass(frozen=True)
class SynthConfig:
    k: int = 15
    templates_per_class: Mapping = field(default_factory=default_templates)
    noise_flip_prob: float = 0.0
    softness: float = 0.1
    segments: int = 200
    frames_per_segment: tuple = (3, 8)
    seed: int = 0
    template_overlap: TemplateOverlap = TemplateOverlap.DISJOINT
    accent_mode: AccentMode = AccentMode.INDEPENDENT
    # dimensions per emitting task; default splits K evenly in task order
    block_sizes: Optional[Mapping] = None

    def emitting_tasks(self) -> list:
        return [t for t in Task if any(key[0] is t for key in self.templates_per_class)]

    def blocks(self) -> dict:
        """Task -> (offset, size) of its dimension block."""
        tasks = self.emitting_tasks()
        if self.block_sizes is not None:
            sizes = [int(self.block_sizes[t]) for t in tasks]
        else:
            base, extra = divmod(self.k, len(tasks))
            sizes = [base + (i < extra) for i in range(len(tasks))]
        out, offset = {}, 0
        for t, s in zip(tasks, sizes):
            out[t] = (offset, s)
            offset += s
        return out

    def validate(self):
        if self.k < 1:
            raise ValidationError(f"k must be >= 1, got {self.k}")
        if not 0.0 <= self.noise_flip_prob < 0.5:
            raise ValidationError("noise_flip_prob must lie in [0, 0.5)")
        if not 0.0 <= self.softness < 0.5:
            raise ValidationError("softness must lie in [0, 0.5)")
        if self.segments < 1:
            raise ValidationError("segments must be >= 1")
        lo, hi = self.frames_per_segment
        if not 1 <= lo <= hi:
            raise ValidationError(f"bad frames_per_segment {self.frames_per_segment}")
        if self.seed < 0:
            raise ValidationError("seed must be non-negative")
        tasks = self.emitting_tasks()
        if not tasks:
            raise ValidationError("templates_per_class defines no task")
        for t in tasks:
            for lab in (Decision.A, Decision.B):
                if self.templates_per_class.get((t, lab), 0) < 1:
                    raise ValidationError(f"zero templates for {t.value}/{t.class_name(lab)}")
        blocks = self.blocks()
        if sum(s for _, s in blocks.values()) > self.k:
            raise ValidationError("block sizes exceed k")
        for t, (_, size) in blocks.items():
            n_a = self.templates_per_class[(t, Decision.A)]
            n_b = self.templates_per_class[(t, Decision.B)]
            capacity = 2**size - 1  # nonzero patterns only
            need = n_a + n_b if self.template_overlap is TemplateOverlap.DISJOINT else max(n_a, n_b)
            if size < 1 or need > capacity:
                raise ValidationError(
                    f"{t.value} block of {size} bits cannot hold {need} distinct nonzero templates"
                )


@dataclass(frozen=True)
class SynthCorpus:
    sequence: PosteriorSequence
    annotations: tuple
    # (task, label) -> tuple of K-bit template ints, in sequence order
    inventory: dict
    # per frame: the noiseless K-bit pattern (OR of the task templates)
    clean_patterns: tuple
    # per frame: ((task, label, template index), ...) for each emitting task
    frame_templates: tuple

    def as_corpus(self):
        """``[(sequence, annotations)]`` as consumed by ``evaluate``."""
        return [(self.sequence, list(self.annotations))]


def _draw_templates(rng, size: int, count: int, exclude: set) -> list:
    out = []
    while len(out) < count:
        v = int(rng.integers(1, 2**size))
        if v not in exclude and v not in out:
            out.append(v)
    return out


def _inventory(cfg: SynthConfig) -> dict:
    rng = np.random.default_rng([cfg.seed, 0])
    inv = {}
    for task, (offset, size) in cfg.blocks().items():
        used = set()
        for lab in (Decision.A, Decision.B):
            count = cfg.templates_per_class[(task, lab)]
            exclude = used if cfg.template_overlap is TemplateOverlap.DISJOINT else set()
            local = _draw_templates(rng, size, count, exclude)
            used.update(local)
            inv[(task, lab)] = tuple(v << offset for v in local)
    return inv


def _labels(rng, cfg: SynthConfig) -> dict:
    labels = {}
    for task in Task:
        labels[task] = Decision.A if rng.random() < 0.5 else Decision.B
    if cfg.accent_mode is AccentMode.COPY_STRESS:
        labels[Task.ACCENT] = labels[Task.STRESS]
    elif cfg.accent_mode is AccentMode.COMPLEMENT_STRESS:
        labels[Task.ACCENT] = labels[Task.STRESS].opposite()
    return labels


def generate(cfg: SynthConfig) -> SynthCorpus:
    """Pure function of ``cfg``; segment i draws from the stream (seed, 1, i)."""
    cfg.validate()
    inv = _inventory(cfg)
    tasks = cfg.emitting_tasks()
    lo, hi = cfg.frames_per_segment

    rows, annotations, clean, used = [], [], [], []
    start = 0
    for i in range(cfg.segments):
        rng = np.random.default_rng([cfg.seed, 1, i])
        length = int(rng.integers(lo, hi + 1))
        labels = _labels(rng, cfg)
        offsets = {t: int(rng.integers(len(inv[(t, labels[t])]))) for t in tasks}
        seg_bits = np.zeros((length, cfg.k), dtype=bool)
        for f in range(length):
            value = 0
            ids = []
            for t in tasks:
                templates = inv[(t, labels[t])]
                idx = (offsets[t] + f) % len(templates)
                value |= templates[idx]
                ids.append((t, labels[t], idx))
            clean.append(value)
            used.append(tuple(ids))
            seg_bits[f] = [(value >> b) & 1 for b in range(cfg.k)]
        flips = rng.random((length, cfg.k)) < cfg.noise_flip_prob
        noisy = seg_bits ^ flips
        jitter = cfg.softness * rng.random((length, cfg.k))
        rows.append(np.where(noisy, 1.0 - jitter, jitter))
        annotations.append(SegmentAnnotation(start, start + length, labels))
        start += length

    seq = PosteriorSequence.from_array(np.concatenate(rows))
    return SynthCorpus(seq, tuple(annotations), inv, tuple(clean), tuple(used))


# --------------------------------------------------------------------------
# Reference oracle: per-bit loops and exhaustive scans, independent of the
# packed implementation. Slow by design; used for differential testing.


def reference_units(x, y):
    """(a, b, c, d) of two 0/1 sequences, counted one position at a time."""
    if len(x) != len(y):
        raise ValueError("length mismatch")
    a = b = c = d = 0
    for xi, yi in zip(x, y):
        if xi and yi:
            a += 1
        elif not xi and yi:
            b += 1
        elif xi and not yi:
            c += 1
        else:
            d += 1
    return a, b, c, d


def reference_score(kind: MetricKind, x, y):
    a, b, c, d = reference_units(x, y)
    name = kind.value
    if name == "innerproduct":
        return a + d
    if name == "hamming":
        return b + c
    if name == "jaccard":
        if a + b + c == 0:
            return 1.0
        return a / (a + b + c)
    if name == "ample":
        if c * (a + b) == 0:
            return math.inf if a * (c + d) > 0 else 0.0
        return a * (c + d) / (c * (a + b))
    if name == "simpson":
        m = min(a + b, a + c)
        if m == 0:
            return 0.0
        return a / m
    if name == "hellinger":
        if (a + b) * (a + c) == 0:
            return 2.0
        return 2.0 * math.sqrt(1.0 - a / math.sqrt((a + b) * (a + c)))
    raise ValueError(name)


def _prefer(polarity, s, t):
    return s > t if polarity is Polarity.MAXIMIZE else s < t


def _best(polarity, kind, window, members):
    best = None
    for m in members:
        s = reference_score(kind, window, m)
        if best is None or _prefer(polarity, s, best):
            best = s
    return best


def oracle_parse(seq: PosteriorSequence, annotations, books, cfg: ParseConfig) -> list:
    """Straight-line reimplementation of ``parse_utterance``."""
    seq.check()
    n = len(seq.frames)
    k = len(seq.frames[0])
    q = cfg.quantize
    if books.task is not cfg.books_task:
        raise ValidationError("codebook task does not match config")
    if books.class_a.k != k or books.class_a.context != q.context:
        raise ValidationError("codebook shape does not match data/config")
    if not books.class_a.entries or not books.class_b.entries:
        raise ValidationError("empty codebook")
    problems = validate_annotations(annotations, n)
    if problems:
        raise ValidationError(str(problems[0]), problems)

    bits = []
    for frame in seq.frames:
        bits.append([1 if p >= q.threshold else 0 for p in frame])

    members_a = [p.to_bits() for p in books.class_a.entries]
    members_b = [p.to_bits() for p in books.class_b.entries]
    kind, polarity = cfg.metric.kind, cfg.metric.polarity

    decisions = []
    seen = {}  # window -> decision; repeated windows are common in real and synthetic data
    for t in range(n):
        if t + q.context >= n and q.boundary_policy is BoundaryPolicy.SKIP:
            decisions.append(None)
            continue
        window = []
        for j in range(q.context + 1):
            window.extend(bits[min(t + j, n - 1)])
        key = tuple(window)
        if key not in seen:
            sa = _best(polarity, kind, window, members_a)
            sb = _best(polarity, kind, window, members_b)
            if _prefer(polarity, sa, sb):
                seen[key] = Decision.A
            elif _prefer(polarity, sb, sa):
                seen[key] = Decision.B
            else:
                seen[key] = Decision.UNLABELED
        decisions.append(seen[key])

    results = []
    for seg in annotations:
        votes = [d for d in decisions[seg.start : seg.end] if d is not None]
        n_a = votes.count(Decision.A)
        n_b = votes.count(Decision.B)
        n_u = votes.count(Decision.UNLABELED)
        if n_a > n_b:
            out = Decision.A
        elif n_b > n_a:
            out = Decision.B
        else:
            out = Decision.UNLABELED
        results.append(SegmentResult(seg, out, (n_a, n_b, n_u)))
    return results
