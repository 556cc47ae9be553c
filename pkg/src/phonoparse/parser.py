"""Top-down parsing: codebook matching per frame, majority vote per segment."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .bitops import pack_rows, pattern_to_row, rows_to_patterns
from .codebook import Codebook, CodebookPair, match_rows
from .model import (
    BinaryPattern,
    Decision,
    PosteriorSequence,
    SegmentAnnotation,
    Task,
    ValidationError,
    validate_annotations,
)
from .quantize import QuantizeConfig, binarize_array, high_order
from .similarity import Metric, Polarity, as_metric

# integer codes used in vectorised decision arrays
_A, _B, _U, _ABSENT = 0, 1, 2, -1
_CODE_TO_DECISION = {_A: Decision.A, _B: Decision.B, _U: Decision.UNLABELED}


@dataclass(frozen=True)
class ParseConfig:
    task: Task
    metric: Metric = Metric.parse("innerproduct")
    quantize: QuantizeConfig = QuantizeConfig()
    # classify with this task's codebooks while scoring against ``task`` labels
    cross_task_books: Optional[Task] = None

    def __post_init__(self):
        object.__setattr__(self, "metric", as_metric(self.metric))

    @property
    def books_task(self) -> Task:
        return self.cross_task_books or self.task


@dataclass(frozen=True)
class SegmentResult:
    segment: SegmentAnnotation
    decision: Decision
    frame_votes: tuple  # (count_a, count_b, count_unlabeled)


def _decide(sa: np.ndarray, sb: np.ndarray, metric: Metric) -> np.ndarray:
    if metric.polarity is Polarity.MAXIMIZE:
        a_wins, b_wins = sa > sb, sb > sa
    else:
        a_wins, b_wins = sa < sb, sb < sa
    out = np.full(sa.shape, _U, dtype=np.int8)
    out[a_wins] = _A
    out[b_wins] = _B
    return out


def classify_rows(rows: np.ndarray, books: CodebookPair, metric) -> np.ndarray:
    """Decision codes for packed query rows (0 = A, 1 = B, 2 = unlabeled).

    Each distinct row is scored once.
    """
    metric = as_metric(metric)
    if rows.shape[0] == 0:
        return np.empty(0, dtype=np.int8)
    uniq, inverse = np.unique(rows, axis=0, return_inverse=True)
    sa = match_rows(uniq, books.class_a, metric)
    sb = match_rows(uniq, books.class_b, metric)
    return _decide(sa, sb, metric)[inverse.reshape(-1)]


def classify_frame(pattern: BinaryPattern, books: CodebookPair, metric) -> Decision:
    if pattern.width != books.width:
        raise ValidationError(f"pattern width {pattern.width} != codebook width {books.width}")
    code = classify_rows(pattern_to_row(pattern)[None], books, metric)[0]
    return _CODE_TO_DECISION[int(code)]


def parse_segment(seg: SegmentAnnotation, frame_decisions: Sequence[Decision]) -> SegmentResult:
    """Majority count over frame decisions; unlabeled frames abstain.

    Equal A/B votes (including none at all) leave the segment unlabeled.
    """
    n_a = sum(1 for d in frame_decisions if d is Decision.A)
    n_b = sum(1 for d in frame_decisions if d is Decision.B)
    n_u = len(frame_decisions) - n_a - n_b
    if n_a > n_b:
        decision = Decision.A
    elif n_b > n_a:
        decision = Decision.B
    else:
        decision = Decision.UNLABELED
    return SegmentResult(seg, decision, (n_a, n_b, n_u))


def _segment_from_codes(seg: SegmentAnnotation, codes: np.ndarray) -> SegmentResult:
    present = codes[codes != _ABSENT].tolist()
    return parse_segment(seg, [_CODE_TO_DECISION[c] for c in present])


def utterance_rows(seq: PosteriorSequence, qcfg: QuantizeConfig):
    """Packed high-order patterns for every anchor frame plus the validity mask."""
    windows, valid = high_order(binarize_array(seq.array, qcfg.threshold), qcfg)
    return pack_rows(windows), valid


def _check_books(books: CodebookPair, k: int, cfg: ParseConfig):
    if books.task is not cfg.books_task:
        raise ValidationError(
            f"codebooks are for task {books.task.value}, config expects {cfg.books_task.value}"
        )
    if books.k != k:
        raise ValidationError(f"codebooks built for K={books.k}, data has K={k}")
    if books.context != cfg.quantize.context:
        raise ValidationError(
            f"codebooks built with context {books.context}, config uses {cfg.quantize.context}"
        )
    for book in (books.class_a, books.class_b):
        if not book.entries:
            raise ValidationError(f"empty codebook for {book.task.value}/{book.class_name}")


def frame_decision_codes(rows, valid, books: CodebookPair, metric) -> np.ndarray:
    codes = np.full(rows.shape[0], _ABSENT, dtype=np.int8)
    codes[valid] = classify_rows(rows[valid], books, metric)
    return codes


def parse_utterance(
    seq: PosteriorSequence,
    annotations: Sequence[SegmentAnnotation],
    books: CodebookPair,
    cfg: ParseConfig,
) -> list:
    """binarize -> concat context -> classify frames -> vote per segment."""
    seq.check()
    _check_books(books, seq.k, cfg)
    problems = validate_annotations(annotations, seq.n)
    if problems:
        raise ValidationError(f"invalid annotations: {problems[0]}", problems)
    if not annotations:
        return []
    rows, valid = utterance_rows(seq, cfg.quantize)
    codes = frame_decision_codes(rows, valid, books, cfg.metric)
    return [_segment_from_codes(seg, codes[seg.start : seg.end]) for seg in annotations]


def _rows_to_codebook(rows: np.ndarray, task: Task, label: Decision, k: int, context: int) -> Codebook:
    width = k * (1 + context)
    if rows.shape[0] == 0:
        return Codebook(task, label, k, context, {})
    uniq, counts = np.unique(rows, axis=0, return_counts=True)
    pats = rows_to_patterns(uniq, width, context)
    return Codebook(task, label, k, context, dict(zip(pats, counts.tolist())))


@dataclass(frozen=True)
class EvalReport:
    task: Task
    metric: Metric
    context: int
    folds: int
    segment_accuracy_mean: float
    frame_accuracy_mean: float
    per_fold: tuple  # ((segment_accuracy, frame_accuracy), ...)
    seed: int
    config: dict = field(default_factory=dict)
    # per-fold SegmentResult lists; kept out of equality and serialisation
    segment_results: tuple = field(default=(), compare=False, repr=False)

    def as_dict(self) -> dict:
        return {
            "task": self.task.value,
            "metric": self.metric.name,
            "context": self.context,
            "folds": self.folds,
            "seed": self.seed,
            "segment_accuracy_mean": self.segment_accuracy_mean,
            "frame_accuracy_mean": self.frame_accuracy_mean,
            "per_fold": [
                {"segment_accuracy": s, "frame_accuracy": f} for s, f in self.per_fold
            ],
            "config": dict(self.config),
        }


@dataclass
class _Prepared:
    rows: np.ndarray
    valid: np.ndarray


def _holdout_split(window: list) -> tuple:
    n_test = max(1, len(window) // 5)
    return window[:-n_test], window[-n_test:]


def evaluate(
    corpus: Sequence[tuple],
    cfg: ParseConfig,
    folds: int = 5,
    fold_length: int = 1000,
    seed: int = 0,
    holdout: bool = False,
) -> EvalReport:
    """Average accuracy over random windows of consecutive annotated segments.

    Per fold a window of ``fold_length`` consecutive segments is drawn with a
    generator seeded by ``(seed, fold)``. Codebooks are built from the
    window and the same window is classified; with ``holdout`` the last
    fifth of the window is held out for testing instead. Unlabeled
    decisions count as errors at both frame and segment level.
    """
    if folds < 1:
        raise ValidationError(f"folds must be >= 1, got {folds}")
    if fold_length < 1 or (holdout and fold_length < 2):
        raise ValidationError(f"fold_length too small: {fold_length}")
    task, books_task = cfg.task, cfg.books_task
    qcfg = cfg.quantize

    prepared = []
    items = []
    k = None
    for u, (seq, annotations) in enumerate(corpus):
        seq.check()
        if k is None:
            k = seq.k
        elif seq.k != k:
            raise ValidationError(f"utterance {u} has K={seq.k}, expected {k}")
        problems = validate_annotations(annotations, seq.n)
        if problems:
            raise ValidationError(f"utterance {u}: {problems[0]}", problems)
        prepared.append(_Prepared(*utterance_rows(seq, qcfg)))
        for seg in sorted(annotations, key=lambda s: s.start):
            if task in seg.labels and books_task in seg.labels:
                items.append((u, seg))

    if len(items) < fold_length:
        raise ValidationError(
            f"evaluation needs {fold_length} consecutive annotated segments, "
            f"corpus has {len(items)}"
        )

    per_fold = []
    fold_results = []
    for f in range(folds):
        rng = np.random.default_rng([seed, f])
        start = int(rng.integers(0, len(items) - fold_length + 1))
        window = items[start : start + fold_length]
        train, test = _holdout_split(window) if holdout else (window, window)

        by_label = {Decision.A: [], Decision.B: []}
        for u, seg in train:
            p = prepared[u]
            sl = slice(seg.start, seg.end)
            by_label[seg.labels[books_task]].append(p.rows[sl][p.valid[sl]])
        words = prepared[0].rows.shape[1]
        books = CodebookPair(
            books_task,
            *(
                _rows_to_codebook(
                    np.concatenate(by_label[lab] or [np.empty((0, words), np.uint64)]),
                    books_task, lab, k, qcfg.context,
                )
                for lab in (Decision.A, Decision.B)
            ),
        )
        _check_books(books, k, cfg)

        # classify every distinct test pattern in one pass
        chunks = [prepared[u].rows[seg.start : seg.end] for u, seg in test]
        masks = [prepared[u].valid[seg.start : seg.end] for u, seg in test]
        all_rows = np.concatenate(chunks)
        all_valid = np.concatenate(masks)
        codes = frame_decision_codes(all_rows, all_valid, books, cfg.metric)

        results = []
        seg_correct = frame_correct = frame_total = 0
        pos = 0
        for (u, seg), chunk in zip(test, chunks):
            seg_codes = codes[pos : pos + len(chunk)]
            pos += len(chunk)
            res = _segment_from_codes(seg, seg_codes)
            results.append(res)
            truth = seg.labels[task]
            truth_code = _A if truth is Decision.A else _B
            seg_correct += res.decision is truth
            present = seg_codes[seg_codes != _ABSENT]
            frame_correct += int(np.count_nonzero(present == truth_code))
            frame_total += int(present.size)
        seg_acc = seg_correct / len(test)
        frame_acc = frame_correct / frame_total if frame_total else 0.0
        per_fold.append((seg_acc, frame_acc))
        fold_results.append(tuple(results))

    return EvalReport(
        task=task,
        metric=cfg.metric,
        context=qcfg.context,
        folds=folds,
        segment_accuracy_mean=sum(s for s, _ in per_fold) / folds,
        frame_accuracy_mean=sum(f for _, f in per_fold) / folds,
        per_fold=tuple(per_fold),
        seed=seed,
        config={
            "task": task.value,
            "books_task": books_task.value,
            "metric": cfg.metric.name,
            "context": qcfg.context,
            "threshold": qcfg.threshold,
            "boundary_policy": qcfg.boundary_policy.value,
            "folds": folds,
            "fold_length": fold_length,
            "seed": seed,
            "holdout": holdout,
        },
        segment_results=tuple(fold_results),
    )


def cross_evaluate(corpus, cfg: ParseConfig, folds=5, fold_length=1000, seed=0, holdout=False):
    """``evaluate`` using codebooks of ``cfg.cross_task_books``.

    Book classes map positionally onto the scored task's classes
    (Stressed <-> Accented, Unstressed <-> Unaccented).
    """
    if cfg.cross_task_books is None:
        raise ValidationError("cross_evaluate needs cfg.cross_task_books")
    for task in (cfg.task, cfg.cross_task_books):
        if not any(task in seg.labels for _, anns in corpus for seg in anns):
            raise ValidationError(f"corpus has no {task.value} annotations")
    return evaluate(corpus, cfg, folds, fold_length, seed, holdout)
