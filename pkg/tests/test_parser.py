import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from phonoparse.codebook import Codebook, CodebookPair, build_codebooks
from phonoparse.model import Decision, PosteriorSequence, Task, ValidationError
from phonoparse.parser import (
    ParseConfig,
    classify_frame,
    cross_evaluate,
    evaluate,
    parse_segment,
    parse_utterance,
)
from phonoparse.quantize import QuantizeConfig, sequence_patterns
from phonoparse.similarity import Metric, MetricKind
from phonoparse.synthgen import AccentMode, SynthConfig, generate

from conftest import bp, seg

A, B, U = Decision.A, Decision.B, Decision.UNLABELED
ALL_METRICS = [Metric(k) for k in MetricKind] + [Metric.parse("hamming:min")]


def pair(task, a, b, k, context=0):
    return CodebookPair(
        task,
        Codebook(task, A, k, context, {bp(x, context): 1 for x in a}),
        Codebook(task, B, k, context, {bp(x, context): 1 for x in b}),
    )


def test_classify_exact_member_wins():
    books = pair(Task.CV, ["11110000"], ["00000111", "00001011"], 8)
    assert classify_frame(bp("11110000"), books, "innerproduct") is A


def test_identical_books_abstain_for_every_metric(rng):
    books = pair(Task.CV, ["1100", "0110"], ["1100", "0110"], 4)
    for metric in ALL_METRICS:
        for v in range(16):
            p = bp(format(v, "04b"))
            assert classify_frame(p, books, metric) is U


def test_equal_hamming_example():
    # 010 is one bit from both 110 and 011
    books = pair(Task.CV, ["110"], ["011"], 3)
    assert classify_frame(bp("010"), books, "hamming:min") is U
    assert classify_frame(bp("010"), books, "innerproduct") is U
    assert classify_frame(bp("111"), books, "hamming:min") is U


def test_classify_width_and_empty_errors():
    books = pair(Task.CV, ["110"], ["011"], 3)
    with pytest.raises(ValidationError):
        classify_frame(bp("1100"), books, "jaccard")
    empty = pair(Task.CV, ["110"], [], 3)
    with pytest.raises(ValidationError):
        classify_frame(bp("110"), empty, "jaccard")


@pytest.mark.parametrize(
    "votes, decision, counts",
    [
        ([A, A, B], A, (2, 1, 0)),
        ([A, B], U, (1, 1, 0)),
        ([U, U, B], B, (0, 1, 2)),
        ([], U, (0, 0, 0)),
        ([U, U], U, (0, 0, 2)),
    ],
)
def test_parse_segment(votes, decision, counts):
    r = parse_segment(seg(0, max(1, len(votes)), cv="C"), votes)
    assert r.decision is decision and r.frame_votes == counts


def _seq(bits_rows):
    return PosteriorSequence.from_array(np.array(bits_rows, dtype=float) * 0.8 + 0.1)


def test_parse_utterance_simple():
    seq = _seq([[1, 1, 0], [1, 1, 0], [0, 0, 1]])
    books = pair(Task.CV, ["110"], ["001"], 3)
    cfg = ParseConfig(Task.CV)
    out = parse_utterance(seq, [seg(0, 2, cv="C"), seg(2, 3, cv="V")], books, cfg)
    assert [r.decision for r in out] == [A, B]
    assert parse_utterance(seq, [], books, cfg) == []


def test_parse_utterance_mismatch_errors():
    seq = _seq([[1, 1, 0]])
    books = pair(Task.CV, ["110"], ["001"], 3)
    with pytest.raises(ValidationError):
        parse_utterance(seq, [], books, ParseConfig(Task.STRESS))
    with pytest.raises(ValidationError):
        parse_utterance(seq, [], books, ParseConfig(Task.CV, quantize=QuantizeConfig(context=1)))
    with pytest.raises(ValidationError):
        parse_utterance(_seq([[1, 0]]), [], books, ParseConfig(Task.CV))
    with pytest.raises(ValidationError):
        parse_utterance(seq, [seg(0, 2, cv="C")], books, ParseConfig(Task.CV))


def test_evaluate_insufficient_segments():
    corpus = generate(SynthConfig(segments=20)).as_corpus()
    with pytest.raises(ValidationError, match="needs 50 .* has 20"):
        evaluate(corpus, ParseConfig(Task.CV), folds=1, fold_length=50)


def test_evaluate_separable_and_deterministic():
    corpus = generate(SynthConfig(segments=200, seed=4)).as_corpus()
    for metric in ("innerproduct", "jaccard", "hellinger", "hamming:min"):
        cfg = ParseConfig(Task.CV, metric=metric, quantize=QuantizeConfig(context=1))
        r1 = evaluate(corpus, cfg, folds=2, fold_length=150, seed=9)
        assert r1.segment_accuracy_mean == 1.0
        assert r1 == evaluate(corpus, cfg, folds=2, fold_length=150, seed=9)


def test_evaluate_accuracy_bounds_and_frame_consistency():
    corpus = generate(SynthConfig(segments=150, noise_flip_prob=0.25, seed=2)).as_corpus()
    cfg = ParseConfig(Task.STRESS, metric="simpson")
    rep = evaluate(corpus, cfg, folds=3, fold_length=100, seed=1)
    for (s, f), results in zip(rep.per_fold, rep.segment_results):
        assert 0.0 <= s <= 1.0 and 0.0 <= f <= 1.0
        correct = sum(r.decision is r.segment.labels[Task.STRESS] for r in results)
        assert s == correct / len(results)
        frames_ok = sum(r.frame_votes[0 if r.segment.labels[Task.STRESS] is A else 1] for r in results)
        frames = sum(sum(r.frame_votes) for r in results)
        assert f == frames_ok / frames


def test_evaluate_holdout_uses_last_fifth():
    corpus = generate(SynthConfig(segments=100, seed=5)).as_corpus()
    rep = evaluate(corpus, ParseConfig(Task.CV), folds=2, fold_length=50, holdout=True)
    assert all(len(r) == 10 for r in rep.segment_results)


def test_evaluate_segments_across_utterances():
    c1 = generate(SynthConfig(segments=30, seed=1)).as_corpus()
    c2 = generate(SynthConfig(segments=30, seed=2)).as_corpus()
    rep = evaluate(c1 + c2, ParseConfig(Task.CV), folds=1, fold_length=60)
    assert rep.segment_accuracy_mean == 1.0


def test_context_zero_equals_first_order_pipeline():
    corpus = generate(SynthConfig(segments=120, noise_flip_prob=0.2, seed=8))
    cfg = ParseConfig(Task.CV)
    rep = evaluate(corpus.as_corpus(), cfg, folds=1, fold_length=120)
    # first-order: per-frame binarized patterns only, no windowing at all
    bits = corpus.sequence.array >= 0.5
    pats = [bp("".join("1" if b else "0" for b in row)) for row in bits]
    books = build_codebooks(pats, corpus.annotations, Task.CV)
    direct = []
    for s in corpus.annotations:
        direct.append(parse_segment(s, [classify_frame(pats[t], books, cfg.metric) for t in range(s.start, s.end)]))
    assert [r.decision for r in rep.segment_results[0]] == [r.decision for r in direct]


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**31), st.sampled_from([0, 1, 2]), st.sampled_from(ALL_METRICS))
def test_permutation_invariance(seed, context, metric):
    corpus = generate(SynthConfig(k=12, segments=40, noise_flip_prob=0.2, seed=seed))
    perm = np.random.default_rng(seed).permutation(12)
    q = QuantizeConfig(context=context)
    cfg = ParseConfig(Task.STRESS, metric=metric, quantize=q)

    def run(seq):
        books = build_codebooks(sequence_patterns(seq, q), corpus.annotations, Task.STRESS)
        return [r.decision for r in parse_utterance(seq, corpus.annotations, books, cfg)]

    permuted = PosteriorSequence.from_array(corpus.sequence.array[:, perm])
    assert run(corpus.sequence) == run(permuted)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**31), st.sampled_from([0, 1, 3]))
def test_hamming_min_equals_innerproduct(seed, context):
    corpus = generate(SynthConfig(k=12, segments=80, noise_flip_prob=0.2, seed=seed)).as_corpus()
    q = QuantizeConfig(context=context)
    r1 = evaluate(corpus, ParseConfig(Task.CV, "innerproduct", q), folds=2, fold_length=60, seed=seed)
    r2 = evaluate(corpus, ParseConfig(Task.CV, "hamming:min", q), folds=2, fold_length=60, seed=seed)
    assert r1.per_fold == r2.per_fold
    assert [[r.decision for r in f] for f in r1.segment_results] == [
        [r.decision for r in f] for f in r2.segment_results
    ]


def _cross(mode, seed=0):
    corpus = generate(
        SynthConfig(k=12, segments=200, noise_flip_prob=0.15, seed=seed, accent_mode=mode)
    ).as_corpus()
    same = evaluate(corpus, ParseConfig(Task.STRESS), folds=2, fold_length=150, seed=seed)
    cross = cross_evaluate(
        corpus, ParseConfig(Task.ACCENT, cross_task_books=Task.STRESS),
        folds=2, fold_length=150, seed=seed,
    )
    return same, cross


def test_cross_evaluate_copy_labels():
    same, cross = _cross(AccentMode.COPY_STRESS)
    assert cross.segment_accuracy_mean == same.segment_accuracy_mean
    assert cross.config["books_task"] == "stress"


def test_cross_evaluate_complement_labels():
    same, cross = _cross(AccentMode.COMPLEMENT_STRESS, seed=3)
    for fs, fc in zip(same.segment_results, cross.segment_results):
        assert [r.decision for r in fs] == [r.decision for r in fc]
        decided = [r for r in fs if r.decision is not U]
        ok = sum(r.decision is r.segment.labels[Task.STRESS] for r in decided) / len(decided)
        ok_cross = sum(r.decision is r.segment.labels[Task.ACCENT] for r in decided) / len(decided)
        assert ok_cross == pytest.approx(1 - ok, abs=1e-12)


def test_cross_evaluate_requires_books_task():
    corpus = generate(SynthConfig(segments=10)).as_corpus()
    with pytest.raises(ValidationError):
        cross_evaluate(corpus, ParseConfig(Task.ACCENT), folds=1, fold_length=5)
    only_cv = generate(
        SynthConfig(segments=10, templates_per_class={(Task.CV, A): 2, (Task.CV, B): 2})
    )
    anns = [seg(s.start, s.end, cv=Task.CV.token(s.labels[Task.CV])) for s in only_cv.annotations]
    with pytest.raises(ValidationError):
        cross_evaluate([(only_cv.sequence, anns)],
                       ParseConfig(Task.ACCENT, cross_task_books=Task.STRESS), folds=1, fold_length=5)


def test_evaluate_rejects_bad_folds():
    corpus = generate(SynthConfig(segments=10)).as_corpus()
    with pytest.raises(ValidationError):
        evaluate(corpus, ParseConfig(Task.CV), folds=0, fold_length=5)
