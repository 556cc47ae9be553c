import math

import pytest

from phonoparse.model import (
    BinaryPattern,
    Decision,
    PosteriorSequence,
    SegmentAnnotation,
    Task,
    ValidationError,
    frame_labels,
    validate_annotations,
    validate_sequence,
)

from conftest import seg


def test_valid_sequence_has_no_violations():
    seq = PosteriorSequence([[0.1, 0.9, 0.0], [1.0, 0.5, 0.2]])
    assert validate_sequence(seq) == []
    assert seq.n == 2 and seq.k == 3


def test_out_of_range_value_is_located():
    rows = [[0.5, 0.5, 0.5] for _ in range(5)]
    rows[3][2] = 1.5
    (v,) = validate_sequence(PosteriorSequence(rows))
    assert (v.frame, v.klass) == (3, 2)
    assert "out of [0,1]" in v.rule


def test_ragged_row_is_located():
    rows = [[0.5, 0.5, 0.5] for _ in range(7)]
    rows[5] = [0.5, 0.5]
    (v,) = validate_sequence(PosteriorSequence(rows))
    assert v.frame == 5 and "ragged K" in v.rule


@pytest.mark.parametrize("bad", [math.nan, math.inf, -0.1])
def test_non_finite_and_negative_rejected(bad):
    violations = validate_sequence(PosteriorSequence([[0.2, bad]]))
    assert [(v.frame, v.klass) for v in violations] == [(0, 1)]


def test_empty_sequence_and_class_name_mismatch():
    assert validate_sequence(PosteriorSequence([]))
    seq = PosteriorSequence([[0.1, 0.2]], class_names=["a"])
    assert any("class_names" in v.rule for v in validate_sequence(seq))


def test_check_raises_with_violations():
    with pytest.raises(ValidationError) as info:
        PosteriorSequence([[2.0]]).check()
    assert len(info.value.violations) == 1


def test_array_is_read_only():
    seq = PosteriorSequence([[0.1, 0.2]])
    with pytest.raises(ValueError):
        seq.array[0, 0] = 1.0


def test_pattern_string_round_trip_and_bit_order():
    p = BinaryPattern.from_string("1101")
    assert p.bits == 0b1011
    assert p.to_string() == "1101"
    assert p.to_bits() == [1, 1, 0, 1]
    assert BinaryPattern.from_bits([1, 1, 0, 1]) == p


def test_pattern_frame_extraction():
    # K=3, context=1: anchor "110", right neighbour "001"
    p = BinaryPattern.from_string("110001", context=1)
    assert p.k == 3
    assert p.frame(0).to_string() == "110"
    assert p.frame(1).to_string() == "001"


@pytest.mark.parametrize("args", [(0b1000, 3, 0), (1, 0, 0), (1, 5, 1), (1, 4, -1)])
def test_pattern_invariants(args):
    with pytest.raises(ValidationError):
        BinaryPattern(*args)


def test_segment_invariants():
    with pytest.raises(ValidationError):
        SegmentAnnotation(3, 3)
    with pytest.raises(ValidationError):
        SegmentAnnotation(-1, 3)
    with pytest.raises(ValidationError):
        SegmentAnnotation(0, 3, {Task.CV: Decision.UNLABELED})


def test_annotation_overlap_is_per_tier():
    anns = [seg(0, 5, cv="C"), seg(3, 8, stress="1"), seg(5, 9, cv="V")]
    assert validate_annotations(anns, 9) == []
    crafted = anns + [seg(8, 10, cv="C")]
    problems = validate_annotations(crafted, 10)
    assert len(problems) == 1 and "cv" in problems[0].rule


def test_annotation_bounds():
    problems = validate_annotations([seg(0, 12, cv="C")], 10)
    assert problems and "exceeds" in problems[0].rule


def test_frame_labels_by_containment():
    anns = [seg(1, 3, cv="C"), seg(3, 4, cv="V")]
    assert frame_labels(anns, Task.CV, 5) == [None, Decision.A, Decision.A, Decision.B, None]


def test_task_labels_are_binary():
    for task in Task:
        assert len(task.class_names) == 2
        a, b = task.label_tokens
        assert task.parse_label(a) is Decision.A
        assert task.parse_label(b) is Decision.B
        assert task.parse_label(task.class_names[1].upper()) is Decision.B
    with pytest.raises(ValueError):
        Task.CV.parse_label("X")
