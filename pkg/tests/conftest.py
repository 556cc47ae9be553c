import numpy as np
import pytest

from phonoparse.model import BinaryPattern, Decision, SegmentAnnotation, Task


def bp(text, context=0):
    """Pattern from a bitstring, leftmost character = bit 0."""
    return BinaryPattern.from_string(text, context)


def seg(start, end, **labels):
    return SegmentAnnotation(
        start, end, {Task.parse(t): Task.parse(t).parse_label(v) for t, v in labels.items()}
    )


def random_pattern(rng, width):
    return BinaryPattern(int.from_bytes(rng.bytes((width + 7) // 8), "little") & ((1 << width) - 1), width)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


_CRITERIA = {}


@pytest.fixture
def criterion(request):
    """Record a one-line verdict for an acceptance criterion.

    Usage: ``criterion(n, ok, detail)``; the line is also printed so it is
    visible under ``-s``, and all lines are repeated in the terminal summary.
    """

    def record(number, ok, detail):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        _CRITERIA[number] = line
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for n in sorted(_CRITERIA):
            terminalreporter.write_line(_CRITERIA[n])
