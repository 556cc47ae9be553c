"""Binary similarity measures built on operational taxonomic units.

For two equal-width patterns p and q:

    a = #(1, 1)   positive matches
    b = #(0, 1)   p-absence mismatches
    c = #(1, 0)   q-absence mismatches
    d = #(0, 0)   negative matches

Every measure is a function of (a, b, c, d) only. Degenerate denominators
are resolved as follows so every score is total:

    JACCARD    a+b+c == 0            -> 1.0 (two empty patterns are identical)
    SIMPSON    min(a+b, a+c) == 0    -> 0.0
    AMPLE      c(a+b) == 0           -> +inf if a(c+d) > 0, else 0.0
    HELLINGER  (a+b)(a+c) == 0       -> 2.0
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .bitops import pattern_to_row, popcount_rows, positive_matches
from .model import BinaryPattern


class MetricKind(enum.Enum):
    JACCARD = "jaccard"
    INNERPRODUCT = "innerproduct"
    HAMMING = "hamming"
    AMPLE = "ample"
    SIMPSON = "simpson"
    HELLINGER = "hellinger"


class Polarity(enum.Enum):
    MAXIMIZE = "max"
    MINIMIZE = "min"


class Preference(enum.Enum):
    FIRST = "first"
    SECOND = "second"
    TIE = "tie"


DEFAULT_POLARITY = {kind: Polarity.MAXIMIZE for kind in MetricKind}
# Hellinger is 0 at a perfect match, so smaller is better.
DEFAULT_POLARITY[MetricKind.HELLINGER] = Polarity.MINIMIZE

INTEGER_METRICS = frozenset({MetricKind.INNERPRODUCT, MetricKind.HAMMING})


@dataclass(frozen=True)
class Metric:
    kind: MetricKind
    polarity: Polarity = None

    def __post_init__(self):
        if self.polarity is None:
            object.__setattr__(self, "polarity", DEFAULT_POLARITY[self.kind])

    @classmethod
    def parse(cls, text: str) -> "Metric":
        """Parse ``name`` or ``name:max`` / ``name:min`` (case-insensitive)."""
        name, _, pol = text.strip().lower().partition(":")
        try:
            kind = MetricKind(name)
        except ValueError:
            choices = ", ".join(k.value for k in MetricKind)
            raise ValueError(f"unknown metric {name!r} (choose from {choices})") from None
        if not pol:
            return cls(kind)
        try:
            return cls(kind, Polarity(pol))
        except ValueError:
            raise ValueError(f"unknown polarity {pol!r} (use max or min)") from None

    @property
    def name(self) -> str:
        return f"{self.kind.value}:{self.polarity.value}"

    def __str__(self):
        return self.name


def as_metric(metric) -> Metric:
    if isinstance(metric, Metric):
        return metric
    if isinstance(metric, MetricKind):
        return Metric(metric)
    return Metric.parse(metric)


@dataclass(frozen=True)
class TaxonomicUnits:
    a: int
    b: int
    c: int
    d: int

    @property
    def width(self) -> int:
        return self.a + self.b + self.c + self.d


def _check_widths(p: BinaryPattern, q: BinaryPattern):
    if p.width != q.width:
        raise ValueError(f"pattern widths differ: {p.width} vs {q.width}")


def taxonomic_units(p: BinaryPattern, q: BinaryPattern) -> TaxonomicUnits:
    _check_widths(p, q)
    a = (p.bits & q.bits).bit_count()
    c = p.bits.bit_count() - a
    b = q.bits.bit_count() - a
    return TaxonomicUnits(a, b, c, p.width - a - b - c)


def score_units(kind: MetricKind, a: int, b: int, c: int, d: int):
    if kind is MetricKind.INNERPRODUCT:
        return a + d
    if kind is MetricKind.HAMMING:
        return b + c
    if kind is MetricKind.JACCARD:
        den = a + b + c
        return a / den if den else 1.0
    if kind is MetricKind.AMPLE:
        num = a * (c + d)
        den = c * (a + b)
        if den == 0:
            return math.inf if num > 0 else 0.0
        return num / den
    if kind is MetricKind.SIMPSON:
        den = min(a + b, a + c)
        return a / den if den else 0.0
    if kind is MetricKind.HELLINGER:
        prod = (a + b) * (a + c)
        if prod == 0:
            return 2.0
        return 2.0 * math.sqrt(1.0 - a / math.sqrt(prod))
    raise ValueError(f"unknown metric {kind!r}")


def score(metric, p: BinaryPattern, q: BinaryPattern):
    """Similarity of p to q. Integer-valued for INNERPRODUCT and HAMMING."""
    u = taxonomic_units(p, q)
    return score_units(as_metric(metric).kind, u.a, u.b, u.c, u.d)


def score_arrays(kind: MetricKind, a, b, c, d) -> np.ndarray:
    """Vectorised ``score_units`` over broadcastable integer arrays.

    Uses the same operation order as the scalar path, so results agree
    bit-for-bit.
    """
    a, b, c, d = (np.asarray(x, dtype=np.int64) for x in (a, b, c, d))
    if kind is MetricKind.INNERPRODUCT:
        return a + d
    if kind is MetricKind.HAMMING:
        return b + c
    with np.errstate(divide="ignore", invalid="ignore"):
        if kind is MetricKind.JACCARD:
            den = a + b + c
            return np.where(den > 0, a / np.where(den > 0, den, 1), 1.0)
        if kind is MetricKind.AMPLE:
            num = a * (c + d)
            den = c * (a + b)
            ratio = num / np.where(den > 0, den, 1)
            degenerate = np.where(num > 0, np.inf, 0.0)
            return np.where(den > 0, ratio, degenerate)
        if kind is MetricKind.SIMPSON:
            den = np.minimum(a + b, a + c)
            return np.where(den > 0, a / np.where(den > 0, den, 1), 0.0)
        if kind is MetricKind.HELLINGER:
            prod = (a + b) * (a + c)
            safe = np.where(prod > 0, prod, 1).astype(np.float64)
            val = 2.0 * np.sqrt(1.0 - a / np.sqrt(safe))
            return np.where(prod > 0, val, 2.0)
    raise ValueError(f"unknown metric {kind!r}")


def score_matrix(kind: MetricKind, left: np.ndarray, right: np.ndarray, width: int,
                 left_pop=None, right_pop=None) -> np.ndarray:
    """Scores of every packed row in ``left`` against every row in ``right``."""
    if left_pop is None:
        left_pop = popcount_rows(left)
    if right_pop is None:
        right_pop = popcount_rows(right)
    a = positive_matches(left, right)
    if kind is MetricKind.HAMMING:
        return left_pop[:, None] + right_pop[None, :] - 2 * a
    if kind is MetricKind.INNERPRODUCT:
        return width - (left_pop[:, None] + right_pop[None, :] - 2 * a)
    c = left_pop[:, None] - a
    b = right_pop[None, :] - a
    d = width - a - b - c
    return score_arrays(kind, a, b, c, d)


def best_scores(metric, left: np.ndarray, right: np.ndarray, width: int,
                right_pop=None, block_elements: int = 1 << 18) -> np.ndarray:
    """Best score of each ``left`` row over all ``right`` rows.

    Works block-wise over ``left`` so the (n, m) score matrix never exists
    in full.
    """
    metric = as_metric(metric)
    if right_pop is None:
        right_pop = popcount_rows(right)
    left_pop = popcount_rows(left)
    n, m = left.shape[0], right.shape[0]
    step = max(1, block_elements // max(1, m))
    out = None
    for lo in range(0, n, step):
        sl = slice(lo, lo + step)
        s = score_matrix(metric.kind, left[sl], right, width, left_pop[sl], right_pop)
        best = best_of(metric, s, axis=1)
        if out is None:
            out = np.empty(n, dtype=best.dtype)
        out[sl] = best
    return out if out is not None else np.empty(0)


def better(metric, s1, s2) -> Preference:
    """Compare two scores of the same metric under its polarity."""
    metric = as_metric(metric)
    if s1 == s2:
        return Preference.TIE
    first_wins = s1 > s2 if metric.polarity is Polarity.MAXIMIZE else s1 < s2
    return Preference.FIRST if first_wins else Preference.SECOND


def best_of(metric, scores: np.ndarray, axis=-1) -> np.ndarray:
    metric = as_metric(metric)
    if metric.polarity is Polarity.MAXIMIZE:
        return np.max(scores, axis=axis)
    return np.min(scores, axis=axis)


def pairwise(metric, p: BinaryPattern, q: BinaryPattern):
    """``score`` computed through the packed popcount path (used for testing)."""
    metric = as_metric(metric)
    _check_widths(p, q)
    s = score_matrix(metric.kind, pattern_to_row(p)[None], pattern_to_row(q)[None], p.width)
    v = s[0, 0]
    return int(v) if metric.kind in INTEGER_METRICS else float(v)
