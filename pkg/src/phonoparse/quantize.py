"""1-bit quantization of posteriors and right-context concatenation."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .bitops import pack_rows, rows_to_patterns
from .model import BinaryPattern, PosteriorSequence, ValidationError, validate_frame


class BoundaryPolicy(enum.Enum):
    CLAMP = "clamp"  # repeat the final frame to fill the window
    SKIP = "skip"  # no pattern for anchors whose window runs off the end

    @classmethod
    def parse(cls, text):
        try:
            return cls(text.strip().lower())
        except ValueError:
            raise ValueError(f"unknown boundary policy {text!r}") from None


@dataclass(frozen=True)
class QuantizeConfig:
    threshold: float = 0.5
    context: int = 0
    boundary_policy: BoundaryPolicy = BoundaryPolicy.CLAMP

    def __post_init__(self):
        if not 0.0 < self.threshold < 1.0:
            raise ValidationError(f"threshold must lie strictly inside (0, 1), got {self.threshold}")
        if self.context < 0:
            raise ValidationError(f"context must be non-negative, got {self.context}")

    def width(self, k: int) -> int:
        return k * (1 + self.context)


def binarize_frame(frame, cfg: QuantizeConfig = QuantizeConfig()) -> BinaryPattern:
    """Set bit k iff ``frame[k] >= threshold``.

    A value exactly at the threshold maps to 1.
    """
    frame = [float(v) for v in frame]
    violations = validate_frame(frame)
    if violations or not frame:
        raise ValidationError(f"invalid frame: {violations or 'empty'}", violations)
    bits = 0
    for k, p in enumerate(frame):
        if p >= cfg.threshold:
            bits |= 1 << k
    return BinaryPattern(bits, len(frame), 0)


def binarize_array(probs: np.ndarray, threshold: float = 0.5) -> np.ndarray:
    """(N, K) posteriors -> (N, K) boolean activity matrix."""
    return np.asarray(probs) >= threshold


def binarize_sequence(seq: PosteriorSequence, cfg: QuantizeConfig = QuantizeConfig()) -> list:
    bools = binarize_array(seq.array, cfg.threshold)
    return [BinaryPattern.from_bits(row) for row in bools]


def _window_indices(n: int, context: int, policy: BoundaryPolicy):
    """Frame indices for every anchor window, and which anchors are complete."""
    idx = np.arange(n)[:, None] + np.arange(context + 1)[None, :]
    valid = idx[:, -1] < n
    if policy is BoundaryPolicy.CLAMP:
        valid[:] = True
    return np.minimum(idx, n - 1), valid


def high_order(bools: np.ndarray, cfg: QuantizeConfig):
    """Concatenate every anchor frame with its ``context`` right neighbours.

    Returns ``(windows, valid)``: an (N, K*(1+context)) boolean matrix in
    anchor-first bit order and a length-N mask that is False for anchors
    dropped under SKIP (their rows are clamped filler and must be ignored).
    """
    bools = np.asarray(bools, dtype=bool)
    n, k = bools.shape
    idx, valid = _window_indices(n, cfg.context, cfg.boundary_policy)
    windows = bools[idx].reshape(n, k * (cfg.context + 1))
    return windows, valid


def concat_context(
    patterns: Sequence[BinaryPattern], index: int, cfg: QuantizeConfig
) -> Optional[BinaryPattern]:
    """High-order pattern anchored at ``index``, or None under SKIP at the tail."""
    if not patterns:
        raise ValidationError("no patterns to concatenate")
    k = patterns[0].width
    for p in patterns:
        if p.context != 0 or p.width != k:
            raise ValidationError("concat_context needs first-order patterns of equal K")
    n = len(patterns)
    if not 0 <= index < n:
        raise IndexError(f"anchor index {index} outside [0, {n})")
    if index + cfg.context >= n and cfg.boundary_policy is BoundaryPolicy.SKIP:
        return None
    bits = 0
    for j in range(cfg.context + 1):
        bits |= patterns[min(index + j, n - 1)].bits << (j * k)
    return BinaryPattern(bits, k * (1 + cfg.context), cfg.context)


def sequence_patterns(seq: PosteriorSequence, cfg: QuantizeConfig) -> list:
    """Binarize and concatenate in one go; None marks SKIP-dropped anchors."""
    windows, valid = high_order(binarize_array(seq.array, cfg.threshold), cfg)
    pats = rows_to_patterns(pack_rows(windows), windows.shape[1], cfg.context)
    return [p if ok else None for p, ok in zip(pats, valid)]
