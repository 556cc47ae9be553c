"""Packed uint64 representation of pattern rows and popcount kernels.

A row of ``width`` bits is stored in ``ceil(width / 64)`` little-endian
words; bit index ``i`` lives in word ``i // 64`` at position ``i % 64``.
"""

import numpy as np

from .model import BinaryPattern


def n_words(width: int) -> int:
    return (width + 63) // 64


def pack_rows(bools: np.ndarray) -> np.ndarray:
    """(M, width) boolean matrix -> (M, words) uint64."""
    bools = np.asarray(bools, dtype=bool)
    m, width = bools.shape
    words = n_words(width)
    packed = np.packbits(bools, axis=1, bitorder="little")
    padded = np.zeros((m, words * 8), dtype=np.uint8)
    padded[:, : packed.shape[1]] = packed
    return padded.view("<u8").astype(np.uint64, copy=False).reshape(m, words)


def unpack_rows(packed: np.ndarray, width: int) -> np.ndarray:
    packed = np.ascontiguousarray(packed, dtype="<u8")
    raw = packed.view(np.uint8).reshape(packed.shape[0], -1)
    return np.unpackbits(raw, axis=1, bitorder="little", count=width).astype(bool)


def pattern_to_row(p: BinaryPattern) -> np.ndarray:
    words = n_words(p.width)
    return np.frombuffer(p.bits.to_bytes(words * 8, "little"), dtype="<u8").astype(np.uint64)


def patterns_to_rows(patterns, width: int) -> np.ndarray:
    words = n_words(width)
    out = np.zeros((len(patterns), words), dtype=np.uint64)
    for i, p in enumerate(patterns):
        if p.width != width:
            raise ValueError(f"pattern width {p.width} != {width}")
        out[i] = np.frombuffer(p.bits.to_bytes(words * 8, "little"), dtype="<u8")
    return out


def row_to_int(row: np.ndarray) -> int:
    return int.from_bytes(np.ascontiguousarray(row, dtype="<u8").tobytes(), "little")


def rows_to_patterns(rows: np.ndarray, width: int, context: int) -> list:
    return [BinaryPattern(row_to_int(r), width, context) for r in rows]


def popcount_rows(rows: np.ndarray) -> np.ndarray:
    return np.bitwise_count(rows).sum(axis=1, dtype=np.int64)


def positive_matches(left: np.ndarray, right: np.ndarray) -> np.ndarray:
    """Matrix of popcount(left[i] & right[j]) with shape (n, m)."""
    n, words = left.shape
    out = np.zeros((n, right.shape[0]), dtype=np.int64)
    for w in range(words):
        out += np.bitwise_count(left[:, w, None] & right[None, :, w])
    return out
