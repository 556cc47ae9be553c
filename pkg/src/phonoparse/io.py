"""Line-oriented text formats for posteriors, labels, codebooks and reports.

Posterior file::

    PHONOPOST 1
    K=<k> N=<n>
    classes <name_1> ... <name_K>      (optional)
    frame_rate_hz <rate>               (optional)
    <p_1> ... <p_K>                    (N data lines)

Label file (``#`` starts a comment; start inclusive, end exclusive)::

    <start> <end> <task>=<label> [<task>=<label> ...]

Codebook file (leftmost bit = anchor frame, class 0)::

    PHONOCBK 1
    K=<k> context=<c> task=<task> class=<label> order=anchor-first-right-context
    <bitstring> <count>

All files are UTF-8 with LF line endings and single-space separators.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

from .codebook import BIT_ORDER, Codebook
from .model import BinaryPattern, PosteriorSequence, SegmentAnnotation, Task, ValidationError

POST_MAGIC = "PHONOPOST"
CBK_MAGIC = "PHONOCBK"
VERSION = "1"


class FormatError(ValidationError):
    """Malformed input file; carries the 1-based line number."""

    def __init__(self, message, line=None, source=None):
        self.line = line
        self.source = source
        where = ""
        if source is not None:
            where += f"{source}:"
        if line is not None:
            where += f"{line}: "
        elif where:
            where += " "
        super().__init__(where + message)


def _lines(text: str, source=None):
    lines = text.split("\n")
    for i, line in enumerate(lines, start=1):
        if "\r" in line:
            raise FormatError("CR characters are not allowed (use LF line endings)", i, source)
    if lines and lines[-1] == "":
        lines.pop()
    return lines


def _read_text(path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise FormatError(f"not UTF-8: {exc}", source=str(path)) from None


def _write_text(path, text: str):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _fmt_float(x: float) -> str:
    return repr(float(x))


def _parse_keyvals(line: str, lineno: int, required, source=None) -> dict:
    out = {}
    for tok in line.split(" "):
        key, eq, val = tok.partition("=")
        if not eq or not key or not val:
            raise FormatError(f"expected key=value, got {tok!r}", lineno, source)
        if key in out:
            raise FormatError(f"duplicate header key {key!r}", lineno, source)
        out[key] = val
    missing = [k for k in required if k not in out]
    extra = [k for k in out if k not in required]
    if missing:
        raise FormatError(f"header missing {', '.join(missing)}", lineno, source)
    if extra:
        raise FormatError(f"unknown header key {extra[0]!r}", lineno, source)
    return out


def _parse_int(text: str, what: str, lineno: int, source=None, minimum=None) -> int:
    try:
        value = int(text)
    except ValueError:
        raise FormatError(f"{what} is not an integer: {text!r}", lineno, source) from None
    if str(value) != text:
        raise FormatError(f"{what} is not a canonical integer: {text!r}", lineno, source)
    if minimum is not None and value < minimum:
        raise FormatError(f"{what} must be >= {minimum}, got {value}", lineno, source)
    return value


# ---- posteriors -----------------------------------------------------------


def format_posteriors(seq: PosteriorSequence) -> str:
    seq.check()
    out = [f"{POST_MAGIC} {VERSION}", f"K={seq.k} N={seq.n}"]
    if seq.class_names is not None:
        out.append("classes " + " ".join(seq.class_names))
    if seq.frame_rate_hz is not None:
        out.append("frame_rate_hz " + _fmt_float(seq.frame_rate_hz))
    for row in seq.frames:
        out.append(" ".join(_fmt_float(v) for v in row))
    return "\n".join(out) + "\n"


def parse_posteriors(text: str, source=None) -> PosteriorSequence:
    lines = _lines(text, source)
    if not lines:
        raise FormatError("empty file", 1, source)
    head = lines[0].split(" ")
    if head[0] != POST_MAGIC:
        raise FormatError(f"bad magic {head[0]!r}, expected {POST_MAGIC}", 1, source)
    if len(head) != 2 or head[1] != VERSION:
        raise FormatError(f"unsupported version line {lines[0]!r}", 1, source)
    if len(lines) < 2:
        raise FormatError("truncated file: missing K/N header", 2, source)
    kv = _parse_keyvals(lines[1], 2, ("K", "N"), source)
    k = _parse_int(kv["K"], "K", 2, source, minimum=1)
    n = _parse_int(kv["N"], "N", 2, source, minimum=1)

    class_names = None
    frame_rate = None
    i = 2
    while i < len(lines):
        tokens = lines[i].split(" ")
        if tokens[0] == "classes":
            if class_names is not None:
                raise FormatError("duplicate classes line", i + 1, source)
            class_names = tokens[1:]
            if len(class_names) != k or any(not c for c in class_names):
                raise FormatError(f"classes line must list {k} names", i + 1, source)
        elif tokens[0] == "frame_rate_hz":
            if frame_rate is not None:
                raise FormatError("duplicate frame_rate_hz line", i + 1, source)
            try:
                frame_rate = float(tokens[1]) if len(tokens) == 2 else math.nan
            except ValueError:
                frame_rate = math.nan
            if not (math.isfinite(frame_rate) and frame_rate > 0):
                raise FormatError("frame_rate_hz must be one positive number", i + 1, source)
        else:
            break
        i += 1

    data = lines[i:]
    if len(data) < n:
        raise FormatError(f"truncated file: expected {n} frames, found {len(data)}",
                          len(lines) + 1, source)
    if len(data) > n:
        raise FormatError(f"extra data: expected {n} frames", i + n + 1, source)
    frames = []
    for j, line in enumerate(data):
        lineno = i + j + 1
        fields = line.split(" ")
        if len(fields) != k:
            raise FormatError(f"ragged row: expected {k} values, got {len(fields)}", lineno, source)
        row = []
        for c, tok in enumerate(fields):
            try:
                v = float(tok)
            except ValueError:
                raise FormatError(f"value {tok!r} (class {c}) is not a number", lineno, source) from None
            if not math.isfinite(v) or not 0.0 <= v <= 1.0:
                raise FormatError(f"value {tok} (class {c}) out of range [0, 1]", lineno, source)
            row.append(v)
        frames.append(tuple(row))
    return PosteriorSequence(tuple(frames), class_names, frame_rate)


def read_posteriors(path) -> PosteriorSequence:
    return parse_posteriors(_read_text(path), str(path))


def write_posteriors(seq: PosteriorSequence, path):
    _write_text(path, format_posteriors(seq))


# ---- labels ---------------------------------------------------------------


def format_labels(annotations) -> str:
    out = []
    for seg in annotations:
        fields = [str(seg.start), str(seg.end)]
        for task in Task:
            if task in seg.labels:
                fields.append(f"{task.value}={task.token(seg.labels[task])}")
        out.append(" ".join(fields))
    return "".join(line + "\n" for line in out)


def parse_labels(text: str, n_frames=None, source=None) -> list:
    annotations = []
    spans = {task: [] for task in Task}  # (start, end, lineno)
    for lineno, raw in enumerate(_lines(text, source), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        if len(fields) < 3:
            raise FormatError("expected '<start> <end> <task>=<label> ...'", lineno, source)
        start = _parse_int(fields[0], "start", lineno, source, minimum=0)
        end = _parse_int(fields[1], "end", lineno, source, minimum=0)
        if end <= start:
            raise FormatError(f"reversed or empty range {start} {end}", lineno, source)
        if n_frames is not None and end > n_frames:
            raise FormatError(f"segment end {end} exceeds N={n_frames}", lineno, source)
        labels = {}
        for tok in fields[2:]:
            name, eq, value = tok.partition("=")
            if not eq:
                raise FormatError(f"expected task=label, got {tok!r}", lineno, source)
            try:
                task = Task.parse(name)
                label = task.parse_label(value)
            except ValueError as exc:
                raise FormatError(str(exc), lineno, source) from None
            if task in labels:
                raise FormatError(f"task {task.value} given twice", lineno, source)
            labels[task] = label
        for task in labels:
            spans[task].append((start, end, lineno))
        annotations.append(SegmentAnnotation(start, end, labels))
    for task, tier in spans.items():
        tier.sort()
        for (s0, e0, l0), (s1, e1, l1) in zip(tier, tier[1:]):
            if s1 < e0:
                first, second = sorted((l0, l1))
                raise FormatError(
                    f"{task.value} segment overlaps the one on line {first}", second, source
                )
    return annotations


def read_labels(path, n_frames=None) -> list:
    return parse_labels(_read_text(path), n_frames, str(path))


def write_labels(annotations, path):
    _write_text(path, format_labels(annotations))


# ---- codebooks ------------------------------------------------------------


def format_codebook(book: Codebook) -> str:
    out = [
        f"{CBK_MAGIC} {VERSION}",
        f"K={book.k} context={book.context} task={book.task.value} "
        f"class={book.task.token(book.label)} order={BIT_ORDER}",
    ]
    lines = sorted(f"{p.to_string()} {n}" for p, n in book.entries.items())
    return "\n".join(out + lines) + "\n"


def parse_codebook(text: str, source=None) -> Codebook:
    lines = _lines(text, source)
    if not lines:
        raise FormatError("empty file", 1, source)
    head = lines[0].split(" ")
    if head[0] != CBK_MAGIC:
        raise FormatError(f"bad magic {head[0]!r}, expected {CBK_MAGIC}", 1, source)
    if len(head) != 2 or head[1] != VERSION:
        raise FormatError(f"unsupported version line {lines[0]!r}", 1, source)
    if len(lines) < 2:
        raise FormatError("truncated file: missing header", 2, source)
    kv = _parse_keyvals(lines[1], 2, ("K", "context", "task", "class", "order"), source)
    k = _parse_int(kv["K"], "K", 2, source, minimum=1)
    context = _parse_int(kv["context"], "context", 2, source, minimum=0)
    if kv["order"] != BIT_ORDER:
        raise FormatError(f"unsupported bit order {kv['order']!r}", 2, source)
    try:
        task = Task.parse(kv["task"])
        label = task.parse_label(kv["class"])
    except ValueError as exc:
        raise FormatError(str(exc), 2, source) from None
    width = k * (1 + context)

    entries = {}
    for lineno, line in enumerate(lines[2:], start=3):
        fields = line.split(" ")
        if len(fields) != 2:
            raise FormatError("expected '<bitstring> <count>'", lineno, source)
        bitstring, count_text = fields
        if len(bitstring) != width:
            raise FormatError(f"bitstring width {len(bitstring)} != declared {width}", lineno, source)
        try:
            pattern = BinaryPattern.from_string(bitstring, context)
        except ValueError as exc:
            raise FormatError(str(exc), lineno, source) from None
        count = _parse_int(count_text, "count", lineno, source, minimum=1)
        if pattern in entries:
            raise FormatError(f"duplicate bitstring {bitstring}", lineno, source)
        entries[pattern] = count
    return Codebook(task, label, k, context, entries)


def read_codebook(path) -> Codebook:
    return parse_codebook(_read_text(path), str(path))


def write_codebook(book: Codebook, path):
    _write_text(path, format_codebook(book))


# ---- decisions and reports ------------------------------------------------


def format_decisions(results, task: Task) -> str:
    out = [f"# start end {task.value} votes_a votes_b votes_unlabeled"]
    for r in results:
        a, b, u = r.frame_votes
        out.append(f"{r.segment.start} {r.segment.end} {task.token(r.decision)} {a} {b} {u}")
    return "\n".join(out) + "\n"


def write_decisions(results, task: Task, path):
    _write_text(path, format_decisions(results, task))


def format_report(payload) -> str:
    return json.dumps(payload, indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_report(payload, path):
    _write_text(path, format_report(payload))


def read_report(path):
    return json.loads(_read_text(path))
