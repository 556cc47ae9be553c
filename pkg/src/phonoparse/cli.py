"""Command-line entry point.

Exit status: 0 on success, 1 on data/validation/I-O errors, 2 on usage
errors (argparse's own convention).
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import io
from .codebook import CodebookPair, build_codebooks, sparsity_stats
from .model import Decision, Task, ValidationError
from .parser import ParseConfig, cross_evaluate, evaluate, parse_utterance
from .quantize import BoundaryPolicy, QuantizeConfig, sequence_patterns
from .similarity import Metric, MetricKind
from .synthgen import AccentMode, SynthConfig, TemplateOverlap, generate

log = logging.getLogger("phonoparse")

SWEEP_CONTEXTS = (0, 1, 2, 4, 6)


class UsageError(Exception):
    pass


def _metric_list(text):
    if text.strip().lower() == "all":
        return [Metric(kind) for kind in MetricKind]
    try:
        metrics = [Metric.parse(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if not metrics:
        raise UsageError("no metric given")
    return metrics


def _context_list(text):
    try:
        contexts = [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise UsageError(f"bad --context {text!r}") from None
    if not contexts or min(contexts) < 0:
        raise UsageError(f"bad --context {text!r}")
    return contexts


def _common(parser: argparse.ArgumentParser):
    g = parser.add_argument_group("pipeline options")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--metric", default="innerproduct",
                   help="name[:max|min], comma list, or 'all' (default innerproduct)")
    g.add_argument("--context", default=None,
                   help="right-context size; eval sweeps 0,1,2,4,6 when omitted")
    g.add_argument("--threshold", type=float, default=0.5)
    g.add_argument("--boundary-policy", default="clamp", choices=[p.value for p in BoundaryPolicy])
    g.add_argument("--task", default="cv", choices=[t.value for t in Task])
    g.add_argument("--folds", type=int, default=5)
    g.add_argument("--fold-length", type=int, default=1000)
    g.add_argument("--holdout", action="store_true",
                   help="test on the last fifth of each window, build books from the rest")
    g.add_argument("--report", type=Path, default=None, help="write a JSON report here")
    g.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="phonoparse",
        description="Classify annotated segments by matching binarized posterior patterns against class codebooks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="write a synthetic corpus (<out>.post, <out>.segs)")
    _common(p)
    p.add_argument("--out", type=Path, required=True, help="output prefix")
    p.add_argument("--k", type=int, default=15)
    p.add_argument("--segments", type=int, default=1200)
    p.add_argument("--templates", type=int, default=4, help="templates per class")
    p.add_argument("--emit", default="cv,stress,accent",
                   help="comma list of tasks whose templates shape the frames")
    p.add_argument("--noise", type=float, default=0.0, help="per-bit flip probability")
    p.add_argument("--softness", type=float, default=0.1)
    p.add_argument("--frames-min", type=int, default=3)
    p.add_argument("--frames-max", type=int, default=8)
    p.add_argument("--overlap", default="disjoint", choices=[o.value for o in TemplateOverlap])
    p.add_argument("--accent-mode", default="independent", choices=[m.value for m in AccentMode])

    p = sub.add_parser("build", help="build the two codebooks of a task")
    _common(p)
    p.add_argument("posteriors", type=Path)
    p.add_argument("--labels", type=Path, default=None)
    p.add_argument("--out", type=Path, default=None, help="output prefix (default: input stem)")

    p = sub.add_parser("parse", help="classify annotated segments with given codebooks")
    _common(p)
    p.add_argument("posteriors", type=Path)
    p.add_argument("--labels", type=Path, default=None)
    p.add_argument("--books", type=Path, nargs=2, required=True, metavar="CBK")
    p.add_argument("--out", type=Path, default=None, help="decisions file (default stdout)")

    for name, helptext in (("eval", "k-fold evaluation with in-fold codebooks"),
                           ("cross-eval", "evaluate one task with another task's codebooks")):
        p = sub.add_parser(name, help=helptext)
        _common(p)
        p.add_argument("posteriors", type=Path, nargs="+")
        p.add_argument("--labels", type=Path, default=None,
                       help="label file (only with a single posterior file)")
        if name == "cross-eval":
            p.add_argument("--books-task", default=None, choices=[t.value for t in Task],
                           help="task whose codebooks classify (default: the other prosodic task)")

    p = sub.add_parser("stats", help="sparsity statistics of binarized patterns")
    _common(p)
    p.add_argument("posteriors", type=Path)
    p.add_argument("--labels", type=Path, default=None,
                   help="also report codebook sizes for --task")
    return parser


def _labels_path(post: Path, explicit):
    return explicit if explicit is not None else post.with_suffix(".segs")


def _quantize(args, context=None) -> QuantizeConfig:
    if context is None:
        contexts = _context_list(args.context) if args.context else [0]
        if len(contexts) != 1:
            raise UsageError("this command takes a single --context value")
        context = contexts[0]
    try:
        return QuantizeConfig(args.threshold, context, BoundaryPolicy.parse(args.boundary_policy))
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _single_metric(args) -> Metric:
    metrics = _metric_list(args.metric)
    if len(metrics) != 1:
        raise UsageError("this command takes a single --metric")
    return metrics[0]


def cmd_gen(args):
    tasks = [Task.parse(t) for t in args.emit.split(",") if t.strip()]
    templates = {(t, lab): args.templates for t in tasks for lab in (Decision.A, Decision.B)}
    cfg = SynthConfig(
        k=args.k,
        templates_per_class=templates,
        noise_flip_prob=args.noise,
        softness=args.softness,
        segments=args.segments,
        frames_per_segment=(args.frames_min, args.frames_max),
        seed=args.seed,
        template_overlap=TemplateOverlap(args.overlap),
        accent_mode=AccentMode(args.accent_mode),
    )
    corpus = generate(cfg)
    post = args.out.with_name(args.out.name + ".post")
    segs = args.out.with_name(args.out.name + ".segs")
    io.write_posteriors(corpus.sequence, post)
    io.write_labels(corpus.annotations, segs)
    print(f"wrote {post} ({corpus.sequence.n} frames, K={cfg.k}) and {segs} "
          f"({len(corpus.annotations)} segments)")


def cmd_build(args):
    task = Task.parse(args.task)
    seq = io.read_posteriors(args.posteriors)
    anns = io.read_labels(_labels_path(args.posteriors, args.labels), seq.n)
    qcfg = _quantize(args)
    pats = sequence_patterns(seq, qcfg)
    books = build_codebooks(pats, anns, task, k=seq.k, context=qcfg.context)
    prefix = args.out if args.out is not None else args.posteriors.with_suffix("")
    for book in (books.class_a, books.class_b):
        path = prefix.with_name(f"{prefix.name}.{task.value}.{book.class_name.lower()}.cbk")
        io.write_codebook(book, path)
        print(f"{path}: {len(book)} codes from {book.total} frames")


def cmd_parse(args):
    seq = io.read_posteriors(args.posteriors)
    anns = io.read_labels(_labels_path(args.posteriors, args.labels), seq.n)
    books = [io.read_codebook(p) for p in args.books]
    books.sort(key=lambda b: b.label.value)
    pair = CodebookPair(books[0].task, books[0], books[1])
    # context defaults to the books' own; an explicit mismatching value is an error
    qcfg = _quantize(args) if args.context else _quantize(args, pair.context)
    cfg = ParseConfig(pair.task, _single_metric(args), qcfg)
    results = parse_utterance(seq, anns, pair, cfg)
    if args.out is None:
        sys.stdout.write(io.format_decisions(results, pair.task))
    else:
        io.write_decisions(results, pair.task, args.out)


def _load_corpus(args):
    if args.labels is not None and len(args.posteriors) != 1:
        raise UsageError("--labels can only be used with a single posterior file")
    corpus = []
    for post in args.posteriors:
        seq = io.read_posteriors(post)
        corpus.append((seq, io.read_labels(_labels_path(post, args.labels), seq.n)))
    return corpus


def format_table(reports, title, attr) -> str:
    contexts = sorted({r.context for r in reports})
    rows = {}
    for r in reports:
        books = r.config.get("books_task", r.task.value)
        label = r.task.value if books == r.task.value else f"{r.task.value} via {books} books"
        rows.setdefault(f"{label} / {r.metric.name}", {})[r.context] = getattr(r, attr)
    head_w = max(len("Task / Context Size"), *(len(k) for k in rows))
    lines = [title, "Task / Context Size".ljust(head_w) + "".join(f"{c:>8}" for c in contexts)]
    for name, vals in rows.items():
        cells = "".join(
            f"{100 * vals[c]:8.1f}" if c in vals else f"{'':>8}" for c in contexts
        )
        lines.append(name.ljust(head_w) + cells)
    return "\n".join(lines)


def cmd_eval(args, cross=False):
    task = Task.parse(args.task)
    books_task = None
    if cross:
        if args.books_task is not None:
            books_task = Task.parse(args.books_task)
        elif task is Task.STRESS:
            books_task = Task.ACCENT
        elif task is Task.ACCENT:
            books_task = Task.STRESS
        else:
            raise UsageError("cross-eval needs --books-task for task cv")
    contexts = _context_list(args.context) if args.context else list(SWEEP_CONTEXTS)
    metrics = _metric_list(args.metric)
    corpus = _load_corpus(args)
    reports = []
    for metric in metrics:
        for context in contexts:
            cfg = ParseConfig(task, metric, _quantize(args, context), books_task)
            run = cross_evaluate if cross else evaluate
            log.info("evaluating %s context=%d", metric.name, context)
            reports.append(run(corpus, cfg, args.folds, args.fold_length, args.seed, args.holdout))
    print(format_table(reports, "Segment accuracy (%)", "segment_accuracy_mean"))
    print()
    print(format_table(reports, "Frame accuracy (%)", "frame_accuracy_mean"))
    if args.report is not None:
        io.write_report({"command": "cross-eval" if cross else "eval",
                         "reports": [r.as_dict() for r in reports]}, args.report)


def cmd_stats(args):
    seq = io.read_posteriors(args.posteriors)
    qcfg = _quantize(args)
    pats = sequence_patterns(seq, qcfg)
    stats = sparsity_stats(pats, qcfg.width(seq.k))
    payload = {"sparsity": stats.as_dict(), "context": qcfg.context, "threshold": qcfg.threshold}
    print(f"patterns:          {stats.total_count}")
    print(f"unique patterns:   {stats.unique_count}")
    print(f"ratio of total:    {stats.ratio_of_total:.6g}")
    if stats.possible_overflow:
        print(f"ratio of possible: 0 (underflow; log10 = {stats.log10_ratio_of_possible:.3f})")
    else:
        print(f"ratio of possible: {stats.ratio_of_possible:.6g} "
              f"(log10 = {stats.log10_ratio_of_possible:.3f})")
    if args.labels is not None:
        task = Task.parse(args.task)
        anns = io.read_labels(args.labels, seq.n)
        books = build_codebooks(pats, anns, task, k=seq.k, context=qcfg.context)
        payload["codebooks"] = {}
        for book in (books.class_a, books.class_b):
            print(f"{book.class_name} codebook: {len(book)} codes")
            payload["codebooks"][book.class_name] = len(book)
    if args.report is not None:
        io.write_report(payload, args.report)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        if args.command == "gen":
            cmd_gen(args)
        elif args.command == "build":
            cmd_build(args)
        elif args.command == "parse":
            cmd_parse(args)
        elif args.command == "eval":
            cmd_eval(args)
        elif args.command == "cross-eval":
            cmd_eval(args, cross=True)
        elif args.command == "stats":
            cmd_stats(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"phonoparse: error: {exc}", file=sys.stderr)
        return 2
    except (ValidationError, ValueError, OSError) as exc:
        print(f"phonoparse: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
