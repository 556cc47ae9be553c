"""Binary codebook matching over quantized phonological posteriors."""

from .codebook import Codebook, CodebookPair, SparsityStats, build_codebooks, match, sparsity_stats
from .model import (
    BinaryPattern,
    Decision,
    PosteriorSequence,
    SegmentAnnotation,
    Task,
    ValidationError,
    Violation,
    validate_annotations,
    validate_sequence,
)
from .parser import (
    EvalReport,
    ParseConfig,
    SegmentResult,
    classify_frame,
    cross_evaluate,
    evaluate,
    parse_segment,
    parse_utterance,
)
from .quantize import BoundaryPolicy, QuantizeConfig, binarize_frame, binarize_sequence, concat_context
from .similarity import Metric, MetricKind, Polarity, Preference, TaxonomicUnits, better, score, taxonomic_units

__version__ = "0.1.0"
