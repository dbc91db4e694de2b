"""docpipe: document-image pipeline engine.

Preprocesses document photos (grayscale, tiled super-resolution, CLAHE),
turns detector score maps into text-region polygons, classifies recognized
text into an operator-editable label set with zero-shot NLI scoring, and
evaluates detections against polygon ground truth. All neural forward
passes live behind pluggable backends; the built-in stubs keep the whole
pipeline runnable without any model weights.
"""

from .backends import Backends, BackendDescriptor, NliLogits, build_backends
from .classify import (
    ClassificationResult,
    DEFAULT_LABELS,
    DEFAULT_TEMPLATE,
    UNCLASSIFIED,
    aggregate_document,
    build_hypothesis,
    classify_document,
    detect_document,
    zero_shot_classify,
)
from .config import Config, load_config
from .detection import (
    DetectionParams,
    ScoreMaps,
    TextRegion,
    db_soft_binarize,
    detect_text,
    hard_binarize,
)
from .errors import (
    BackendError,
    BackendUnavailable,
    ConfigError,
    DocpipeError,
    GeometryError,
    GtParseError,
    ProtocolError,
)
from .evaluation import EvalReport, GtRegion, MatchResult, evaluate_dataset, match_detections
from .imaging import (
    ClaheParams,
    TilingParams,
    bicubic_upscale,
    clahe,
    plan_tiles,
    preprocess,
    to_grayscale,
    upscale_tiled,
)

__version__ = "0.1.0"

__all__ = [
    "BackendDescriptor",
    "BackendError",
    "BackendUnavailable",
    "Backends",
    "ClaheParams",
    "ClassificationResult",
    "Config",
    "ConfigError",
    "DEFAULT_LABELS",
    "DEFAULT_TEMPLATE",
    "DetectionParams",
    "DocpipeError",
    "EvalReport",
    "GeometryError",
    "GtParseError",
    "GtRegion",
    "MatchResult",
    "NliLogits",
    "ProtocolError",
    "ScoreMaps",
    "TextRegion",
    "TilingParams",
    "UNCLASSIFIED",
    "aggregate_document",
    "bicubic_upscale",
    "build_backends",
    "build_hypothesis",
    "clahe",
    "classify_document",
    "db_soft_binarize",
    "detect_document",
    "detect_text",
    "evaluate_dataset",
    "hard_binarize",
    "load_config",
    "match_detections",
    "plan_tiles",
    "preprocess",
    "to_grayscale",
    "upscale_tiled",
    "zero_shot_classify",
]
