"""Zero-shot document classification over an editable label set.

Each label is turned into a hypothesis ("This text is about <label>"), the
NLI backend scores it against the recognized document text, and a softmax
over the per-label entailment logits yields the document distribution.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import imaging
from .detection import DetectionParams, TextRegion, detect_text
from .geometry import as_polygon, polygon_bounds

DEFAULT_LABELS = ("Invoice", "Report", "Letter", "Form")
DEFAULT_TEMPLATE = "This text is about [label]"
PLACEHOLDER = "[label]"
UNCLASSIFIED = "Unclassified"

# long OCR dumps exceed typical NLI input limits; the head carries the
# letterhead/title signal
PREMISE_CHAR_LIMIT = 2000


def validate_labels(labels) -> list[str]:
    """Check a label set: >= 2 labels, non-empty, case-insensitively distinct."""
    cleaned = [str(lab).strip() for lab in labels]
    if len(cleaned) < 2:
        raise ValueError("need at least 2 labels")
    if any(not lab for lab in cleaned):
        raise ValueError("labels must be non-empty")
    lowered = [lab.lower() for lab in cleaned]
    if len(set(lowered)) != len(lowered):
        raise ValueError("labels must be distinct (case-insensitive)")
    return cleaned


def validate_template(template: str) -> str:
    if template.count(PLACEHOLDER) != 1:
        raise ValueError(f"hypothesis template needs exactly one {PLACEHOLDER!r} placeholder")
    return template


def build_hypothesis(label: str, template: str = DEFAULT_TEMPLATE) -> str:
    """Substitute the label into the hypothesis template."""
    return validate_template(template).replace(PLACEHOLDER, label)


def softmax(values) -> np.ndarray:
    v = np.asarray(values, dtype=np.float64)
    shifted = np.exp(v - v.max())
    return shifted / shifted.sum()


@dataclass(frozen=True)
class ClassificationResult:
    """Per-label distribution plus the winning label."""

    label_probs: dict[str, float]
    chosen: str
    premise_chars: int
    summary: str | None = None


def unclassified_result(labels) -> ClassificationResult:
    """The no-text outcome: uniform distribution, sentinel label."""
    labels = validate_labels(labels)
    uniform = 1.0 / len(labels)
    return ClassificationResult(
        label_probs={lab: uniform for lab in labels},
        chosen=UNCLASSIFIED,
        premise_chars=0,
    )


def zero_shot_classify(
    premise: str,
    labels,
    scorer,
    template: str = DEFAULT_TEMPLATE,
) -> ClassificationResult:
    """Score every label's hypothesis and softmax the entailment logits.

    The argmax label wins, first occurrence breaking ties. Raises ValueError
    on an empty premise.
    """
    labels = validate_labels(labels)
    template = validate_template(template)
    premise = premise.strip()
    if not premise:
        raise ValueError("premise is empty; nothing to classify")
    premise = premise[:PREMISE_CHAR_LIMIT]

    entail = [scorer.score(premise, build_hypothesis(lab, template)).entailment for lab in labels]
    probs = softmax(entail)
    chosen = labels[int(np.argmax(probs))]
    return ClassificationResult(
        label_probs={lab: float(p) for lab, p in zip(labels, probs)},
        chosen=chosen,
        premise_chars=len(premise),
    )


def aggregate_document(regions: list[TextRegion], texts: list[str]) -> str:
    """Join per-region texts in reading order (top-to-bottom, left-to-right)."""
    if len(regions) != len(texts):
        raise ValueError(f"{len(regions)} regions but {len(texts)} texts")
    order = sorted(
        range(len(regions)),
        key=lambda i: (polygon_bounds(regions[i].polygon)[1], polygon_bounds(regions[i].polygon)[0]),
    )
    return " ".join(texts[i] for i in order if texts[i])


@dataclass
class PipelineOutcome:
    """What one image produced: classification, display regions, timings."""

    classification: ClassificationResult | None
    regions: list[TextRegion]
    timings_ms: dict[str, float] = field(default_factory=dict)


def _scale_regions(regions: list[TextRegion], scale: int) -> list[TextRegion]:
    """Map polygons from preprocessed coordinates back onto the original image."""
    if scale == 1:
        return regions
    return [
        TextRegion(polygon=as_polygon(r.polygon / float(scale)), score=r.score) for r in regions
    ]


class _StageClock:
    def __init__(self):
        self.timings: dict[str, float] = {}
        self._t0 = time.perf_counter()

    def lap(self, name: str):
        now = time.perf_counter()
        self.timings[name] = round((now - self._t0) * 1000.0, 3)
        self._t0 = now


def detect_document(
    img,
    backends,
    det_params: DetectionParams | None = None,
    clahe_params: imaging.ClaheParams | None = None,
    tiling: imaging.TilingParams | None = None,
) -> PipelineOutcome:
    """Preprocess and detect only; regions are in original-image coordinates."""
    tiling = tiling or imaging.TilingParams()
    clock = _StageClock()
    gray = imaging.to_grayscale(img) if np.asarray(img).ndim == 3 else np.asarray(img)
    clock.lap("grayscale")
    sr = imaging.upscale_tiled(gray, tiling, backends.upscaler)
    clock.lap("upscale")
    enhanced = imaging.clahe(sr, clahe_params)
    clock.lap("clahe")
    maps = backends.detector.infer_maps(enhanced)
    clock.lap("detect_infer")
    regions = detect_text(maps, det_params)
    clock.lap("detect_post")
    outcome = PipelineOutcome(
        classification=None,
        regions=_scale_regions(regions, tiling.scale_factor),
        timings_ms=clock.timings,
    )
    outcome.timings_ms["total"] = round(sum(clock.timings.values()), 3)
    return outcome


def classify_document(
    img,
    backends,
    labels=DEFAULT_LABELS,
    template: str = DEFAULT_TEMPLATE,
    summarize: bool = False,
    det_params: DetectionParams | None = None,
    clahe_params: imaging.ClaheParams | None = None,
    tiling: imaging.TilingParams | None = None,
) -> PipelineOutcome:
    """Full pipeline: preprocess, detect, recognize, aggregate, classify.

    Images with no detected text (or empty recognition) produce the
    "Unclassified" outcome rather than an error.
    """
    labels = validate_labels(labels)
    tiling = tiling or imaging.TilingParams()
    clock = _StageClock()

    gray = imaging.to_grayscale(img) if np.asarray(img).ndim == 3 else np.asarray(img)
    clock.lap("grayscale")
    sr = imaging.upscale_tiled(gray, tiling, backends.upscaler)
    clock.lap("upscale")
    enhanced = imaging.clahe(sr, clahe_params)
    clock.lap("clahe")
    maps = backends.detector.infer_maps(enhanced)
    clock.lap("detect_infer")
    regions = detect_text(maps, det_params)
    clock.lap("detect_post")

    display_regions = _scale_regions(regions, tiling.scale_factor)
    if not regions:
        outcome = PipelineOutcome(unclassified_result(labels), [], clock.timings)
        outcome.timings_ms["total"] = round(sum(clock.timings.values()), 3)
        return outcome

    texts = backends.recognizer.recognize(enhanced, [r.polygon for r in regions])
    clock.lap("recognize")
    premise = aggregate_document(regions, texts)
    if not premise.strip():
        outcome = PipelineOutcome(unclassified_result(labels), display_regions, clock.timings)
        outcome.timings_ms["total"] = round(sum(clock.timings.values()), 3)
        return outcome

    result = zero_shot_classify(premise, labels, backends.nli, template)
    clock.lap("classify")
    if summarize:
        summary = backends.summarizer.summarize(premise)
        result = ClassificationResult(
            label_probs=result.label_probs,
            chosen=result.chosen,
            premise_chars=result.premise_chars,
            summary=summary,
        )
        clock.lap("summarize")

    outcome = PipelineOutcome(result, display_regions, clock.timings)
    outcome.timings_ms["total"] = round(sum(clock.timings.values()), 3)
    return outcome
