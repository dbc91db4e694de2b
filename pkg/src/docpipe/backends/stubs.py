"""Deterministic stub backends for desk-scale runs and tests.

Every stub is a pure function of its configuration and inputs, so repeated
calls with identical arguments return identical results.
"""

from __future__ import annotations

import numpy as np

from .. import geometry
from ..detection import ScoreMaps
from ..imaging import BicubicUpscaler, bicubic_upscale  # noqa: F401  (re-export)
from .types import NliLogits

ELLIPSIS = "…"

DEFAULT_LEXICON = {
    "invoice": "Invoice",
    "report": "Report",
    "letter": "Letter",
    "form": "Form",
}


def _parse_rect(rect) -> tuple[int, int, int, int]:
    x, y, w, h = (int(v) for v in rect)
    if w < 1 or h < 1:
        raise ValueError("rectangle sides must be >= 1")
    return x, y, w, h


class StubDetector:
    """Plants rectangles of high probability; everything else stays low."""

    def __init__(self, rects=(), p_inside=0.9, p_outside=0.05, thresh_value=0.3):
        self.rects = [_parse_rect(r) for r in rects]
        self.p_inside = float(p_inside)
        self.p_outside = float(p_outside)
        self.thresh_value = float(thresh_value)

    def infer_maps(self, img) -> ScoreMaps:
        img = np.asarray(img)
        h, w = img.shape[:2]
        if h < 32 or w < 32:
            raise ValueError(f"detector needs at least a 32x32 image, got {w}x{h}")
        prob = np.full((h, w), self.p_outside, dtype=np.float32)
        for x, y, rw, rh in self.rects:
            prob[max(0, y) : y + rh, max(0, x) : x + rw] = self.p_inside
        thresh = np.full((h, w), self.thresh_value, dtype=np.float32)
        return ScoreMaps(prob=prob, thresh=thresh)

    def ping(self) -> bool:
        return True


class StubRecognizer:
    """Lookup recognizer: rectangles mapped to fixed transcriptions.

    A queried polygon matches the first configured entry whose rectangle
    center it contains; misses come back as empty strings.
    """

    def __init__(self, entries=()):
        self.entries = [(_parse_rect(rect), str(text)) for rect, text in entries]

    def recognize(self, img, polygons) -> list[str]:
        texts = []
        for poly in polygons:
            hit = ""
            for (x, y, w, h), text in self.entries:
                center = (x + w / 2.0, y + h / 2.0)
                if geometry.point_in_polygon(center, poly):
                    hit = text
                    break
            texts.append(hit)
        return texts

    def ping(self) -> bool:
        return True


class StubNli:
    """Keyword-lexicon scorer: entailment 4.0 on a hit, 0.0 otherwise."""

    def __init__(self, lexicon=None, hit_logit=4.0):
        self.lexicon = dict(DEFAULT_LEXICON if lexicon is None else lexicon)
        self.hit_logit = float(hit_logit)

    def score(self, premise: str, hypothesis: str) -> NliLogits:
        if not hypothesis:
            raise ValueError("hypothesis must be non-empty")
        premise_lc = premise.lower()
        hypothesis_lc = hypothesis.lower()
        entail = 0.0
        for keyword, label in self.lexicon.items():
            if label.lower() in hypothesis_lc and keyword.lower() in premise_lc:
                entail = self.hit_logit
                break
        return NliLogits(entailment=entail, contradiction=0.0, neutral=0.0)

    def ping(self) -> bool:
        return True


class StubSummarizer:
    """Head truncation: first ``max_words`` words, ellipsis when cut."""

    def __init__(self, max_words=30):
        self.max_words = int(max_words)

    def summarize(self, text: str) -> str:
        words = text.split()
        if len(words) <= self.max_words:
            return text
        return " ".join(words[: self.max_words]) + ELLIPSIS

    def ping(self) -> bool:
        return True


class IdentityUpscaler:
    """Scale-1 upscaler; returns its input untouched."""

    scale = 1

    def upscale(self, img) -> np.ndarray:
        return np.asarray(img).copy()

    def ping(self) -> bool:
        return True
