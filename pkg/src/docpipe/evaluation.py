"""Polygon detection evaluation: GT parsing, IoU matching, P/R/F, timing.

Ground truth is one region per line, ``x1,y1,...,xn,yn,transcription``; a
transcription of ``###`` marks a don't-care region. Predictions are
``score;x1,y1,...,xn,yn``. Matching is greedy in score order, one-to-one,
at a configurable IoU threshold; totals are micro-averaged.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import geometry
from .detection import TextRegion, parse_detection_file
from .errors import GtParseError

DONT_CARE = "###"
IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg")


@dataclass(frozen=True)
class GtRegion:
    polygon: np.ndarray
    transcription: str
    dont_care: bool


@dataclass
class MatchResult:
    """Per-image matching counts plus the matched (det, gt, iou) pairs."""

    tp: int = 0
    fp: int = 0
    fn_: int = 0
    pairs: list = field(default_factory=list)


@dataclass
class EvalReport:
    precision: float
    recall: float
    f_measure: float
    per_image: list
    wall_clock: float
    images_per_second: float
    images: list = field(default_factory=list)
    skipped: list = field(default_factory=list)

    def totals(self) -> tuple[int, int, int]:
        tp = sum(m.tp for m in self.per_image)
        fp = sum(m.fp for m in self.per_image)
        fn = sum(m.fn_ for m in self.per_image)
        return tp, fp, fn


def _split_transcription(line: str) -> tuple[str, str]:
    """Split a GT line into the coordinate prefix and the transcription."""
    if line.endswith('"'):
        cut = line.rfind(',"')
        if cut >= 0:
            return line[:cut], line[cut + 2 : -1]
    prefix, _, transcription = line.rpartition(",")
    return prefix, transcription


def parse_gt_file(text: str) -> list[GtRegion]:
    """Parse one GT file; blank lines and ``#``-prefixed comments are skipped.

    Raises GtParseError (with the 1-based line number) on an odd coordinate
    count or fewer than 3 points.
    """
    regions = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        coord_part, transcription = _split_transcription(line)
        fields = [f for f in coord_part.split(",") if f.strip()]
        try:
            coords = [float(f) for f in fields]
        except ValueError as exc:
            raise GtParseError(f"bad coordinate {exc}", line_no) from exc
        if len(coords) % 2 != 0:
            raise GtParseError(f"odd coordinate count ({len(coords)})", line_no)
        if len(coords) < 6:
            raise GtParseError(f"need at least 3 points, got {len(coords) // 2}", line_no)
        polygon = geometry.as_polygon(np.array(coords).reshape(-1, 2))
        regions.append(
            GtRegion(
                polygon=polygon,
                transcription=transcription,
                dont_care=transcription == DONT_CARE,
            )
        )
    return regions


def format_gt_line(polygon, transcription: str) -> str:
    coords = ",".join(f"{v:g}" for v in geometry.polygon_to_flat(polygon))
    if "," in transcription or transcription.startswith('"'):
        return f'{coords},"{transcription}"'
    return f"{coords},{transcription}"


def _bbox_overlaps(a, b) -> bool:
    ax0, ay0, ax1, ay1 = a
    bx0, by0, bx1, by1 = b
    return ax0 <= bx1 and bx0 <= ax1 and ay0 <= by1 and by0 <= ay1


class _IouTable:
    """Lazy pairwise IoU with a bounding-box disjointness shortcut."""

    def __init__(self, dets, gts, resolution):
        self.dets = dets
        self.gts = gts
        self.resolution = resolution
        self.det_boxes = [geometry.polygon_bounds(d.polygon) for d in dets]
        self.gt_boxes = [geometry.polygon_bounds(g.polygon) for g in gts]
        self._cache: dict[tuple[int, int], float] = {}

    def iou(self, i: int, j: int) -> float:
        key = (i, j)
        if key not in self._cache:
            if not _bbox_overlaps(self.det_boxes[i], self.gt_boxes[j]):
                self._cache[key] = 0.0
            else:
                self._cache[key] = geometry.raster_iou(
                    self.dets[i].polygon, self.gts[j].polygon, self.resolution
                )
        return self._cache[key]


def match_detections(
    dets: list[TextRegion],
    gts: list[GtRegion],
    iou_thresh: float = 0.5,
    resolution: int = 512,
) -> MatchResult:
    """Greedy one-to-one matching in descending score order.

    Detections overlapping a don't-care GT at or above the threshold are
    discarded (neither TP nor FP); unmatched detections are FPs, unmatched
    non-don't-care GTs are FNs.
    """
    if not 0.0 < iou_thresh <= 1.0:
        raise ValueError("iou_thresh must be in (0, 1]")
    table = _IouTable(dets, gts, resolution)
    dc_idx = [j for j, g in enumerate(gts) if g.dont_care]
    real_idx = [j for j, g in enumerate(gts) if not g.dont_care]

    order = sorted(range(len(dets)), key=lambda i: -dets[i].score)
    matched_gt: set[int] = set()
    pairs = []
    fp = 0
    for i in order:
        if any(table.iou(i, j) >= iou_thresh for j in dc_idx):
            continue
        best_j, best_iou = -1, 0.0
        for j in real_idx:
            if j in matched_gt:
                continue
            v = table.iou(i, j)
            if v >= iou_thresh and v > best_iou:
                best_j, best_iou = j, v
        if best_j >= 0:
            matched_gt.add(best_j)
            pairs.append((i, best_j, best_iou))
        else:
            fp += 1
    return MatchResult(
        tp=len(pairs), fp=fp, fn_=len(real_idx) - len(matched_gt), pairs=pairs
    )


def compute_prf(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    """Precision, recall, F-measure with the zero-denominator conventions
    P=0 when nothing was predicted, R=1 when nothing was annotated."""
    precision = tp / (tp + fp) if tp + fp > 0 else 0.0
    recall = tp / (tp + fn) if tp + fn > 0 else 1.0
    f_measure = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return precision, recall, f_measure


def _list_images(image_dir: Path) -> list[Path]:
    return sorted(p for p in image_dir.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)


def evaluate_dataset(
    image_dir,
    gt_dir,
    pipeline=None,
    predictions_dir=None,
    iou_thresh: float = 0.5,
    resolution: int = 512,
    workers: int = 1,
) -> EvalReport:
    """Evaluate a directory of images against per-image GT files.

    ``pipeline`` is a callable mapping a decoded color image to TextRegions;
    alternatively ``predictions_dir`` holds pre-computed detection files and
    the pipeline is skipped. Missing GT, unreadable images, and malformed
    files are recorded as skips, not failures.
    """
    if (pipeline is None) == (predictions_dir is None):
        raise ValueError("provide exactly one of pipeline or predictions_dir")
    image_dir, gt_dir = Path(image_dir), Path(gt_dir)

    started = time.perf_counter()
    images = _list_images(image_dir)

    def run_one(path: Path):
        gt_path = gt_dir / (path.stem + ".txt")
        if not gt_path.exists():
            return path.name, None, f"missing GT file {gt_path.name}"
        try:
            gts = parse_gt_file(gt_path.read_text(encoding="utf-8"))
        except GtParseError as exc:
            return path.name, None, f"bad GT file {gt_path.name}: {exc}"
        if predictions_dir is not None:
            pred_path = Path(predictions_dir) / (path.stem + ".txt")
            # a detector that found nothing writes an empty file; absent counts the same
            dets = (
                parse_detection_file(pred_path.read_text(encoding="utf-8"))
                if pred_path.exists()
                else []
            )
        else:
            from .imaging import load_image

            try:
                img = load_image(path)
            except ValueError as exc:
                return path.name, None, f"unreadable image: {exc}"
            dets = pipeline(img)
        return path.name, match_detections(dets, gts, iou_thresh, resolution), None

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(run_one, images))
    else:
        rows = [run_one(p) for p in images]

    per_image, names, skipped = [], [], []
    for name, match, skip_reason in rows:
        if match is None:
            skipped.append((name, skip_reason))
        else:
            per_image.append(match)
            names.append(name)

    wall = time.perf_counter() - started
    tp = sum(m.tp for m in per_image)
    fp = sum(m.fp for m in per_image)
    fn = sum(m.fn_ for m in per_image)
    precision, recall, f_measure = compute_prf(tp, fp, fn)
    return EvalReport(
        precision=precision,
        recall=recall,
        f_measure=f_measure,
        per_image=per_image,
        wall_clock=wall,
        images_per_second=len(per_image) / wall if wall > 0 else 0.0,
        images=names,
        skipped=skipped,
    )


def render_report(report: EvalReport) -> str:
    """Human-readable report: key-value summary plus a per-image table."""
    tp, fp, fn = report.totals()
    lines = [
        f"precision: {report.precision:.4f}",
        f"recall: {report.recall:.4f}",
        f"f_measure: {report.f_measure:.4f}",
        f"true_positives: {tp}",
        f"false_positives: {fp}",
        f"false_negatives: {fn}",
        f"images: {len(report.per_image)}",
        f"skipped: {len(report.skipped)}",
        f"timing wall_clock_s: {report.wall_clock:.3f}",
        f"timing images_per_second: {report.images_per_second:.3f}",
        "",
        f"{'image':<32} {'tp':>4} {'fp':>4} {'fn':>4}",
    ]
    for name, match in zip(report.images, report.per_image):
        lines.append(f"{name:<32} {match.tp:>4} {match.fp:>4} {match.fn_:>4}")
    for name, reason in report.skipped:
        lines.append(f"{name:<32} skipped: {reason}")
    return "\n".join(lines) + "\n"


def report_to_dict(report: EvalReport) -> dict:
    """Machine-readable form of the report (timing fields clearly marked)."""
    tp, fp, fn = report.totals()
    return {
        "precision": report.precision,
        "recall": report.recall,
        "f_measure": report.f_measure,
        "true_positives": tp,
        "false_positives": fp,
        "false_negatives": fn,
        "per_image": [
            {"image": name, "tp": m.tp, "fp": m.fp, "fn": m.fn_, "pairs": m.pairs}
            for name, m in zip(report.images, report.per_image)
        ],
        "skipped": [{"image": name, "reason": reason} for name, reason in report.skipped],
        "timing": {
            "wall_clock_s": report.wall_clock,
            "images_per_second": report.images_per_second,
        },
    }
