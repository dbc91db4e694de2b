"""Detection post-processing: score maps to scored, filtered text polygons.

The chain is: threshold the probability map, label connected components,
trace each component's outer contour, score it against the probability map,
dilate it back to full text extent (unclip), then filter by size and score.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import geometry
from .errors import GeometryError


@dataclass(frozen=True)
class DetectionParams:
    """Post-processing knobs; defaults follow the document-pipeline setup."""

    bin_thresh: float = 0.25
    k: float = 50.0
    unclip_ratio: float = 1.5
    min_height: float = 5.0
    max_height: float = 1024.0
    min_region_score: float = 0.5
    min_component_pixels: int = 10

    def __post_init__(self):
        if not 0.0 < self.bin_thresh < 1.0:
            raise ValueError("bin_thresh must be in (0, 1)")
        if self.k <= 0:
            raise ValueError("k must be positive")
        if self.unclip_ratio < 0:
            raise ValueError("unclip_ratio must be >= 0")
        if not 0 < self.min_height <= self.max_height:
            raise ValueError("need 0 < min_height <= max_height")


@dataclass(frozen=True)
class ScoreMaps:
    """Per-pixel probability map and optional threshold map, same shape."""

    prob: np.ndarray
    thresh: np.ndarray | None = None

    def __post_init__(self):
        prob = np.asarray(self.prob, dtype=np.float64)
        object.__setattr__(self, "prob", prob)
        if prob.ndim != 2:
            raise ValueError(f"prob map must be 2D, got shape {prob.shape}")
        if prob.size and (prob.min() < 0.0 or prob.max() > 1.0):
            raise ValueError("prob map values must lie in [0, 1]")
        if self.thresh is not None:
            thresh = np.asarray(self.thresh, dtype=np.float64)
            object.__setattr__(self, "thresh", thresh)
            if thresh.shape != prob.shape:
                raise ValueError(
                    f"threshold map shape {thresh.shape} != prob map shape {prob.shape}"
                )
            if thresh.size and (thresh.min() < 0.0 or thresh.max() > 1.0):
                raise ValueError("threshold map values must lie in [0, 1]")

    @property
    def shape(self):
        return self.prob.shape


@dataclass(frozen=True)
class TextRegion:
    """A detected text instance: closed polygon plus mean-probability score."""

    polygon: np.ndarray
    score: float

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise ValueError("score must lie in [0, 1]")

    def bounds(self):
        return geometry.polygon_bounds(self.polygon)


_OPEN_LO = np.nextafter(0.0, 1.0)
_OPEN_HI = np.nextafter(1.0, 0.0)


def db_soft_binarize(prob, thresh, k: float = 50.0):
    """Differentiable binarization: 1 / (1 + exp(-k (P - T))).

    Accepts scalars or arrays; increasing in P, decreasing in T. Outputs are
    clamped into the open interval (0, 1): the exact value never reaches the
    endpoints, but float64 saturates for |k (P - T)| beyond ~37.
    """
    p = np.asarray(prob, dtype=np.float64)
    t = np.asarray(thresh, dtype=np.float64)
    out = np.clip(1.0 / (1.0 + np.exp(-k * (p - t))), _OPEN_LO, _OPEN_HI)
    return float(out) if out.ndim == 0 else out


def hard_binarize(maps: ScoreMaps, params: DetectionParams | None = None) -> np.ndarray:
    """Foreground mask: P >= max(T, bin_thresh), or P >= bin_thresh without T."""
    params = params or DetectionParams()
    if maps.thresh is not None:
        cutoff = np.maximum(maps.thresh, params.bin_thresh)
    else:
        cutoff = params.bin_thresh
    return maps.prob >= cutoff


def connected_components(mask) -> np.ndarray:
    """8-connectivity labeling; labels are contiguous from 1 in scan order.

    Row runs are merged with a union-find; the result is invariant to the
    internal merge order.
    """
    mask = np.asarray(mask, dtype=bool)
    h, w = mask.shape
    labels = np.zeros((h, w), dtype=np.int32)

    parent = []

    def find(i):
        root = i
        while parent[root] != root:
            root = parent[root]
        while parent[i] != root:
            parent[i], i = root, parent[i]
        return root

    def union(i, j):
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)

    rows = []
    prev_runs = []
    for r in range(h):
        row = mask[r].astype(np.int8)
        boundaries = np.flatnonzero(np.diff(row))
        starts = list(boundaries[row[boundaries] == 0] + 1)
        ends = list(boundaries[row[boundaries] == 1] + 1)
        if row[0]:
            starts.insert(0, 0)
        if row[-1]:
            ends.append(w)
        cur = []
        for s, e in zip(starts, ends):
            rid = len(parent)
            parent.append(rid)
            cur.append((int(s), int(e), rid))
            for ps, pe, pid in prev_runs:
                # 8-connectivity: runs joined when column spans touch diagonally
                if ps < e + 1 and s - 1 < pe:
                    union(rid, pid)
        rows.append(cur)
        prev_runs = cur

    label_of_root = {}
    next_label = 1
    for r, runs in enumerate(rows):
        for s, e, rid in runs:
            root = find(rid)
            lab = label_of_root.get(root)
            if lab is None:
                lab = next_label
                label_of_root[root] = lab
                next_label += 1
            labels[r, s:e] = lab
    return labels


# clockwise in image coordinates (y down), starting north
_NEIGHBORS = [(0, -1), (1, -1), (1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1)]
_NEIGHBOR_INDEX = {off: i for i, off in enumerate(_NEIGHBORS)}


def _moore_trace(mask) -> list[tuple[int, int]]:
    """Outer boundary pixels of one component, in clockwise order."""
    h, w = mask.shape
    ys, xs = np.nonzero(mask)
    if len(xs) == 0:
        return []
    start = (int(xs[0]), int(ys[0]))  # row-major scan -> topmost, then leftmost
    if len(xs) == 1:
        return [start]

    def fg(x, y):
        return 0 <= x < w and 0 <= y < h and bool(mask[y, x])

    contour = []
    cur = start
    back = (start[0] - 1, start[1])  # west of the start pixel is background
    seen = set()
    while (cur, back) not in seen:
        seen.add((cur, back))
        contour.append(cur)
        bi = _NEIGHBOR_INDEX[(back[0] - cur[0], back[1] - cur[1])]
        nxt = None
        for k in range(1, 9):
            d = (bi + k) % 8
            cand = (cur[0] + _NEIGHBORS[d][0], cur[1] + _NEIGHBORS[d][1])
            if fg(*cand):
                nxt = cand
                back = (cur[0] + _NEIGHBORS[(d - 1) % 8][0], cur[1] + _NEIGHBORS[(d - 1) % 8][1])
                break
        if nxt is None:
            break
        cur = nxt
    return contour


def _point_line_dist(pts: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    ab = b - a
    norm = np.hypot(ab[0], ab[1])
    if norm == 0:
        return np.hypot(pts[:, 0] - a[0], pts[:, 1] - a[1])
    return np.abs(ab[0] * (pts[:, 1] - a[1]) - ab[1] * (pts[:, 0] - a[0])) / norm


def _douglas_peucker(pts: np.ndarray, tol: float) -> np.ndarray:
    """Simplify an open polyline, keeping both endpoints."""
    keep = np.zeros(len(pts), dtype=bool)
    keep[0] = keep[-1] = True
    stack = [(0, len(pts) - 1)]
    while stack:
        i, j = stack.pop()
        if j - i < 2:
            continue
        seg = pts[i + 1 : j]
        dists = _point_line_dist(seg, pts[i], pts[j])
        k = int(np.argmax(dists))
        if dists[k] > tol:
            mid = i + 1 + k
            keep[mid] = True
            stack.append((i, mid))
            stack.append((mid, j))
    return pts[keep]


def _simplify_closed(contour: np.ndarray, tol: float) -> np.ndarray:
    far = int(np.argmax(np.hypot(contour[:, 0] - contour[0, 0], contour[:, 1] - contour[0, 1])))
    if far == 0:
        return contour[:1]
    first = _douglas_peucker(contour[: far + 1], tol)
    second = _douglas_peucker(np.vstack([contour[far:], contour[:1]]), tol)
    return np.vstack([first[:-1], second[:-1]])


def _bbox_rect(xs, ys) -> np.ndarray:
    x0, x1 = float(np.min(xs)), float(np.max(xs))
    y0, y1 = float(np.min(ys)), float(np.max(ys))
    # half-pixel inflation only on a zero-extent axis keeps the polygon valid
    if x0 == x1:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y0 == y1:
        y0, y1 = y0 - 0.5, y1 + 0.5
    return geometry.as_polygon([(x0, y0), (x1, y0), (x1, y1), (x0, y1)])


def trace_contour(mask, simplify_tol: float = 2.0) -> np.ndarray:
    """Polygon for one component: Moore boundary trace + Douglas-Peucker.

    Falls back to the component's bounding-box rectangle when tracing or
    simplification leaves fewer than 3 usable vertices.
    """
    mask = np.asarray(mask, dtype=bool)
    ys, xs = np.nonzero(mask)
    if len(xs) == 0:
        raise ValueError("cannot trace an empty component")
    boundary = _moore_trace(mask)
    if len(boundary) >= 3:
        simplified = _simplify_closed(np.asarray(boundary, dtype=np.float64), simplify_tol)
        if len(simplified) >= 3:
            try:
                return geometry.as_polygon(simplified)
            except GeometryError:
                pass
    return _bbox_rect(xs, ys)


def score_region(prob, polygon) -> float:
    """Mean probability over pixels whose centers fall inside the polygon."""
    prob = np.asarray(prob, dtype=np.float64)
    h, w = prob.shape
    mask = geometry.polygon_mask(polygon, w, h)
    covered = int(np.count_nonzero(mask))
    if covered == 0:
        return 0.0
    return float(prob[mask].mean())


def unclip_region(polygon, ratio: float) -> np.ndarray:
    """Dilate a shrunk text polygon outward by area·ratio/perimeter."""
    if ratio < 0:
        raise ValueError("unclip ratio must be >= 0")
    perimeter = geometry.polygon_perimeter(polygon)
    if perimeter <= 0:
        raise GeometryError("cannot unclip a zero-perimeter polygon")
    dist = geometry.polygon_area(polygon) * ratio / perimeter
    return geometry.offset_polygon(polygon, dist)


def filter_regions(
    regions: list[TextRegion],
    params: DetectionParams | None = None,
    component_sizes=None,
) -> list[TextRegion]:
    """Keep regions within the height band, above the score floor, and (when
    component_sizes is given) backed by enough foreground pixels. Order is
    preserved."""
    params = params or DetectionParams()
    if component_sizes is not None and len(component_sizes) != len(regions):
        raise ValueError("component_sizes must match regions")
    kept = []
    for i, region in enumerate(regions):
        _, min_y, _, max_y = region.bounds()
        height = max_y - min_y
        if not params.min_height <= height <= params.max_height:
            continue
        if region.score < params.min_region_score:
            continue
        if component_sizes is not None and component_sizes[i] < params.min_component_pixels:
            continue
        kept.append(region)
    return kept


def detect_text(maps: ScoreMaps, params: DetectionParams | None = None) -> list[TextRegion]:
    """Full post-processing chain; regions come back sorted by descending score.

    Components whose traced contour cannot be offset (degenerate slivers)
    are dropped rather than aborting the image.
    """
    params = params or DetectionParams()
    mask = hard_binarize(maps, params)
    labels = connected_components(mask)
    n = int(labels.max())

    regions = []
    sizes = []
    for lab in range(1, n + 1):
        ys, xs = np.nonzero(labels == lab)
        npix = len(xs)
        if npix < params.min_component_pixels:
            continue
        y0, y1 = int(ys.min()), int(ys.max())
        x0, x1 = int(xs.min()), int(xs.max())
        comp = labels[y0 : y1 + 1, x0 : x1 + 1] == lab
        polygon = trace_contour(comp) + np.array([x0, y0], dtype=np.float64)
        score = score_region(maps.prob, polygon)
        try:
            unclipped = unclip_region(polygon, params.unclip_ratio)
        except GeometryError:
            continue
        regions.append(TextRegion(polygon=unclipped, score=score))
        sizes.append(npix)

    kept = filter_regions(regions, params, sizes)
    return sorted(kept, key=lambda r: (-r.score, r.bounds()[1], r.bounds()[0]))


def format_detection_line(region: TextRegion) -> str:
    """Serialize one region as ``score;x1,y1,...,xn,yn``."""
    coords = ",".join(f"{v:.2f}" for v in geometry.polygon_to_flat(region.polygon))
    return f"{region.score:.6f};{coords}"


def parse_detection_file(text: str) -> list[TextRegion]:
    """Parse prediction lines written by format_detection_line."""
    regions = []
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        score_part, _, coord_part = line.partition(";")
        polygon = geometry.polygon_from_flat(float(v) for v in coord_part.split(",") if v)
        regions.append(TextRegion(polygon=polygon, score=float(score_part)))
    return regions
