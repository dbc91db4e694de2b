"""Polygon primitives: area, perimeter, offsetting, containment, rasterized IoU.

A polygon is an (N, 2) float64 array of (x, y) vertices, implicitly closed.
``as_polygon`` is the canonical constructor: it drops consecutive duplicate
vertices and orients the result so the shoelace signed area is non-negative
(counter-clockwise in the stored coordinate frame). Everything else in this
module assumes that normal form.
"""

from __future__ import annotations

import numpy as np

from .errors import GeometryError

_EPS = 1e-9


def as_polygon(points) -> np.ndarray:
    """Validate and normalize a vertex sequence into polygon normal form.

    Consecutive duplicates (including a repeated closing vertex) are dropped;
    raises GeometryError when fewer than 3 distinct vertices remain.
    """
    pts = np.array(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise GeometryError(f"polygon must be an (N, 2) vertex array, got shape {pts.shape}")
    if not np.all(np.isfinite(pts)):
        raise GeometryError("polygon vertices must be finite")
    keep = np.any(pts != np.roll(pts, 1, axis=0), axis=1)
    pts = pts[keep]
    if len(pts) < 3:
        raise GeometryError("polygon needs at least 3 distinct vertices")
    if signed_area(pts) < 0:
        pts = pts[::-1].copy()
    return pts


def signed_area(poly) -> float:
    x = poly[:, 0]
    y = poly[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def polygon_area(poly) -> float:
    """Shoelace area, orientation-independent."""
    return abs(signed_area(poly))


def polygon_perimeter(poly) -> float:
    """Sum of edge lengths including the closing edge."""
    d = np.roll(poly, -1, axis=0) - poly
    return float(np.hypot(d[:, 0], d[:, 1]).sum())


def polygon_bounds(poly) -> tuple[float, float, float, float]:
    """(min_x, min_y, max_x, max_y) of the vertex set."""
    return (
        float(poly[:, 0].min()),
        float(poly[:, 1].min()),
        float(poly[:, 0].max()),
        float(poly[:, 1].max()),
    )


def point_in_polygon(point, poly) -> bool:
    """Even-odd containment test; points on the boundary count as inside."""
    px, py = float(point[0]), float(point[1])
    p = np.asarray(poly, dtype=np.float64)
    x1, y1 = p[:, 0], p[:, 1]
    x2, y2 = np.roll(x1, -1), np.roll(y1, -1)

    ex, ey = x2 - x1, y2 - y1
    cross = ex * (py - y1) - ey * (px - x1)
    dot = (px - x1) * ex + (py - y1) * ey
    len2 = ex * ex + ey * ey
    on_edge = (
        (np.abs(cross) <= _EPS * np.maximum(np.sqrt(len2), 1.0))
        & (dot >= -_EPS)
        & (dot <= len2 + _EPS)
    )
    if bool(np.any(on_edge)):
        return True

    crosses = (y1 > py) != (y2 > py)
    with np.errstate(divide="ignore", invalid="ignore"):
        x_int = x1 + (py - y1) * ex / ey
    hits = crosses & (px < x_int)
    return bool(np.count_nonzero(hits) % 2 == 1)


def _grid_mask(poly, xs, ys) -> np.ndarray:
    """Even-odd rasterization of ``poly`` over the grid of centers xs × ys.

    Half-open crossing rule; the tie-break for centers exactly on an edge is
    deterministic but not boundary-inclusive (use point_in_polygon for that).
    """
    inside = np.zeros((len(ys), len(xs)), dtype=bool)
    p = np.asarray(poly, dtype=np.float64)
    x1, y1 = p[:, 0], p[:, 1]
    x2, y2 = np.roll(x1, -1), np.roll(y1, -1)
    for i in range(len(p)):
        if y1[i] == y2[i]:
            continue
        crosses = (y1[i] > ys) != (y2[i] > ys)
        if not crosses.any():
            continue
        x_int = x1[i] + (ys - y1[i]) * (x2[i] - x1[i]) / (y2[i] - y1[i])
        inside[crosses] ^= xs[None, :] < x_int[crosses, None]
    return inside


def polygon_mask(poly, width: int, height: int) -> np.ndarray:
    """Boolean (height, width) mask of pixels whose centers fall inside poly.

    Pixel (row, col) has its center at coordinates (col, row).
    """
    mask = np.zeros((height, width), dtype=bool)
    min_x, min_y, max_x, max_y = polygon_bounds(poly)
    x0 = max(0, int(np.floor(min_x)))
    y0 = max(0, int(np.floor(min_y)))
    x1 = min(width - 1, int(np.ceil(max_x)))
    y1 = min(height - 1, int(np.ceil(max_y)))
    if x0 > x1 or y0 > y1:
        return mask
    xs = np.arange(x0, x1 + 1, dtype=np.float64)
    ys = np.arange(y0, y1 + 1, dtype=np.float64)
    mask[y0 : y1 + 1, x0 : x1 + 1] = _grid_mask(poly, xs, ys)
    return mask


def raster_iou(a, b, resolution: int = 512) -> float:
    """Intersection-over-union of two polygons on a shared raster grid.

    Both polygons are sampled onto a resolution×resolution grid of pixel
    centers spanning their joint bounding box. Returns 0.0 when the union
    covers no grid cell.
    """
    if resolution < 16:
        raise ValueError("raster_iou needs resolution >= 16")
    ax0, ay0, ax1, ay1 = polygon_bounds(a)
    bx0, by0, bx1, by1 = polygon_bounds(b)
    min_x, min_y = min(ax0, bx0), min(ay0, by0)
    max_x, max_y = max(ax1, bx1), max(ay1, by1)
    w = max_x - min_x
    h = max_y - min_y
    if w <= 0.0 or h <= 0.0:
        return 0.0
    xs = min_x + (np.arange(resolution) + 0.5) * (w / resolution)
    ys = min_y + (np.arange(resolution) + 0.5) * (h / resolution)
    in_a = _grid_mask(a, xs, ys)
    in_b = _grid_mask(b, xs, ys)
    union = int(np.count_nonzero(in_a | in_b))
    if union == 0:
        return 0.0
    return int(np.count_nonzero(in_a & in_b)) / union


def _orient(ax, ay, bx, by, cx, cy):
    return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)


def _segments_cross(p1, p2, q1, q2) -> bool:
    """True when segments p1-p2 and q1-q2 intersect or touch."""
    d1 = _orient(q1[0], q1[1], q2[0], q2[1], p1[0], p1[1])
    d2 = _orient(q1[0], q1[1], q2[0], q2[1], p2[0], p2[1])
    d3 = _orient(p1[0], p1[1], p2[0], p2[1], q1[0], q1[1])
    d4 = _orient(p1[0], p1[1], p2[0], p2[1], q2[0], q2[1])
    if ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0)):
        return True

    def on_seg(a, b, c):
        return (
            min(a[0], b[0]) - _EPS <= c[0] <= max(a[0], b[0]) + _EPS
            and min(a[1], b[1]) - _EPS <= c[1] <= max(a[1], b[1]) + _EPS
        )

    if abs(d1) <= _EPS and on_seg(q1, q2, p1):
        return True
    if abs(d2) <= _EPS and on_seg(q1, q2, p2):
        return True
    if abs(d3) <= _EPS and on_seg(p1, p2, q1):
        return True
    if abs(d4) <= _EPS and on_seg(p1, p2, q2):
        return True
    return False


def is_simple(poly) -> bool:
    """True when no two non-adjacent edges intersect and no edge doubles back."""
    p = np.asarray(poly, dtype=np.float64)
    n = len(p)
    for i in range(n):
        a1, a2 = p[i], p[(i + 1) % n]
        # adjacent edges must not fold back onto each other
        b2 = p[(i + 2) % n]
        turn = _orient(a1[0], a1[1], a2[0], a2[1], b2[0], b2[1])
        if abs(turn) <= _EPS and np.dot(a2 - a1, b2 - a2) < 0:
            return False
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or (i + 1) % n == j:
                continue
            if _segments_cross(a1, a2, p[j], p[(j + 1) % n]):
                return False
    return True


def offset_polygon(poly, dist: float) -> np.ndarray:
    """Dilate a simple polygon outward by ``dist``.

    Each edge is translated along its outward normal; adjacent offset edges
    are joined at their line intersection (miter). A miter longer than
    2·dist is replaced by the two offset-edge endpoints (bevel).
    """
    if dist < 0:
        raise ValueError("offset distance must be non-negative")
    p = as_polygon(poly)
    if dist == 0:
        return p
    if not is_simple(p):
        raise GeometryError("cannot offset a self-intersecting polygon")

    n = len(p)
    prv = np.roll(p, 1, axis=0)
    nxt = np.roll(p, -1, axis=0)
    out = []
    for i in range(n):
        a, b, c = prv[i], p[i], nxt[i]
        d1 = b - a
        d2 = c - b
        l1 = float(np.hypot(d1[0], d1[1]))
        l2 = float(np.hypot(d2[0], d2[1]))
        # CCW normal form => interior is left of travel, outward is right
        n1 = np.array([d1[1], -d1[0]]) / l1
        n2 = np.array([d2[1], -d2[0]]) / l2
        o1 = b + n1 * dist
        o2 = b + n2 * dist
        denom = d1[0] * d2[1] - d1[1] * d2[0]
        if abs(denom) <= _EPS * l1 * l2:
            if float(np.dot(n1, n2)) > 0:
                out.append(o1)  # collinear continuation
            else:
                out.extend([o1, o2])
            continue
        t = ((o2[0] - o1[0]) * d2[1] - (o2[1] - o1[1]) * d2[0]) / denom
        miter = o1 + t * d1
        if float(np.hypot(*(miter - b))) > 2.0 * dist + _EPS:
            out.extend([o1, o2])
        else:
            out.append(miter)
    return as_polygon(out)


def polygon_to_flat(poly) -> list[float]:
    """Flatten to [x1, y1, ..., xn, yn] for serialization."""
    return [float(v) for v in np.asarray(poly, dtype=np.float64).reshape(-1)]


def polygon_from_flat(values) -> np.ndarray:
    """Inverse of polygon_to_flat; rejects odd-length input."""
    vals = list(values)
    if len(vals) % 2 != 0:
        raise GeometryError("flat coordinate list must have even length")
    return as_polygon(np.array(vals, dtype=np.float64).reshape(-1, 2))
