"""Preprocessing chain: grayscale conversion, tiled super-resolution, CLAHE.

Images are numpy arrays: a grayscale image is a (H, W) uint8 array, a color
image is a (H, W, 3) uint8 RGB array. The chain runs grayscale -> tiled
upscaling -> contrast enhancement; each stage is a pure function.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import BackendError

# BT.601 luma weights
GRAY_WEIGHTS = (0.299, 0.587, 0.114)


@dataclass(frozen=True)
class ClaheParams:
    """Contrast-limited equalization settings.

    clip_limit is a multiple of the mean histogram bin height; the grid is
    grid_rows × grid_cols tiles.
    """

    clip_limit: float = 8.0
    grid_cols: int = 8
    grid_rows: int = 8
    bins: int = 256

    def __post_init__(self):
        if self.clip_limit < 1.0:
            raise ValueError("clip_limit must be >= 1.0")
        if self.grid_cols < 1 or self.grid_rows < 1:
            raise ValueError("grid dimensions must be >= 1")
        if not 1 <= self.bins <= 256:
            raise ValueError("bins must be in 1..256")


@dataclass(frozen=True)
class TilingParams:
    """Tiled-inference geometry: tile edge, overlap band, scale multiplier."""

    tile_size: int = 64
    overlap: int = 16
    scale_factor: int = 2

    def __post_init__(self):
        if not 0 <= self.overlap < self.tile_size:
            raise ValueError("overlap must satisfy 0 <= overlap < tile_size")
        if self.scale_factor < 1:
            raise ValueError("scale_factor must be >= 1")


def _check_gray(img) -> np.ndarray:
    img = np.asarray(img)
    if img.ndim != 2 or img.shape[0] < 1 or img.shape[1] < 1:
        raise ValueError(f"expected a (H, W) grayscale image, got shape {img.shape}")
    return img


def to_grayscale(img) -> np.ndarray:
    """Convert an RGB image to 8-bit grayscale with BT.601 luma weights.

    Channels are combined as round(0.299 r + 0.587 g + 0.114 b); inputs with
    r = g = b = v map to v exactly.
    """
    img = np.asarray(img)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"expected a (H, W, 3) color image, got shape {img.shape}")
    r, g, b = GRAY_WEIGHTS
    luma = img[..., 0] * r + img[..., 1] * g + img[..., 2] * b
    return np.clip(np.floor(luma + 0.5), 0, 255).astype(np.uint8)


def _tile_edges(length: int, cells: int) -> np.ndarray:
    """Cell boundary offsets along one axis; the last cell absorbs the remainder."""
    base = length // cells
    edges = np.arange(cells + 1) * base
    edges[-1] = length
    return edges


def clip_histogram(hist, clip_limit: float, bins: int) -> np.ndarray:
    """Clip bins at ceil(clip_limit * n / bins) and redistribute the excess.

    Redistribution is a single uniform pass; the integer leftover goes to the
    lowest bins left-to-right, so no bin ends above ceiling + share + 1.
    """
    hist = np.asarray(hist, dtype=np.int64).copy()
    total = int(hist.sum())
    ceiling = int(np.ceil(clip_limit * total / bins))
    excess = int(np.maximum(hist - ceiling, 0).sum())
    if excess == 0:
        return hist
    np.minimum(hist, ceiling, out=hist)
    share, leftover = divmod(excess, bins)
    hist += share
    hist[:leftover] += 1
    return hist


def clahe_tile_mappings(img, params: ClaheParams | None = None) -> np.ndarray:
    """Per-tile intensity mapping tables, shape (grid_rows, grid_cols, bins).

    Each table is the clipped histogram's CDF normalized to 0..255.
    """
    params = params or ClaheParams()
    img = _check_gray(img)
    h, w = img.shape
    if h < params.grid_rows or w < params.grid_cols:
        raise ValueError(
            f"image {w}x{h} is smaller than the {params.grid_cols}x{params.grid_rows} CLAHE grid"
        )
    row_edges = _tile_edges(h, params.grid_rows)
    col_edges = _tile_edges(w, params.grid_cols)
    binned = (img.astype(np.int32) * params.bins) >> 8
    maps = np.zeros((params.grid_rows, params.grid_cols, params.bins), dtype=np.int64)
    for r in range(params.grid_rows):
        for c in range(params.grid_cols):
            tile = binned[row_edges[r] : row_edges[r + 1], col_edges[c] : col_edges[c + 1]]
            hist = np.bincount(tile.reshape(-1), minlength=params.bins)
            hist = clip_histogram(hist, params.clip_limit, params.bins)
            cdf = np.cumsum(hist)
            maps[r, c] = np.floor(cdf * (255.0 / tile.size) + 0.5).astype(np.int64)
    return maps


def _tile_centers(edges) -> np.ndarray:
    # midpoint of the pixel centers covered by each cell
    return (edges[:-1] + edges[1:] - 1) / 2.0


def _interp_axis(coords, centers):
    """Bracketing cell indices and blend fraction with clamped replication."""
    idx = np.searchsorted(centers, coords, side="right") - 1
    lo = np.clip(idx, 0, len(centers) - 1)
    hi = np.clip(idx + 1, 0, len(centers) - 1)
    span = centers[hi] - centers[lo]
    frac = np.where(span > 0, (coords - centers[lo]) / np.where(span > 0, span, 1.0), 0.0)
    return lo, hi, np.clip(frac, 0.0, 1.0)


def clahe(img, params: ClaheParams | None = None) -> np.ndarray:
    """Contrast-limited adaptive histogram equalization.

    The image is split into a grid of tiles (last row/column absorb the
    remainder); each tile gets a clipped-histogram CDF mapping, and every
    output pixel bilinearly interpolates the mappings of the four nearest
    tile centers, with clamped replication past the border centers.
    """
    params = params or ClaheParams()
    img = _check_gray(img)
    maps = clahe_tile_mappings(img, params).astype(np.float64)
    h, w = img.shape

    centers_y = _tile_centers(_tile_edges(h, params.grid_rows))
    centers_x = _tile_centers(_tile_edges(w, params.grid_cols))
    r0, r1, ty = _interp_axis(np.arange(h, dtype=np.float64), centers_y)
    c0, c1, tx = _interp_axis(np.arange(w, dtype=np.float64), centers_x)

    binned = (img.astype(np.int32) * params.bins) >> 8
    rr0, rr1 = r0[:, None], r1[:, None]
    cc0, cc1 = c0[None, :], c1[None, :]
    top = (1.0 - tx)[None, :] * maps[rr0, cc0, binned] + tx[None, :] * maps[rr0, cc1, binned]
    bot = (1.0 - tx)[None, :] * maps[rr1, cc0, binned] + tx[None, :] * maps[rr1, cc1, binned]
    out = (1.0 - ty)[:, None] * top + ty[:, None] * bot
    return np.clip(np.floor(out + 0.5), 0, 255).astype(np.uint8)


def _axis_origins(length: int, tile: int, stride: int) -> list[int]:
    origins = []
    pos = 0
    while True:
        if pos + tile > length:
            pos = max(0, length - tile)  # shift the final tile back to the edge
        if origins and origins[-1] == pos:
            break
        origins.append(pos)
        if pos + tile >= length:
            break
        pos += stride
    return origins


def plan_tiles(width: int, height: int, params: TilingParams | None = None) -> list[tuple[int, int, int, int]]:
    """Tile rectangles (x, y, w, h) covering a width×height image.

    Origins advance by tile_size - overlap; a final tile that would overrun
    the image is shifted back to end exactly at the edge.
    """
    params = params or TilingParams()
    if width < 1 or height < 1:
        raise ValueError("image dimensions must be >= 1")
    stride = params.tile_size - params.overlap
    xs = _axis_origins(width, params.tile_size, stride)
    ys = _axis_origins(height, params.tile_size, stride)
    return [
        (x, y, min(params.tile_size, width - x), min(params.tile_size, height - y))
        for y in ys
        for x in xs
    ]


def _feather_profile(n_out: int, ramp: float, left_open: bool, right_open: bool) -> np.ndarray:
    d = np.arange(n_out, dtype=np.float64) + 0.5
    w = np.ones(n_out, dtype=np.float64)
    if ramp > 0 and left_open:
        w *= np.minimum(1.0, d / ramp)
    if ramp > 0 and right_open:
        w *= np.minimum(1.0, (n_out - d) / ramp)
    return w


def feather_weights(rect, width: int, height: int, params: TilingParams) -> np.ndarray:
    """Blending weights for one tile's upscaled output.

    Weights ramp linearly from 0 at a cut edge (an edge interior to the
    image) to 1 past the overlap band; image-border edges stay at 1.
    """
    x, y, w, h = rect
    s = params.scale_factor
    ramp = float(params.overlap * s)
    wx = _feather_profile(w * s, ramp, x > 0, x + w < width)
    wy = _feather_profile(h * s, ramp, y > 0, y + h < height)
    return wy[:, None] * wx[None, :]


def upscale_tiled(img, params: TilingParams | None = None, upscaler=None) -> np.ndarray:
    """Upscale an image tile by tile, feather-blending the overlap bands.

    ``upscaler`` must expose upscale(tile) returning an array scaled by
    params.scale_factor on both axes; blend weights are normalized so they
    sum to 1 at every output pixel.
    """
    params = params or TilingParams()
    img = _check_gray(img)
    if upscaler is None:
        upscaler = BicubicUpscaler(params.scale_factor)
    h, w = img.shape
    s = params.scale_factor
    acc = np.zeros((h * s, w * s), dtype=np.float64)
    wsum = np.zeros_like(acc)
    for rect in plan_tiles(w, h, params):
        x, y, tw, th = rect
        up = np.asarray(upscaler.upscale(img[y : y + th, x : x + tw]))
        if up.shape != (th * s, tw * s):
            raise BackendError(
                f"upscaler returned shape {up.shape}, expected {(th * s, tw * s)}",
                kind="upscaler",
            )
        wt = feather_weights(rect, w, h, params)
        acc[y * s : (y + th) * s, x * s : (x + tw) * s] += wt * up.astype(np.float64)
        wsum[y * s : (y + th) * s, x * s : (x + tw) * s] += wt
    out = acc / wsum
    return np.clip(np.floor(out + 0.5), 0, 255).astype(np.uint8)


def _cubic_kernel(t: np.ndarray) -> np.ndarray:
    # Catmull-Rom (a = -0.5)
    at = np.abs(t)
    at2 = at * at
    at3 = at2 * at
    near = 1.5 * at3 - 2.5 * at2 + 1.0
    far = -0.5 * at3 + 2.5 * at2 - 4.0 * at + 2.0
    return np.where(at <= 1.0, near, np.where(at < 2.0, far, 0.0))


def _bicubic_axis(img: np.ndarray, s: int) -> np.ndarray:
    """Resample axis 0 by integer factor s with the Catmull-Rom kernel."""
    n = img.shape[0]
    src = (np.arange(n * s, dtype=np.float64) + 0.5) / s - 0.5
    base = np.floor(src).astype(np.int64)
    t = src - base
    out = np.zeros((n * s,) + img.shape[1:], dtype=np.float64)
    for k in range(-1, 3):
        idx = np.clip(base + k, 0, n - 1)
        out += _cubic_kernel(t - k)[(...,) + (None,) * (img.ndim - 1)] * img[idx]
    return out


def bicubic_upscale(img, s: int) -> np.ndarray:
    """Catmull-Rom bicubic resampling to (s·H, s·W); s = 1 is the identity."""
    img = _check_gray(img)
    if s < 1:
        raise ValueError("scale factor must be >= 1")
    if s == 1:
        return img.copy()
    out = _bicubic_axis(img.astype(np.float64), s)
    out = _bicubic_axis(out.T, s).T
    return np.clip(np.floor(out + 0.5), 0, 255).astype(np.uint8)


class BicubicUpscaler:
    """Built-in reference upscaler; lets the pipeline run with no external model."""

    def __init__(self, scale: int = 2):
        if scale < 1:
            raise ValueError("scale must be >= 1")
        self.scale = scale

    def upscale(self, img) -> np.ndarray:
        return bicubic_upscale(img, self.scale)


def preprocess_stages(img, clahe_params=None, tiling=None, upscaler=None) -> dict:
    """Run the full chain and keep intermediates: gray -> sr -> clahe."""
    gray = to_grayscale(img) if np.asarray(img).ndim == 3 else _check_gray(img).copy()
    sr = upscale_tiled(gray, tiling, upscaler)
    enhanced = clahe(sr, clahe_params)
    return {"gray": gray, "sr": sr, "clahe": enhanced}


def preprocess(img, clahe_params=None, tiling=None, upscaler=None) -> np.ndarray:
    """Grayscale, tiled upscaling, then CLAHE; returns the enhanced image."""
    return preprocess_stages(img, clahe_params, tiling, upscaler)["clahe"]


def load_image(data_or_path) -> np.ndarray:
    """Decode a PNG/JPEG file path or raw bytes into an RGB array.

    Raises ValueError when the bytes are not a decodable image.
    """
    try:
        if isinstance(data_or_path, (bytes, bytearray)):
            im = Image.open(io.BytesIO(data_or_path))
        else:
            im = Image.open(data_or_path)
        return np.asarray(im.convert("RGB"))
    except (UnidentifiedImageError, OSError) as exc:
        raise ValueError(f"cannot decode image: {exc}") from exc


def save_png(path, img) -> None:
    """Write a grayscale or RGB array as PNG."""
    arr = np.asarray(img)
    mode = "L" if arr.ndim == 2 else "RGB"
    Image.fromarray(arr.astype(np.uint8), mode=mode).save(path, format="PNG")
