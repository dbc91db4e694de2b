import numpy as np
import pytest

from docpipe import imaging
from docpipe.errors import BackendError
from docpipe.imaging import BicubicUpscaler, ClaheParams, TilingParams


class IdentityUpscaler:
    def upscale(self, tile):
        return tile.copy()


class BadShapeUpscaler:
    def upscale(self, tile):
        return np.zeros((tile.shape[0] + 1, tile.shape[1]), np.uint8)


def naive_tile_mapping(tile, clip_limit, bins):
    """Straightforward histogram/CDF mapping, independent of the library path."""
    hist = [0] * bins
    for v in tile.reshape(-1):
        hist[(int(v) * bins) >> 8] += 1
    n = tile.size
    ceiling = -(-clip_limit * n // bins)  # ceil for positive values
    excess = sum(max(h - ceiling, 0) for h in hist)
    hist = [min(h, ceiling) for h in hist]
    share, leftover = divmod(int(excess), bins)
    hist = [h + share for h in hist]
    for i in range(leftover):
        hist[i] += 1
    mapping = []
    running = 0
    for h in hist:
        running += h
        mapping.append(int(np.floor(running * 255.0 / n + 0.5)))
    return mapping


def cubic_kernel_scalar(t):
    """Catmull-Rom weight (a = -0.5) evaluated with plain python arithmetic."""
    t = abs(t)
    if t <= 1:
        return 1.5 * t**3 - 2.5 * t**2 + 1
    if t < 2:
        return -0.5 * t**3 + 2.5 * t**2 - 4 * t + 2
    return 0.0


class TestGrayscale:
    def test_white_and_black_fixed_points(self):
        img = np.zeros((2, 2, 3), np.uint8)
        img[0] = 255
        out = imaging.to_grayscale(img)
        assert out[0, 0] == 255 and out[1, 1] == 0

    def test_pure_red(self):
        # 0.299 * 255 = 76.245 -> 76
        img = np.array([[[255, 0, 0]]], np.uint8)
        assert imaging.to_grayscale(img)[0, 0] == 76

    def test_equal_channels_map_to_themselves(self):
        v = np.arange(256, dtype=np.uint8)
        img = np.stack([v, v, v], axis=-1)[None, :, :]
        assert np.array_equal(imaging.to_grayscale(img)[0], v)

    def test_output_range_and_dims(self, rng):
        img = rng.integers(0, 256, (37, 53, 3), dtype=np.uint8)
        out = imaging.to_grayscale(img)
        assert out.shape == (37, 53) and out.dtype == np.uint8


class TestClahe:
    def test_constant_image_stays_constant(self):
        img = np.full((128, 128), 100, np.uint8)
        out = imaging.clahe(img)
        assert out.shape == img.shape
        assert len(np.unique(out)) == 1

    def test_two_level_checkerboard_order_preserved(self):
        img = np.indices((64, 64)).sum(axis=0) % 2
        img = np.where(img == 0, 50, 200).astype(np.uint8)
        out = imaging.clahe(img, ClaheParams(clip_limit=1e9, grid_cols=1, grid_rows=1))
        lo = out[img == 50]
        hi = out[img == 200]
        assert len(np.unique(lo)) == 1 and len(np.unique(hi)) == 1
        assert lo[0] < hi[0]

    def test_gradient_mappings_match_naive_oracle(self):
        img = np.tile(np.linspace(0, 255, 512).astype(np.uint8), (512, 1))
        params = ClaheParams(clip_limit=8.0, grid_cols=8, grid_rows=8)
        maps = imaging.clahe_tile_mappings(img, params)
        for r in range(8):
            for c in range(8):
                tile = img[r * 64 : (r + 1) * 64, c * 64 : (c + 1) * 64]
                expected = naive_tile_mapping(tile, 8.0, 256)
                assert maps[r, c].tolist() == expected
                assert np.all(np.diff(maps[r, c]) >= 0)

    def test_clip_bound_property(self, rng):
        # post-clip histogram never exceeds ceiling + share + 1
        for _ in range(20):
            hist = rng.integers(0, 5000, size=256)
            total = int(hist.sum())
            if total == 0:
                continue
            clipped = imaging.clip_histogram(hist, 8.0, 256)
            assert int(clipped.sum()) == total
            ceiling = int(np.ceil(8.0 * total / 256))
            excess = int(np.maximum(hist - ceiling, 0).sum())
            share = excess // 256
            assert clipped.max() <= ceiling + share + 1

    def test_image_smaller_than_grid_rejected(self):
        with pytest.raises(ValueError):
            imaging.clahe(np.zeros((4, 4), np.uint8), ClaheParams(grid_cols=8, grid_rows=8))

    def test_dims_preserved(self, rng):
        img = rng.integers(0, 256, (70, 111), dtype=np.uint8)
        assert imaging.clahe(img).shape == (70, 111)


class TestPlanTiles:
    def test_exact_fit_single_tile(self):
        assert imaging.plan_tiles(64, 64) == [(0, 0, 64, 64)]

    def test_100x100_clamped_origins(self):
        plan = imaging.plan_tiles(100, 100)
        assert plan == [(0, 0, 64, 64), (36, 0, 64, 64), (0, 36, 64, 64), (36, 36, 64, 64)]

    def test_image_smaller_than_tile(self):
        assert imaging.plan_tiles(30, 30) == [(0, 0, 30, 30)]

    def test_coverage_exhaustive(self):
        # every source pixel covered for all sizes 1..130 at tile 64 / overlap 16
        params = TilingParams(tile_size=64, overlap=16)
        for width in range(1, 131):
            covered = np.zeros(width, dtype=bool)
            for x, _, w, _ in imaging.plan_tiles(width, 1, params):
                assert w <= 64 and x >= 0 and x + w <= width
                covered[x : x + w] = True
            assert covered.all(), f"width {width} leaves gaps"

    def test_invalid_params(self):
        with pytest.raises(ValueError):
            TilingParams(tile_size=32, overlap=32)
        with pytest.raises(ValueError):
            imaging.plan_tiles(0, 5)


class TestUpscaleTiled:
    def test_identity_upscaler_is_bit_exact(self, rng):
        params = TilingParams(tile_size=64, overlap=16, scale_factor=1)
        for _ in range(100):
            h = int(rng.integers(1, 150))
            w = int(rng.integers(1, 150))
            img = rng.integers(0, 256, (h, w), dtype=np.uint8)
            out = imaging.upscale_tiled(img, params, IdentityUpscaler())
            assert np.array_equal(out, img)

    def test_bicubic_s2_dims(self, rng):
        img = rng.integers(0, 256, (100, 100), dtype=np.uint8)
        out = imaging.upscale_tiled(img, TilingParams(scale_factor=2), BicubicUpscaler(2))
        assert out.shape == (200, 200)

    def test_constant_preserved(self):
        img = np.full((90, 70), 128, np.uint8)
        out = imaging.upscale_tiled(img, TilingParams(scale_factor=2), BicubicUpscaler(2))
        assert np.all(out == 128)

    def test_wrong_shape_upscaler_rejected(self, rng):
        img = rng.integers(0, 256, (80, 80), dtype=np.uint8)
        with pytest.raises(BackendError):
            imaging.upscale_tiled(img, TilingParams(scale_factor=1), BadShapeUpscaler())

    def test_feather_weights_normalize_to_one(self):
        params = TilingParams(tile_size=64, overlap=16, scale_factor=2)
        for w, h in [(100, 100), (65, 130), (64, 64), (30, 97)]:
            s = params.scale_factor
            plan = imaging.plan_tiles(w, h, params)
            total = np.zeros((h * s, w * s))
            for rect in plan:
                x, y, tw, th = rect
                total[y * s : (y + th) * s, x * s : (x + tw) * s] += imaging.feather_weights(
                    rect, w, h, params
                )
            assert np.all(total > 0)
            # accumulate each tile's normalized weight again; must hit 1 everywhere
            norm_acc = np.zeros_like(total)
            for rect in plan:
                x, y, tw, th = rect
                sl = np.s_[y * s : (y + th) * s, x * s : (x + tw) * s]
                norm_acc[sl] += imaging.feather_weights(rect, w, h, params) / total[sl]
            assert np.max(np.abs(norm_acc - 1.0)) < 1e-6


class TestBicubic:
    def test_scale_1_identity(self, rng):
        img = rng.integers(0, 256, (23, 31), dtype=np.uint8)
        assert np.array_equal(imaging.bicubic_upscale(img, 1), img)

    def test_constant_2x2(self):
        img = np.full((2, 2), 128, np.uint8)
        out = imaging.bicubic_upscale(img, 2)
        assert out.shape == (4, 4)
        assert np.all(out == 128)

    def test_1x2_step_monotone_and_matches_kernel(self):
        img = np.array([[0, 255]], np.uint8)
        out = imaging.bicubic_upscale(img, 2)[0].astype(float)
        assert out.shape == (4,)
        assert np.all(np.diff(out) >= 0)
        # independent scalar evaluation of the kernel at each output position
        expected = []
        for q in range(4):
            src = (q + 0.5) / 2 - 0.5
            base = int(np.floor(src))
            t = src - base
            acc = 0.0
            for k in range(-1, 3):
                idx = min(max(base + k, 0), 1)
                acc += cubic_kernel_scalar(t - k) * (0.0 if idx == 0 else 255.0)
            expected.append(min(max(int(np.floor(acc + 0.5)), 0), 255))
        assert out.tolist() == expected

    def test_clamped_to_byte_range(self, rng):
        img = rng.integers(0, 256, (9, 9), dtype=np.uint8)
        out = imaging.bicubic_upscale(img, 3)
        assert out.min() >= 0 and out.max() <= 255
        assert out.shape == (27, 27)


class TestIo:
    def test_png_roundtrip(self, tmp_path, rng):
        img = rng.integers(0, 256, (20, 30, 3), dtype=np.uint8)
        path = tmp_path / "img.png"
        imaging.save_png(path, img)
        assert np.array_equal(imaging.load_image(path), img)

    def test_undecodable_rejected(self):
        with pytest.raises(ValueError):
            imaging.load_image(b"definitely not an image")

    def test_preprocess_stage_shapes(self, rng):
        img = rng.integers(0, 256, (40, 50, 3), dtype=np.uint8)
        stages = imaging.preprocess_stages(img, tiling=TilingParams(scale_factor=2))
        assert stages["gray"].shape == (40, 50)
        assert stages["sr"].shape == (80, 100)
        assert stages["clahe"].shape == (80, 100)
