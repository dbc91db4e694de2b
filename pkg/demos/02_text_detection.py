"""
Detection post-processing walkthrough
=====================================

Starts from raw detector outputs (a probability map and a threshold map),
and walks the post-processing chain: soft/hard binarization, connected
components, contour tracing, region scoring, unclip dilation, filtering.
"""

import numpy as np

from docpipe import detection, geometry

# fake detector output: three text-like blocks plus one 3-pixel-tall sliver
# that the minimum-height filter must drop
prob = np.full((220, 320), 0.05)
blocks = [(24, 30, 120, 16), (170, 70, 110, 22), (40, 140, 90, 34)]
for x, y, w, h in blocks:
    prob[y : y + h, x : x + w] = 0.92
prob[200:203, 100:240] = 0.92
maps = detection.ScoreMaps(prob=prob, thresh=np.full(prob.shape, 0.3))

# the differentiable-binarization transfer curve around the threshold
for p in (0.25, 0.3, 0.35):
    soft = detection.db_soft_binarize(p, 0.3, k=50.0)
    print(f"soft binarization P={p:.2f} T=0.30 -> {soft:.4f}")

# hard candidate mask: P >= max(T, 0.25)
params = detection.DetectionParams()
mask = detection.hard_binarize(maps, params)
labels = detection.connected_components(mask)
print(f"\nforeground pixels: {mask.sum()}, components: {labels.max()}")

# full chain: trace -> score -> unclip -> filter, sorted by score
regions = detection.detect_text(maps, params)
print(f"regions kept: {len(regions)} (the 3 px sliver is gone)")
for i, region in enumerate(regions):
    x0, y0, x1, y1 = region.bounds()
    print(
        f"  region {i}: score {region.score:.3f}, "
        f"bbox {x0:.0f},{y0:.0f} .. {x1:.0f},{y1:.0f}, "
        f"{len(region.polygon)} vertices, area {geometry.polygon_area(region.polygon):.0f}"
    )

# unclip in isolation: a square with area 4 and perimeter 8 at ratio 1.5
# dilates by 4 * 1.5 / 8 = 0.75 per side
square = geometry.as_polygon([(0, 0), (2, 0), (2, 2), (0, 2)])
grown = detection.unclip_region(square, 1.5)
print(f"\nunclip: side 2 square -> bounds {geometry.polygon_bounds(grown)}")

# serialization: one line per region, score;x1,y1,...
print("\nprediction lines:")
for region in regions:
    line = detection.format_detection_line(region)
    print(" ", line[:72] + ("..." if len(line) > 72 else ""))
