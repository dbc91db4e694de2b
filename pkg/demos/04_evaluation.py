"""
Detection evaluation walkthrough
================================

Builds a small dataset on disk (images + polygon GT files with a don't-care
region), evaluates a planted-rectangle detector against it, and prints the
report. Also demonstrates the self-consistency identity: feeding the GT
polygons back as predictions scores exactly P = R = F = 1.
"""

import tempfile
from pathlib import Path

import numpy as np

from docpipe import detect_document, evaluation
from docpipe.backends import BackendDescriptor, build_backends
from docpipe.detection import TextRegion, format_detection_line
from docpipe.geometry import as_polygon
from docpipe.imaging import save_png

rng = np.random.default_rng(11)
root = Path(tempfile.mkdtemp(prefix="docpipe_demo_"))
image_dir, gt_dir, pred_dir = root / "images", root / "gt", root / "pred"
for d in (image_dir, gt_dir, pred_dir):
    d.mkdir()


def rect(x0, y0, x1, y1):
    return as_polygon([(x0, y0), (x1, y0), (x1, y1), (x0, y1)])


# detector stub plants two regions (in preprocessed 2x coordinates); the
# probability region is the shrunk text kernel, so the pipeline's unclip
# step dilates it back out. Annotate GT at the detector's actual output
# extent: run the pipeline once and freeze its polygons as the annotation.
backends = build_backends(
    {
        "detector": BackendDescriptor(
            kind="detector", options={"rects": [(22, 22, 98, 30), (30, 90, 130, 116)]}
        )
    }
)


def pipeline(img):
    return detect_document(img, backends).regions


probe = rng.integers(130, 250, (80, 120, 3), dtype=np.uint8)
detected = pipeline(probe)
print(f"detector produces {len(detected)} regions; using their extents as GT\n")

# 5 images; each GT carries the two real words plus one unreadable (###)
for i in range(5):
    save_png(image_dir / f"doc{i}.png", rng.integers(130, 250, (80, 120, 3), dtype=np.uint8))
    lines = [
        evaluation.format_gt_line(detected[0].polygon, "hello"),
        evaluation.format_gt_line(detected[1].polygon, "world"),
        evaluation.format_gt_line(rect(100, 70, 115, 78), "###"),
    ]
    (gt_dir / f"doc{i}.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")

report = evaluation.evaluate_dataset(image_dir, gt_dir, pipeline=pipeline, iou_thresh=0.5)
print("--- stub detector vs GT ---")
print(evaluation.render_report(report))

# self-consistency: GT fed back as predictions is a perfect detector
for gt_file in gt_dir.glob("*.txt"):
    regions = evaluation.parse_gt_file(gt_file.read_text(encoding="utf-8"))
    lines = [
        format_detection_line(TextRegion(polygon=g.polygon, score=1.0))
        for g in regions
        if not g.dont_care
    ]
    (pred_dir / gt_file.name).write_text("\n".join(lines) + "\n", encoding="utf-8")

perfect = evaluation.evaluate_dataset(image_dir, gt_dir, predictions_dir=pred_dir)
print("--- GT as predictions ---")
print(f"P={perfect.precision} R={perfect.recall} F={perfect.f_measure}")
print(f"\ndataset left in {root}")
