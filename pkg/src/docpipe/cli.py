"""Batch entry points: preprocess, detect, classify, eval, bench, serve.

Flag values beat the config file, which beats built-in defaults; the
``DOCPIPE_*`` environment sits between file and flags. Exit status is 0 on
success, 1 when any per-file step failed (failures are listed on stderr),
and 2 on usage or configuration errors.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import classify as classify_mod
from . import evaluation, imaging
from .config import Config, load_config, load_detection_params
from .detection import DetectionParams, format_detection_line
from .errors import ConfigError, DocpipeError

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg")


def _input_images(path: Path) -> list[Path]:
    if path.is_dir():
        return sorted(p for p in path.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)
    return [path]


def _flag_overrides(args) -> dict:
    overrides: dict = {}
    if getattr(args, "labels", None):
        overrides.setdefault("classify", {})["labels"] = args.labels
    if getattr(args, "summarize", False):
        overrides.setdefault("classify", {})["summarize"] = True
    if getattr(args, "iou_thresh", None) is not None:
        overrides.setdefault("eval", {})["iou_thresh"] = args.iou_thresh
    if getattr(args, "workers", None) is not None:
        overrides.setdefault("eval", {})["workers"] = args.workers
    if getattr(args, "port", None) is not None:
        overrides.setdefault("service", {})["port"] = args.port
    return overrides


def _load_config(args) -> Config:
    cfg = load_config(path=args.config, overrides=_flag_overrides(args))
    if getattr(args, "det_params", None):
        merged = dict(
            (f, getattr(cfg.detection, f)) for f in DetectionParams.__dataclass_fields__
        )
        merged.update(load_detection_params(args.det_params))
        try:
            cfg.detection = DetectionParams(**merged)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad --det-params file: {exc}") from exc
    return cfg


def _for_each_image(paths, fn, workers: int):
    """Run fn over images, reporting results in sorted-path order."""
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, paths))
    return [fn(p) for p in paths]


def _cmd_preprocess(args, cfg: Config) -> int:
    if not args.dump_stages:
        print("preprocess requires --dump-stages <dir>", file=sys.stderr)
        return 2
    out_root = Path(args.dump_stages)
    out_root.mkdir(parents=True, exist_ok=True)
    inputs = _input_images(Path(args.input))
    backends = cfg.build_backends()

    def run(path: Path):
        try:
            stages = imaging.preprocess_stages(
                imaging.load_image(path), cfg.clahe, cfg.tiling, backends.upscaler
            )
            out_dir = out_root if len(inputs) == 1 else out_root / path.stem
            out_dir.mkdir(parents=True, exist_ok=True)
            imaging.save_png(out_dir / "01_gray.png", stages["gray"])
            imaging.save_png(out_dir / "02_sr.png", stages["sr"])
            imaging.save_png(out_dir / "03_clahe.png", stages["clahe"])
            return None
        except (DocpipeError, ValueError, OSError) as exc:
            return f"{path}: {exc}"

    failures = [f for f in _for_each_image(inputs, run, cfg.eval.workers) if f]
    for failure in failures:
        print(failure, file=sys.stderr)
    return 1 if failures else 0


def _cmd_detect(args, cfg: Config) -> int:
    out_dir = Path(args.output)
    out_dir.mkdir(parents=True, exist_ok=True)
    inputs = _input_images(Path(args.input))
    backends = cfg.build_backends()

    def run(path: Path):
        try:
            outcome = classify_mod.detect_document(
                imaging.load_image(path),
                backends,
                det_params=cfg.detection,
                clahe_params=cfg.clahe,
                tiling=cfg.tiling,
            )
            lines = [format_detection_line(r) for r in outcome.regions]
            (out_dir / (path.stem + ".txt")).write_text(
                "\n".join(lines) + ("\n" if lines else ""), encoding="utf-8"
            )
            return None
        except (DocpipeError, ValueError, OSError) as exc:
            return f"{path}: {exc}"

    failures = [f for f in _for_each_image(inputs, run, cfg.eval.workers) if f]
    for failure in failures:
        print(failure, file=sys.stderr)
    return 1 if failures else 0


def _cmd_classify(args, cfg: Config) -> int:
    inputs = _input_images(Path(args.input))
    backends = cfg.build_backends()

    def run(path: Path):
        try:
            outcome = classify_mod.classify_document(
                imaging.load_image(path),
                backends,
                labels=cfg.labels,
                template=cfg.hypothesis_template,
                summarize=cfg.summarize,
                det_params=cfg.detection,
                clahe_params=cfg.clahe,
                tiling=cfg.tiling,
            )
            result = outcome.classification
            probs = ",".join(f"{result.label_probs[lab]:.6f}" for lab in cfg.labels)
            return (f"{path}\t{result.chosen}\t{probs}", None)
        except (DocpipeError, ValueError, OSError) as exc:
            return (None, f"{path}: {exc}")

    rows = _for_each_image(inputs, run, cfg.eval.workers)
    failures = []
    for line, failure in rows:
        if failure:
            failures.append(failure)
        else:
            print(line)
    for failure in failures:
        print(failure, file=sys.stderr)
    return 1 if failures else 0


def _eval_backends(cfg: Config):
    """Batch evaluation tolerates long per-image latency: raise subprocess
    timeouts to the eval timeout unless a descriptor set its own."""
    from dataclasses import replace

    descriptors = {}
    for kind, desc in cfg.backend_descriptors.items():
        if desc.impl == "subprocess" and desc.timeout == 30.0:
            descriptors[kind] = replace(desc, timeout=cfg.eval.timeout)
        else:
            descriptors[kind] = desc
    from .backends import build_backends

    return build_backends(descriptors)


def _cmd_eval(args, cfg: Config) -> int:
    backends = _eval_backends(cfg) if not args.pred_dir else None
    pipeline = None
    if backends is not None:

        def pipeline(img):
            return classify_mod.detect_document(
                img,
                backends,
                det_params=cfg.detection,
                clahe_params=cfg.clahe,
                tiling=cfg.tiling,
            ).regions

    report = evaluation.evaluate_dataset(
        args.image_dir,
        args.gt_dir,
        pipeline=pipeline,
        predictions_dir=args.pred_dir,
        iou_thresh=cfg.eval.iou_thresh,
        resolution=cfg.eval.resolution,
        workers=cfg.eval.workers,
    )
    sys.stdout.write(evaluation.render_report(report))
    if args.report_out:
        Path(args.report_out).write_text(
            json.dumps(evaluation.report_to_dict(report), indent=2) + "\n", encoding="utf-8"
        )
    return 0


def _percentile(values, q) -> float:
    return float(np.percentile(np.asarray(values, dtype=np.float64), q))


def _cmd_bench(args, cfg: Config) -> int:
    inputs = _input_images(Path(args.input))
    if not inputs:
        print(f"no images under {args.input}", file=sys.stderr)
        return 2
    backends = cfg.build_backends()

    stage_samples: dict[str, list[float]] = {}
    region_counts: dict[str, int] = {}
    started = time.perf_counter()
    for _ in range(args.runs):
        for path in inputs:
            outcome = classify_mod.detect_document(
                imaging.load_image(path),
                backends,
                det_params=cfg.detection,
                clahe_params=cfg.clahe,
                tiling=cfg.tiling,
            )
            region_counts[path.name] = len(outcome.regions)
            for stage, ms in outcome.timings_ms.items():
                if stage != "total":
                    stage_samples.setdefault(stage, []).append(ms)
    wall = time.perf_counter() - started

    total_images = len(inputs) * args.runs
    print(f"images: {len(inputs)}")
    print(f"runs: {args.runs}")
    for name in sorted(region_counts):
        print(f"file.{name}.regions: {region_counts[name]}")
    print(f"regions_total: {sum(region_counts.values())}")
    print(f"timing.images_per_sec: {total_images / wall if wall > 0 else 0.0:.3f}")
    for stage in sorted(stage_samples):
        samples = stage_samples[stage]
        print(f"timing.stage.{stage}.mean_ms: {float(np.mean(samples)):.3f}")
        print(f"timing.stage.{stage}.p50_ms: {_percentile(samples, 50):.3f}")
        print(f"timing.stage.{stage}.p90_ms: {_percentile(samples, 90):.3f}")
    return 0


def _cmd_serve(args, cfg: Config) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(cfg)
    uvicorn.run(app, host=cfg.service.host, port=cfg.service.port, log_level="info")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="docpipe", description=__doc__)
    parser.add_argument("--config", default=None, help="YAML config file")
    parser.add_argument("--workers", type=int, default=None, help="parallel workers for batch work")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("preprocess", help="write per-stage preprocessing dumps")
    p.add_argument("input", help="image file or directory")
    p.add_argument("--dump-stages", default=None, metavar="DIR")

    p = sub.add_parser("detect", help="write detection files, one per image")
    p.add_argument("input", help="image file or directory")
    p.add_argument("output", help="directory for prediction files")
    p.add_argument("--det-params", default=None, metavar="FILE")

    p = sub.add_parser("classify", help="print per-file label and probabilities")
    p.add_argument("input", help="image file or directory")
    p.add_argument("--labels", default=None, help="comma-separated label override")
    p.add_argument("--summarize", action="store_true")
    p.add_argument("--det-params", default=None, metavar="FILE")

    p = sub.add_parser("eval", help="evaluate detections against polygon GT")
    p.add_argument("image_dir")
    p.add_argument("gt_dir")
    p.add_argument("--pred-dir", default=None, help="use prediction files instead of the pipeline")
    p.add_argument("--iou-thresh", type=float, default=None)
    p.add_argument("--det-params", default=None, metavar="FILE")
    p.add_argument("--report-out", default=None, metavar="PATH")

    p = sub.add_parser("bench", help="time detection over a directory")
    p.add_argument("input", help="image directory")
    p.add_argument("--runs", type=int, default=3)
    p.add_argument("--det-params", default=None, metavar="FILE")

    p = sub.add_parser("serve", help="start the HTTP service")
    p.add_argument("--port", type=int, default=None)

    return parser


_COMMANDS = {
    "preprocess": _cmd_preprocess,
    "detect": _cmd_detect,
    "classify": _cmd_classify,
    "eval": _cmd_eval,
    "bench": _cmd_bench,
    "serve": _cmd_serve,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _load_config(args)
        return _COMMANDS[args.command](args, cfg)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except DocpipeError as exc:
        print(str(exc), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
