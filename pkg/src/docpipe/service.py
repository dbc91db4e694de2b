"""HTTP facade for the pipeline: detect, classify, live label editing, health.

Endpoints:
  GET  /api/health   backend readiness (cached pings, 10 s refresh)
  GET  /api/labels   current label set + hypothesis template
  PUT  /api/labels   atomically replace the label set
  POST /api/detect   image upload -> regions
  POST /api/classify image upload -> classification (+ regions on request)

Uploads are multipart (field ``image``) or a raw image/png | image/jpeg
body; options ride as form fields or query parameters.
"""

from __future__ import annotations

import threading
import time

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from . import classify as classify_mod
from .backends import Backends
from .config import Config
from .errors import BackendError
from .geometry import polygon_to_flat
from .imaging import load_image

HEALTH_REFRESH_S = 10.0
_BACKEND_KINDS = ("detector", "recognizer", "nli", "summarizer", "upscaler")


class _LabelStore:
    """Current label set + template, replaced atomically under a lock."""

    def __init__(self, labels, template):
        self._lock = threading.Lock()
        self._labels = list(labels)
        self._template = template

    def get(self) -> tuple[list[str], str]:
        with self._lock:
            return list(self._labels), self._template

    def put(self, labels, template=None) -> tuple[list[str], str]:
        labels = classify_mod.validate_labels(labels)
        with self._lock:
            self._labels = labels
            if template is not None:
                self._template = classify_mod.validate_template(template)
            return list(self._labels), self._template


class _HealthCache:
    def __init__(self, backends: Backends):
        self._backends = backends
        self._lock = threading.Lock()
        self._stamp = 0.0
        self._payload: dict = {}

    def snapshot(self) -> dict:
        with self._lock:
            now = time.monotonic()
            if now - self._stamp > HEALTH_REFRESH_S or not self._payload:
                self._payload = {}
                for kind in _BACKEND_KINDS:
                    backend = self._backends.by_kind(kind)
                    ping = getattr(backend, "ping", None)
                    try:
                        ready = bool(ping()) if ping is not None else True
                    except Exception:
                        ready = False
                    self._payload[kind] = {
                        "impl": type(backend).__name__,
                        "ready": ready,
                    }
                self._stamp = now
            return self._payload


def _error(status: int, message: str, backend: str | None = None) -> JSONResponse:
    detail: dict = {"error": message}
    if backend:
        detail["backend"] = backend
    return JSONResponse(status_code=status, content=detail)


def _truthy(value) -> bool:
    return str(value).strip().lower() in ("1", "true", "yes", "on")


async def _read_upload(request: Request, max_bytes: int):
    """Pull image bytes + option fields from multipart or a raw body.

    Returns (data, options, error_response); exactly one of data/error is set.
    """
    options: dict = dict(request.query_params)
    length = request.headers.get("content-length")
    if length is not None and length.isdigit() and int(length) > max_bytes:
        return None, options, _error(413, f"upload exceeds {max_bytes} bytes")

    content_type = request.headers.get("content-type", "")
    if content_type.startswith("multipart/form-data"):
        form = await request.form()
        for key, value in form.multi_items():
            if key != "image":
                options[key] = value
        upload = form.get("image")
        if upload is None:
            return None, options, _error(415, "multipart body needs an 'image' field")
        data = await upload.read() if hasattr(upload, "read") else str(upload).encode()
    else:
        data = await request.body()
    if len(data) > max_bytes:
        return None, options, _error(413, f"upload exceeds {max_bytes} bytes")
    if not data:
        return None, options, _error(415, "empty request body")
    return data, options, None


def _region_payload(regions) -> list[dict]:
    return [
        {"polygon": polygon_to_flat(r.polygon), "score": r.score} for r in regions
    ]


def create_app(config: Config | None = None, backends: Backends | None = None) -> FastAPI:
    config = config or Config()
    backends = backends or config.build_backends()

    app = FastAPI(title="docpipe", docs_url=None, redoc_url=None)
    labels_store = _LabelStore(config.labels, config.hypothesis_template)
    health = _HealthCache(backends)
    worker_gate = threading.Semaphore(max(1, config.service.workers))
    app.state.config = config
    app.state.backends = backends

    def _run_pipeline(fn, *args, **kwargs):
        with worker_gate:
            return fn(*args, **kwargs)

    @app.get("/api/health")
    def api_health():
        return {"status": "ok", "backends": health.snapshot()}

    @app.get("/api/labels")
    def api_labels_get():
        labels, template = labels_store.get()
        return {"labels": labels, "hypothesis_template": template}

    @app.put("/api/labels")
    async def api_labels_put(request: Request):
        try:
            body = await request.json()
        except Exception:
            return _error(422, "body must be JSON")
        if isinstance(body, list):
            labels, template = body, None
        elif isinstance(body, dict):
            labels = body.get("labels")
            template = body.get("hypothesis_template")
        else:
            return _error(422, "body must be a label list or an object with 'labels'")
        if not isinstance(labels, list):
            return _error(422, "'labels' must be a list of strings")
        try:
            stored_labels, stored_template = labels_store.put(labels, template)
        except ValueError as exc:
            return _error(422, str(exc))
        return {"labels": stored_labels, "hypothesis_template": stored_template}

    @app.post("/api/detect")
    async def api_detect(request: Request):
        data, _, err = await _read_upload(request, config.service.max_upload_bytes)
        if err is not None:
            return err
        try:
            img = load_image(data)
        except ValueError as exc:
            return _error(415, str(exc))
        try:
            outcome = _run_pipeline(
                classify_mod.detect_document,
                img,
                backends,
                det_params=config.detection,
                clahe_params=config.clahe,
                tiling=config.tiling,
            )
        except BackendError as exc:
            return _error(502, str(exc), backend=exc.kind or "unknown")
        return {"regions": _region_payload(outcome.regions), "timing_ms": outcome.timings_ms}

    @app.post("/api/classify")
    async def api_classify(request: Request):
        data, options, err = await _read_upload(request, config.service.max_upload_bytes)
        if err is not None:
            return err
        try:
            img = load_image(data)
        except ValueError as exc:
            return _error(415, str(exc))

        labels, template = labels_store.get()
        if "labels" in options and str(options["labels"]).strip():
            raw = options["labels"]
            requested = [p.strip() for p in str(raw).split(",")]
            try:
                labels = classify_mod.validate_labels(requested)
            except ValueError as exc:
                return _error(422, f"invalid label override: {exc}")
        summarize = _truthy(options.get("summarize", "")) or config.summarize
        return_regions = _truthy(options.get("return_regions", "true"))

        try:
            outcome = _run_pipeline(
                classify_mod.classify_document,
                img,
                backends,
                labels=labels,
                template=template,
                summarize=summarize,
                det_params=config.detection,
                clahe_params=config.clahe,
                tiling=config.tiling,
            )
        except BackendError as exc:
            return _error(502, str(exc), backend=exc.kind or "unknown")

        result = outcome.classification
        payload = {
            "chosen": result.chosen,
            "label_probs": result.label_probs,
            "timing_ms": outcome.timings_ms,
        }
        if return_regions:
            payload["regions"] = _region_payload(outcome.regions)
        if result.summary is not None:
            payload["summary"] = result.summary
        return payload

    static_dir = config.service.static_dir
    if static_dir:
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")
    else:

        @app.get("/")
        def index():
            return {
                "service": "docpipe",
                "endpoints": ["/api/health", "/api/labels", "/api/detect", "/api/classify"],
            }

    return app
