"""Layered configuration: built-in defaults < YAML file < environment < flags.

Environment overrides use the ``DOCPIPE_`` prefix with ``__`` separating
nested sections, e.g. ``DOCPIPE_DETECTION__BIN_THRESH=0.3``. Values are
parsed as YAML scalars so numbers and booleans come through typed.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import yaml

from .backends import BackendDescriptor, Backends, build_backends
from .backends.types import KINDS
from .classify import DEFAULT_LABELS, DEFAULT_TEMPLATE, validate_labels, validate_template
from .detection import DetectionParams
from .errors import ConfigError
from .imaging import ClaheParams, TilingParams

ENV_PREFIX = "DOCPIPE_"

_DEFAULTS = {
    "detection": {},
    "clahe": {},
    "tiling": {},
    "classify": {
        "labels": list(DEFAULT_LABELS),
        "hypothesis_template": DEFAULT_TEMPLATE,
        "summarize": False,
    },
    "eval": {"iou_thresh": 0.5, "resolution": 512, "workers": 1, "timeout": 300.0},
    "service": {
        "host": "127.0.0.1",
        "port": 8080,
        "max_upload_bytes": 16 * 1024 * 1024,
        "workers": 0,  # 0 = CPU count
        "static_dir": "",
    },
    "backends": {kind: {} for kind in KINDS},
}


@dataclass
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8080
    max_upload_bytes: int = 16 * 1024 * 1024
    workers: int = 0
    static_dir: str = ""

    def __post_init__(self):
        if not 1 <= self.port <= 65535:
            raise ConfigError(f"service.port {self.port} outside 1..65535")
        if self.max_upload_bytes < 1024 * 1024:
            raise ConfigError("service.max_upload_bytes must be at least 1 MiB")
        if self.workers == 0:
            self.workers = os.cpu_count() or 1


@dataclass
class EvalConfig:
    iou_thresh: float = 0.5
    resolution: int = 512
    workers: int = 1
    timeout: float = 300.0


@dataclass
class Config:
    detection: DetectionParams = field(default_factory=DetectionParams)
    clahe: ClaheParams = field(default_factory=ClaheParams)
    tiling: TilingParams = field(default_factory=TilingParams)
    labels: list[str] = field(default_factory=lambda: list(DEFAULT_LABELS))
    hypothesis_template: str = DEFAULT_TEMPLATE
    summarize: bool = False
    eval: EvalConfig = field(default_factory=EvalConfig)
    service: ServiceConfig = field(default_factory=ServiceConfig)
    backend_descriptors: dict[str, BackendDescriptor] = field(default_factory=dict)

    def build_backends(self) -> Backends:
        return build_backends(self.backend_descriptors)

    def classify_kwargs(self) -> dict:
        return {
            "labels": list(self.labels),
            "template": self.hypothesis_template,
            "det_params": self.detection,
            "clahe_params": self.clahe,
            "tiling": self.tiling,
        }


def _deep_merge(base: dict, extra: dict, path: str = "") -> dict:
    """Merge override trees; top-level sections are a fixed set, leaf keys are
    validated later by the parameter constructors (which name bad keys)."""
    out = dict(base)
    for key, value in extra.items():
        where = f"{path}.{key}" if path else key
        if not path and key not in base:
            raise ConfigError(f"unknown configuration section {where!r}")
        if isinstance(base.get(key), dict):
            if not isinstance(value, dict):
                raise ConfigError(f"configuration key {where!r} must be a section")
            out[key] = _deep_merge(base[key], value, where)
        else:
            out[key] = value
    return out


def _env_overrides(env) -> dict:
    tree: dict = {}
    for name, raw in env.items():
        if not name.startswith(ENV_PREFIX):
            continue
        parts = name[len(ENV_PREFIX) :].lower().split("__")
        try:
            value = yaml.safe_load(raw)
        except yaml.YAMLError:
            value = raw
        node = tree
        for part in parts[:-1]:
            node = node.setdefault(part, {})
        node[parts[-1]] = value
    return tree


def _build_params(cls, section: dict, where: str):
    try:
        return cls(**section)
    except TypeError as exc:
        raise ConfigError(f"bad {where} settings: {exc}") from exc
    except ValueError as exc:
        raise ConfigError(f"bad {where} settings: {exc}") from exc


def _build_descriptors(section: dict) -> dict[str, BackendDescriptor]:
    descriptors = {}
    for kind, settings in section.items():
        if not settings:
            continue
        try:
            descriptors[kind] = BackendDescriptor(kind=kind, **settings)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad backends.{kind} settings: {exc}") from exc
    return descriptors


def load_config(path=None, env=None, overrides: dict | None = None) -> Config:
    """Assemble the effective configuration.

    ``overrides`` is a nested dict from CLI flags and wins over everything;
    the YAML file at ``path`` and environment variables sit in between.
    """
    data = {k: (dict(v) if isinstance(v, dict) else v) for k, v in _DEFAULTS.items()}
    data["backends"] = {kind: {} for kind in KINDS}
    data["classify"] = dict(_DEFAULTS["classify"])

    if path is not None:
        try:
            text = open(path, "r", encoding="utf-8").read()
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from exc
        try:
            loaded = yaml.safe_load(text) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(f"config file {path} is not valid YAML: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigError(f"config file {path} must hold a mapping at top level")
        data = _deep_merge(data, loaded)

    data = _deep_merge(data, _env_overrides(os.environ if env is None else env))
    if overrides:
        data = _deep_merge(data, overrides)

    unknown = set(data["classify"]) - {"labels", "hypothesis_template", "summarize"}
    if unknown:
        raise ConfigError(f"unknown configuration key 'classify.{sorted(unknown)[0]}'")
    labels = data["classify"]["labels"]
    if isinstance(labels, str):
        labels = [part.strip() for part in labels.split(",") if part.strip()]
    try:
        labels = validate_labels(labels)
        template = validate_template(str(data["classify"]["hypothesis_template"]))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    return Config(
        detection=_build_params(DetectionParams, data["detection"], "detection"),
        clahe=_build_params(ClaheParams, data["clahe"], "clahe"),
        tiling=_build_params(TilingParams, data["tiling"], "tiling"),
        labels=labels,
        hypothesis_template=template,
        summarize=bool(data["classify"]["summarize"]),
        eval=_build_params(EvalConfig, data["eval"], "eval"),
        service=_build_params(ServiceConfig, data["service"], "service"),
        backend_descriptors=_build_descriptors(data["backends"]),
    )


def load_detection_params(path) -> dict:
    """Read a DetectionParams override file (YAML mapping)."""
    try:
        loaded = yaml.safe_load(open(path, "r", encoding="utf-8").read()) or {}
    except OSError as exc:
        raise ConfigError(f"cannot read detection params file {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"detection params file {path} is not valid YAML: {exc}") from exc
    if not isinstance(loaded, dict):
        raise ConfigError(f"detection params file {path} must hold a mapping")
    return loaded
