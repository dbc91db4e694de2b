"""Backend contracts for the neural stages, stub implementations, and the
subprocess wire protocol.

Every neural forward pass (detector, recognizer, NLI scorer, summarizer,
upscaler) sits behind one of these objects; the engine itself never touches
model weights. ``build_backends`` assembles a bundle from descriptors.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..imaging import BicubicUpscaler
from .stubs import (
    DEFAULT_LEXICON,
    IdentityUpscaler,
    StubDetector,
    StubNli,
    StubRecognizer,
    StubSummarizer,
)
from .subproc import (
    RunnerPool,
    SubprocessDetector,
    SubprocessNli,
    SubprocessRecognizer,
    SubprocessRunner,
    SubprocessSummarizer,
    SubprocessUpscaler,
)
from .types import KINDS, BackendDescriptor, NliLogits

__all__ = [
    "BackendDescriptor",
    "Backends",
    "BicubicUpscaler",
    "DEFAULT_LEXICON",
    "IdentityUpscaler",
    "KINDS",
    "NliLogits",
    "RunnerPool",
    "StubDetector",
    "StubNli",
    "StubRecognizer",
    "StubSummarizer",
    "SubprocessRunner",
    "build_backend",
    "build_backends",
]


@dataclass
class Backends:
    """The five pipeline backends as one bundle."""

    detector: object
    recognizer: object
    nli: object
    summarizer: object
    upscaler: object

    def by_kind(self, kind: str):
        if kind not in KINDS:
            raise ValueError(f"unknown backend kind {kind!r}")
        return getattr(self, kind)

    def close(self):
        for kind in KINDS:
            backend = getattr(self, kind)
            close = getattr(backend, "close", None)
            if close is not None:
                close()


_STUB_FACTORIES = {
    "detector": lambda opts: StubDetector(
        rects=opts.get("rects", ()),
        p_inside=opts.get("p_inside", 0.9),
        p_outside=opts.get("p_outside", 0.05),
        thresh_value=opts.get("thresh_value", 0.3),
    ),
    "recognizer": lambda opts: StubRecognizer(entries=opts.get("entries", ())),
    "nli": lambda opts: StubNli(lexicon=opts.get("lexicon")),
    "summarizer": lambda opts: StubSummarizer(max_words=opts.get("max_words", 30)),
    "upscaler": lambda opts: BicubicUpscaler(scale=opts.get("scale", 2)),
}

_SUBPROCESS_WRAPPERS = {
    "detector": lambda pool, opts: SubprocessDetector(pool),
    "recognizer": lambda pool, opts: SubprocessRecognizer(pool),
    "nli": lambda pool, opts: SubprocessNli(pool),
    "summarizer": lambda pool, opts: SubprocessSummarizer(pool),
    "upscaler": lambda pool, opts: SubprocessUpscaler(pool, scale=opts.get("scale", 2)),
}


def build_backend(descriptor: BackendDescriptor):
    """Instantiate one backend from its descriptor."""
    if descriptor.impl == "stub":
        return _STUB_FACTORIES[descriptor.kind](descriptor.options)
    pool = RunnerPool(
        descriptor.launch,
        timeout=descriptor.timeout,
        kind=descriptor.kind,
        pool_size=descriptor.pool_size,
    )
    wrapper = _SUBPROCESS_WRAPPERS[descriptor.kind](pool, descriptor.options)
    return wrapper


def build_backends(descriptors: dict[str, BackendDescriptor] | None = None) -> Backends:
    """Assemble the full bundle; kinds without a descriptor get stubs."""
    descriptors = descriptors or {}
    built = {}
    for kind in KINDS:
        desc = descriptors.get(kind) or BackendDescriptor(kind=kind)
        built[kind] = build_backend(desc)
    return Backends(**built)
