"""Shared backend value types and descriptors."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

KINDS = ("detector", "recognizer", "nli", "summarizer", "upscaler")
IMPLS = ("stub", "subprocess")


@dataclass(frozen=True)
class NliLogits:
    """Raw three-way inference scores for one premise/hypothesis pair."""

    entailment: float
    contradiction: float
    neutral: float

    def __post_init__(self):
        for v in (self.entailment, self.contradiction, self.neutral):
            if not math.isfinite(v):
                raise ValueError("NLI logits must be finite")


@dataclass
class BackendDescriptor:
    """How one backend kind is provided: in-process stub or subprocess runner."""

    kind: str
    impl: str = "stub"
    model_id: str = ""
    launch: str = ""
    pool_size: int = 1
    timeout: float = 30.0
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown backend kind {self.kind!r}")
        if self.impl not in IMPLS:
            raise ValueError(f"unknown backend impl {self.impl!r}")
        if self.impl == "subprocess" and not self.launch:
            raise ValueError(f"subprocess backend {self.kind!r} needs a launch command")
        if self.pool_size < 1:
            raise ValueError("pool_size must be >= 1")
