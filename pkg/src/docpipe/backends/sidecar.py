"""Stub-backed model runner speaking the framed stdio protocol.

Run as ``python -m docpipe.backends.sidecar``; answers ping immediately and
serves all five ops from the deterministic stubs. Doubles as the reference
implementation for sidecars hosting real models (see docs/protocol.md).
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from ..imaging import bicubic_upscale
from .protocol import Frame, read_frame, write_frame
from .stubs import StubDetector, StubNli, StubRecognizer, StubSummarizer


def _parse_rects(spec: str):
    rects = []
    for part in spec.split(";"):
        part = part.strip()
        if part:
            rects.append(tuple(int(v) for v in part.split(",")))
    return rects


def _parse_lexicon(spec: str):
    lexicon = {}
    for part in spec.split(","):
        part = part.strip()
        if part:
            keyword, _, label = part.partition("=")
            lexicon[keyword.strip()] = label.strip()
    return lexicon


def _parse_texts(spec: str):
    entries = []
    for part in spec.split(";"):
        part = part.strip()
        if part:
            rect, _, text = part.partition("=")
            entries.append((tuple(int(v) for v in rect.split(",")), text))
    return entries


class SidecarServer:
    def __init__(self, detector, recognizer, nli, summarizer):
        self.detector = detector
        self.recognizer = recognizer
        self.nli = nli
        self.summarizer = summarizer

    def handle(self, req: Frame) -> Frame:
        try:
            return self._dispatch(req)
        except Exception as exc:  # report per-request failures, keep serving
            return Frame(op=req.op, id=req.id, strings={"error": f"{type(exc).__name__}: {exc}"})

    def _dispatch(self, req: Frame) -> Frame:
        if req.op == "ping":
            return Frame(op="ping", id=req.id)
        if req.op == "detect":
            maps = self.detector.infer_maps(req.tensors["image"])
            tensors = {"prob": maps.prob.astype(np.float32)}
            if maps.thresh is not None:
                tensors["thresh"] = maps.thresh.astype(np.float32)
            return Frame(op=req.op, id=req.id, tensors=tensors)
        if req.op == "recognize":
            coords = req.tensors["coords"]
            counts = req.tensors["counts"]
            polygons = []
            offset = 0
            for n in counts:
                polygons.append(coords[offset : offset + int(n)])
                offset += int(n)
            texts = self.recognizer.recognize(req.tensors["image"], polygons)
            return Frame(op=req.op, id=req.id, strings={"texts": json.dumps(texts)})
        if req.op == "nli":
            logits = self.nli.score(req.strings["premise"], req.strings["hypothesis"])
            arr = np.array(
                [logits.entailment, logits.contradiction, logits.neutral], dtype=np.float32
            )
            return Frame(op=req.op, id=req.id, tensors={"logits": arr})
        if req.op == "summarize":
            return Frame(
                op=req.op,
                id=req.id,
                strings={"summary": self.summarizer.summarize(req.strings["text"])},
            )
        if req.op == "upscale":
            scale = int(req.strings.get("scale", "2"))
            out = bicubic_upscale(req.tensors["image"], scale)
            return Frame(op=req.op, id=req.id, tensors={"image": out})
        return Frame(op=req.op, id=req.id, strings={"error": f"unknown op {req.op!r}"})

    def serve(self, stdin, stdout):
        while True:
            req = read_frame(stdin)
            if req is None:
                return
            write_frame(stdout, self.handle(req))


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="docpipe stub model runner")
    parser.add_argument("--rects", default="", help="planted detector rects: x,y,w,h;...")
    parser.add_argument("--p-inside", type=float, default=0.9)
    parser.add_argument("--p-outside", type=float, default=0.05)
    parser.add_argument("--thresh", type=float, default=0.3)
    parser.add_argument("--lexicon", default="", help="NLI lexicon: keyword=Label,...")
    parser.add_argument("--texts", default="", help="recognizer table: x,y,w,h=text;...")
    parser.add_argument("--max-words", type=int, default=30)
    args = parser.parse_args(argv)

    server = SidecarServer(
        detector=StubDetector(
            rects=_parse_rects(args.rects),
            p_inside=args.p_inside,
            p_outside=args.p_outside,
            thresh_value=args.thresh,
        ),
        recognizer=StubRecognizer(entries=_parse_texts(args.texts)),
        nli=StubNli(lexicon=_parse_lexicon(args.lexicon) or None),
        summarizer=StubSummarizer(max_words=args.max_words),
    )
    server.serve(sys.stdin.buffer, sys.stdout.buffer)
    return 0


if __name__ == "__main__":
    sys.exit(main())
