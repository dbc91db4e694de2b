"""Subprocess model-runner client: framed stdio, restart on crash, timeouts.

One request is in flight per child at a time; a pool of children provides
parallelism. A crashed child fails only the in-flight call: the next call
relaunches the child from scratch (nothing is replayed).
"""

from __future__ import annotations

import collections
import itertools
import json
import os
import select
import shlex
import struct
import subprocess
import threading
import time

import numpy as np

from ..detection import ScoreMaps
from ..errors import BackendError, BackendUnavailable, ProtocolError
from .protocol import Frame, _frame_from_parts, _parse_header, _payload_size, encode_frame
from .types import NliLogits

_STDERR_KEEP = 64  # lines of child stderr retained for error reports


class _Child:
    """One launched runner process plus its stderr drain thread."""

    def __init__(self, argv):
        self.proc = subprocess.Popen(
            argv,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            stderr=subprocess.PIPE,
        )
        self.stderr_tail = collections.deque(maxlen=_STDERR_KEEP)
        self._drain = threading.Thread(target=self._drain_stderr, daemon=True)
        self._drain.start()

    def _drain_stderr(self):
        for raw in self.proc.stderr:
            self.stderr_tail.append(raw.decode("utf-8", "replace").rstrip())

    def alive(self) -> bool:
        return self.proc.poll() is None

    def kill(self):
        if self.alive():
            self.proc.kill()
        try:
            self.proc.wait(timeout=5)
        except subprocess.TimeoutExpired:
            pass

    def stderr_text(self) -> str:
        return "\n".join(self.stderr_tail)


def _read_exact_timeout(fd: int, n: int, deadline: float) -> bytes:
    chunks = []
    remaining = n
    while remaining > 0:
        budget = deadline - time.monotonic()
        if budget <= 0:
            raise TimeoutError(f"timed out reading {remaining} of {n} bytes")
        ready, _, _ = select.select([fd], [], [], budget)
        if not ready:
            continue
        chunk = os.read(fd, remaining)
        if not chunk:
            raise EOFError("child closed its stdout")
        chunks.append(chunk)
        remaining -= len(chunk)
    return b"".join(chunks)


def _read_frame_timeout(fd: int, timeout: float) -> Frame:
    deadline = time.monotonic() + timeout
    (header_len,) = struct.unpack("<I", _read_exact_timeout(fd, 4, deadline))
    header = _parse_header(_read_exact_timeout(fd, header_len, deadline))
    payload = _read_exact_timeout(fd, _payload_size(header), deadline)
    return _frame_from_parts(header, payload)


class SubprocessRunner:
    """Client for one runner child; serializes calls with a lock."""

    def __init__(self, launch, timeout: float = 30.0, kind: str = "backend"):
        self.argv = shlex.split(launch) if isinstance(launch, str) else list(launch)
        self.timeout = float(timeout)
        self.kind = kind
        self._child: _Child | None = None
        self._lock = threading.Lock()
        self._ids = itertools.count(1)

    def _ensure_child(self) -> _Child:
        # a dead child is only discovered (and reported) by the failing call;
        # the call after that relaunches from scratch
        if self._child is None:
            self._child = _Child(self.argv)
        return self._child

    def _fail(self, message: str, exc=None):
        child = self._child
        stderr = child.stderr_text() if child else ""
        if child is not None:
            child.kill()
        self._child = None
        detail = f"{self.kind} backend: {message}"
        if stderr:
            detail += f"\n--- child stderr ---\n{stderr}"
        raise BackendUnavailable(detail, kind=self.kind) from exc

    def call(self, op: str, tensors=None, strings=None, timeout: float | None = None) -> Frame:
        """Send one request frame and return the matching response."""
        request = Frame(op=op, id=next(self._ids), tensors=dict(tensors or {}), strings=dict(strings or {}))
        timeout = self.timeout if timeout is None else timeout
        with self._lock:
            try:
                child = self._ensure_child()
            except OSError as exc:
                raise BackendUnavailable(
                    f"{self.kind} backend: cannot launch {self.argv!r}: {exc}", kind=self.kind
                ) from exc
            try:
                child.proc.stdin.write(encode_frame(request))
                child.proc.stdin.flush()
                response = _read_frame_timeout(child.proc.stdout.fileno(), timeout)
            except TimeoutError as exc:
                self._fail(f"no response to {op!r} within {timeout:g}s", exc)
            except (OSError, EOFError) as exc:
                self._fail(f"child died during {op!r} ({exc})", exc)
            except ProtocolError as exc:
                self._fail(f"framing error during {op!r}: {exc}", exc)
            if response.id != request.id:
                self._fail(f"response id {response.id} does not match request id {request.id}")
            if "error" in response.strings:
                raise BackendError(
                    f"{self.kind} backend rejected {op!r}: {response.strings['error']}",
                    kind=self.kind,
                )
            return response

    def ping(self, timeout: float = 10.0) -> bool:
        try:
            self.call("ping", timeout=timeout)
            return True
        except BackendError:
            return False

    def close(self):
        with self._lock:
            if self._child is not None:
                self._child.kill()
                self._child = None


class RunnerPool:
    """Round-robin pool of runners; each runner serializes its own calls."""

    def __init__(self, launch, timeout: float = 30.0, kind: str = "backend", pool_size: int = 1):
        self._runners = [SubprocessRunner(launch, timeout, kind) for _ in range(max(1, pool_size))]
        self._counter = itertools.count()

    def call(self, op, tensors=None, strings=None, timeout=None) -> Frame:
        runner = self._runners[next(self._counter) % len(self._runners)]
        return runner.call(op, tensors, strings, timeout)

    def ping(self, timeout: float = 10.0) -> bool:
        return self._runners[0].ping(timeout)

    def close(self):
        for runner in self._runners:
            runner.close()


def _as_u8_image(img) -> np.ndarray:
    arr = np.asarray(img)
    if arr.ndim != 2:
        raise ValueError("wire image must be 2D grayscale")
    return arr.astype(np.uint8, copy=False)


class SubprocessDetector:
    def __init__(self, pool: RunnerPool):
        self.pool = pool

    def infer_maps(self, img) -> ScoreMaps:
        img = _as_u8_image(img)
        resp = self.pool.call("detect", tensors={"image": img})
        prob = resp.tensors.get("prob")
        if prob is None or prob.shape != img.shape or prob.dtype != np.float32:
            raise ProtocolError(
                f"detector response malformed: prob {None if prob is None else (prob.shape, prob.dtype)}",
                kind="detector",
            )
        thresh = resp.tensors.get("thresh")
        if thresh is not None and (thresh.shape != img.shape or thresh.dtype != np.float32):
            raise ProtocolError("detector response malformed: bad threshold map", kind="detector")
        return ScoreMaps(prob=prob, thresh=thresh)

    def ping(self) -> bool:
        return self.pool.ping()

    def close(self):
        self.pool.close()


class SubprocessRecognizer:
    def __init__(self, pool: RunnerPool):
        self.pool = pool

    def recognize(self, img, polygons) -> list[str]:
        polys = [np.asarray(p, dtype=np.float32) for p in polygons]
        coords = (
            np.concatenate(polys, axis=0) if polys else np.zeros((0, 2), dtype=np.float32)
        )
        counts = np.array([len(p) for p in polys], dtype=np.int32)
        resp = self.pool.call(
            "recognize",
            tensors={"image": _as_u8_image(img), "coords": coords, "counts": counts},
        )
        try:
            texts = json.loads(resp.strings["texts"])
        except (KeyError, json.JSONDecodeError) as exc:
            raise ProtocolError(f"recognizer response malformed: {exc}", kind="recognizer") from exc
        if not isinstance(texts, list) or len(texts) != len(polys):
            raise BackendError(
                f"recognizer returned {len(texts)} texts for {len(polys)} regions",
                kind="recognizer",
            )
        return [str(t) for t in texts]

    def ping(self) -> bool:
        return self.pool.ping()

    def close(self):
        self.pool.close()


class SubprocessNli:
    def __init__(self, pool: RunnerPool):
        self.pool = pool

    def score(self, premise: str, hypothesis: str) -> NliLogits:
        resp = self.pool.call("nli", strings={"premise": premise, "hypothesis": hypothesis})
        logits = resp.tensors.get("logits")
        if logits is None or logits.shape != (3,):
            raise ProtocolError("nli response malformed: need a (3,) logits tensor", kind="nli")
        return NliLogits(
            entailment=float(logits[0]), contradiction=float(logits[1]), neutral=float(logits[2])
        )

    def ping(self) -> bool:
        return self.pool.ping()

    def close(self):
        self.pool.close()


class SubprocessSummarizer:
    def __init__(self, pool: RunnerPool):
        self.pool = pool

    def summarize(self, text: str) -> str:
        resp = self.pool.call("summarize", strings={"text": text})
        if "summary" not in resp.strings:
            raise ProtocolError("summarizer response malformed: missing summary", kind="summarizer")
        return resp.strings["summary"]

    def ping(self) -> bool:
        return self.pool.ping()

    def close(self):
        self.pool.close()


class SubprocessUpscaler:
    def __init__(self, pool: RunnerPool, scale: int = 2):
        self.pool = pool
        self.scale = int(scale)

    def upscale(self, img) -> np.ndarray:
        img = _as_u8_image(img)
        resp = self.pool.call("upscale", tensors={"image": img}, strings={"scale": str(self.scale)})
        out = resp.tensors.get("image")
        expected = (img.shape[0] * self.scale, img.shape[1] * self.scale)
        if out is None or out.shape != expected or out.dtype != np.uint8:
            raise ProtocolError(
                f"upscaler response malformed: expected u8 tensor of shape {expected}",
                kind="upscaler",
            )
        return out

    def ping(self) -> bool:
        return self.pool.ping()

    def close(self):
        self.pool.close()
