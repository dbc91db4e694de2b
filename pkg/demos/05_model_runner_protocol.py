"""
Model-runner wire protocol walkthrough
======================================

The engine talks to out-of-process model runners over framed stdio: a
4-byte little-endian header length, a JSON header describing op, request
id, tensor table, and named strings, then raw tensor bytes. This demo
encodes frames by hand, then launches the stub sidecar as a real child
process and round-trips detect and nli calls through it.
"""

import sys

import numpy as np

from docpipe.backends.protocol import Frame, decode_frame, encode_frame
from docpipe.backends.subproc import RunnerPool, SubprocessDetector

# a frame is header + packed tensors; encode/decode are exact inverses
image = np.arange(12, dtype=np.uint8).reshape(3, 4)
frame = Frame(op="detect", id=1, tensors={"image": image}, strings={"note": "demo"})
wire = encode_frame(frame)
print(f"encoded frame: {len(wire)} bytes (header length prefix: {wire[:4].hex()})")
back = decode_frame(wire)
print(f"decoded op={back.op!r} id={back.id} tensors={list(back.tensors)} strings={back.strings}")
assert np.array_equal(back.tensors["image"], image)

# launch the stub sidecar: any executable speaking this protocol can host
# real weights; this one serves the deterministic stubs
launch = [sys.executable, "-m", "docpipe.backends.sidecar", "--rects", "8,8,32,12"]
pool = RunnerPool(launch, timeout=30.0, kind="detector")
print(f"\nsidecar ping: {pool.ping()}")

detector = SubprocessDetector(pool)
maps = detector.infer_maps(np.zeros((48, 64), np.uint8))
print(f"detect over the wire: prob {maps.prob.shape}, planted max {maps.prob.max():.2f}")

# raw call interface: op + tensors + strings in, one response frame out
resp = pool.call("nli", strings={"premise": "invoice 42", "hypothesis": "This text is about Invoice"})
print(f"nli over the wire: logits {resp.tensors['logits'].tolist()}")

resp = pool.call("summarize", strings={"text": " ".join(f"w{i}" for i in range(50))})
print(f"summarize over the wire: {resp.strings['summary'][:40]!r}...")
pool.close()
print("\nsidecar closed; see docs/protocol.md for the full contract")
