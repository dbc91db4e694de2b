"""Framed stdio wire protocol for out-of-process model runners.

A frame is: 4-byte little-endian unsigned header length, a JSON header
``{"op", "id", "tensors": [{"name", "dtype", "shape"}, ...], "strings": {...}}``,
then the raw little-endian tensor bytes concatenated in header order.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from ..errors import ProtocolError

OPS = ("detect", "recognize", "nli", "summarize", "upscale", "ping")

_WIRE_DTYPES = {
    "u8": np.dtype("<u1"),
    "f32": np.dtype("<f4"),
    "i32": np.dtype("<i4"),
    "f64": np.dtype("<f8"),
}
_NAME_OF_DTYPE = {v: k for k, v in _WIRE_DTYPES.items()}


def _wire_name(dtype: np.dtype) -> str:
    name = _NAME_OF_DTYPE.get(np.dtype(dtype).newbyteorder("<"))
    if name is None:
        raise ProtocolError(f"dtype {dtype} is not transportable; use one of {sorted(_WIRE_DTYPES)}")
    return name


@dataclass
class Frame:
    """One request or response message."""

    op: str
    id: int
    tensors: dict[str, np.ndarray] = field(default_factory=dict)
    strings: dict[str, str] = field(default_factory=dict)


def encode_frame(frame: Frame) -> bytes:
    header = {
        "op": frame.op,
        "id": int(frame.id),
        "tensors": [
            {"name": name, "dtype": _wire_name(t.dtype), "shape": list(t.shape)}
            for name, t in frame.tensors.items()
        ],
        "strings": dict(frame.strings),
    }
    payload = b"".join(
        np.ascontiguousarray(t, dtype=_WIRE_DTYPES[_wire_name(t.dtype)]).tobytes()
        for t in frame.tensors.values()
    )
    header_bytes = json.dumps(header, separators=(",", ":")).encode("utf-8")
    return struct.pack("<I", len(header_bytes)) + header_bytes + payload


def _parse_header(header_bytes: bytes) -> dict:
    try:
        header = json.loads(header_bytes.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ProtocolError(f"unreadable frame header: {exc}") from exc
    if not isinstance(header, dict) or "op" not in header or "id" not in header:
        raise ProtocolError("frame header missing op/id")
    return header


def _payload_size(header: dict) -> int:
    size = 0
    for spec in header.get("tensors", []):
        if spec.get("dtype") not in _WIRE_DTYPES:
            raise ProtocolError(f"unknown wire dtype {spec.get('dtype')!r}")
        size += int(np.prod(spec["shape"], dtype=np.int64)) * _WIRE_DTYPES[spec["dtype"]].itemsize
    return size


def _frame_from_parts(header: dict, payload: bytes) -> Frame:
    tensors: dict[str, np.ndarray] = {}
    offset = 0
    for spec in header.get("tensors", []):
        dtype = _WIRE_DTYPES[spec["dtype"]]
        shape = tuple(int(v) for v in spec["shape"])
        nbytes = int(np.prod(shape, dtype=np.int64)) * dtype.itemsize
        chunk = payload[offset : offset + nbytes]
        if len(chunk) != nbytes:
            raise ProtocolError("payload shorter than tensor table declares")
        tensors[spec["name"]] = np.frombuffer(chunk, dtype=dtype).reshape(shape).copy()
        offset += nbytes
    if offset != len(payload):
        raise ProtocolError("payload longer than tensor table declares")
    return Frame(
        op=str(header["op"]),
        id=int(header["id"]),
        tensors=tensors,
        strings={str(k): str(v) for k, v in header.get("strings", {}).items()},
    )


def decode_frame(buf: bytes) -> Frame:
    """Decode one complete frame from a byte string."""
    if len(buf) < 4:
        raise ProtocolError("frame shorter than the length prefix")
    (header_len,) = struct.unpack("<I", buf[:4])
    if len(buf) < 4 + header_len:
        raise ProtocolError("truncated frame header")
    header = _parse_header(buf[4 : 4 + header_len])
    payload = buf[4 + header_len :]
    if len(payload) != _payload_size(header):
        raise ProtocolError("truncated or oversized payload")
    return _frame_from_parts(header, payload)


def write_frame(stream, frame: Frame) -> None:
    stream.write(encode_frame(frame))
    stream.flush()


def _read_exact(stream, n: int) -> bytes:
    chunks = []
    remaining = n
    while remaining > 0:
        chunk = stream.read(remaining)
        if not chunk:
            break
        chunks.append(chunk)
        remaining -= len(chunk)
    return b"".join(chunks)


def read_frame(stream) -> Frame | None:
    """Read one frame from a blocking byte stream.

    Returns None on a clean EOF at a frame boundary; raises ProtocolError on
    a truncated frame.
    """
    prefix = _read_exact(stream, 4)
    if len(prefix) == 0:
        return None
    if len(prefix) < 4:
        raise ProtocolError("truncated length prefix")
    (header_len,) = struct.unpack("<I", prefix)
    header_bytes = _read_exact(stream, header_len)
    if len(header_bytes) < header_len:
        raise ProtocolError("truncated frame header")
    header = _parse_header(header_bytes)
    size = _payload_size(header)
    payload = _read_exact(stream, size)
    if len(payload) < size:
        raise ProtocolError("truncated payload")
    return _frame_from_parts(header, payload)
