"""Raw tensor and checkpoint file formats.

``.ten`` layout: u32 rank, u32 per-extent, then row-major little-endian
float64 payload. Checkpoints are a JSON header (dims, hashes, scalar fields,
tensor directory) followed by the named tensors as concatenated ``.ten``
blocks.
"""

from __future__ import annotations

import io
import json
import struct
from pathlib import Path

import numpy as np

_MAGIC = b"PFCK"


def tensor_bytes(arr: np.ndarray) -> bytes:
    arr = np.ascontiguousarray(arr, dtype=np.float64)
    header = struct.pack("<I", arr.ndim) + struct.pack(f"<{arr.ndim}I", *arr.shape)
    return header + arr.astype("<f8").tobytes()


def read_tensor_stream(fh) -> np.ndarray:
    (rank,) = struct.unpack("<I", fh.read(4))
    extents = struct.unpack(f"<{rank}I", fh.read(4 * rank))
    count = int(np.prod(extents)) if rank else 1
    data = np.frombuffer(fh.read(8 * count), dtype="<f8").astype(np.float64)
    return data.reshape(extents)


def write_tensor(path, arr: np.ndarray) -> None:
    Path(path).write_bytes(tensor_bytes(arr))


def read_tensor(path) -> np.ndarray:
    with open(path, "rb") as fh:
        return read_tensor_stream(fh)


def write_checkpoint(path, header: dict, tensors: dict) -> None:
    """Single-file checkpoint: JSON header plus named .ten blocks."""
    meta = dict(header)
    meta["tensors"] = list(tensors.keys())
    blob = json.dumps(meta, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        for name in meta["tensors"]:
            fh.write(tensor_bytes(tensors[name]))


def read_checkpoint(path) -> tuple[dict, dict]:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _MAGIC:
            raise ValueError(f"{path}: not a checkpoint file")
        (blob_len,) = struct.unpack("<I", fh.read(4))
        meta = json.loads(fh.read(blob_len).decode("utf-8"))
        tensors = {name: read_tensor_stream(fh) for name in meta["tensors"]}
    header = {k: v for k, v in meta.items() if k != "tensors"}
    return header, tensors


def tensors_digest(tensors: dict) -> str:
    """Stable content hash of a named tensor dict (frozen-weights checks)."""
    import hashlib

    h = hashlib.sha256()
    for name in sorted(tensors):
        h.update(name.encode("utf-8"))
        h.update(tensor_bytes(tensors[name]))
    return h.hexdigest()


def buffer_checkpoint(header: dict, tensors: dict) -> bytes:
    out = io.BytesIO()
    meta = dict(header)
    meta["tensors"] = list(tensors.keys())
    blob = json.dumps(meta, sort_keys=True).encode("utf-8")
    out.write(_MAGIC)
    out.write(struct.pack("<I", len(blob)))
    out.write(blob)
    for name in meta["tensors"]:
        out.write(tensor_bytes(tensors[name]))
    return out.getvalue()
