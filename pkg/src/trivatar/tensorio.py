"""Binary tensor container: magic "TRIT", u32 rank, u32 dims, f32 payload.

All integers are little-endian; the payload is row-major float32.  Writes
are atomic (temp file + rename) so concurrent readers never observe a
truncated tensor.
"""

from __future__ import annotations

import os
import struct
import tempfile

import numpy as np

MAGIC = b"TRIT"


class TensorFormatError(ValueError):
    """Malformed tensor container."""


def read_tensor(path) -> np.ndarray:
    with open(path, "rb") as fh:
        header = fh.read(8)
        if len(header) < 8 or header[:4] != MAGIC:
            raise TensorFormatError(f"{path}: bad magic (expected {MAGIC!r})")
        (rank,) = struct.unpack("<I", header[4:8])
        if rank > 32:
            raise TensorFormatError(f"{path}: implausible rank {rank}")
        dims_raw = fh.read(4 * rank)
        if len(dims_raw) < 4 * rank:
            raise TensorFormatError(f"{path}: truncated dims")
        dims = struct.unpack(f"<{rank}I", dims_raw) if rank else ()
        count = int(np.prod(dims, dtype=np.int64)) if rank else 1
        payload = fh.read(4 * count)
        if len(payload) != 4 * count:
            raise TensorFormatError(
                f"{path}: payload holds {len(payload) // 4} floats, dims require {count}"
            )
        if fh.read(1):
            raise TensorFormatError(f"{path}: trailing bytes after payload")
    data = np.frombuffer(payload, dtype="<f4").astype(np.float64)
    return data.reshape(dims)


def write_tensor(path, array: np.ndarray) -> None:
    array = np.asarray(array, dtype=np.float64)
    dims = array.shape
    blob = bytearray()
    blob += MAGIC
    blob += struct.pack("<I", len(dims))
    for d in dims:
        blob += struct.pack("<I", d)
    blob += np.ascontiguousarray(array, dtype="<f4").tobytes()
    atomic_write_bytes(path, bytes(blob))


def tensor_bytes(array: np.ndarray) -> bytes:
    """Serialize to the container layout without touching the filesystem."""
    array = np.asarray(array, dtype=np.float64)
    parts = [MAGIC, struct.pack("<I", array.ndim)]
    parts += [struct.pack("<I", d) for d in array.shape]
    parts.append(np.ascontiguousarray(array, dtype="<f4").tobytes())
    return b"".join(parts)


def tensor_from_bytes(blob: bytes) -> np.ndarray:
    if blob[:4] != MAGIC:
        raise TensorFormatError("bad magic in tensor frame")
    (rank,) = struct.unpack("<I", blob[4:8])
    dims = struct.unpack(f"<{rank}I", blob[8 : 8 + 4 * rank]) if rank else ()
    count = int(np.prod(dims, dtype=np.int64)) if rank else 1
    payload = blob[8 + 4 * rank :]
    if len(payload) != 4 * count:
        raise TensorFormatError("tensor frame payload size mismatch")
    return np.frombuffer(payload, dtype="<f4").astype(np.float64).reshape(dims)


def atomic_write_bytes(path, blob: bytes) -> None:
    """Write-temp-then-rename so partial writes are never visible."""
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-trit-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(blob)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))
