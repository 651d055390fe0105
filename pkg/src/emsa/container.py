"""Binary tensor container.

Layout: magic ``EMT1``, u32 rank, rank u32 extents, then the row-major
float32 payload.  All integers and floats are little-endian.
"""

import struct

from pathlib import Path

import numpy as np

MAGIC = b"EMT1"
MAX_RANK = 8


class ContainerError(ValueError):
    """The file is not a well-formed tensor container."""


def save_tensor(path, arr) -> None:
    """Write ``arr`` (any real dtype, cast to float32) to ``path``."""
    arr = np.ascontiguousarray(np.asarray(arr, dtype="<f4"))
    if arr.ndim > MAX_RANK:
        raise ContainerError(f"rank {arr.ndim} exceeds the container limit {MAX_RANK}")
    header = MAGIC + struct.pack("<I", arr.ndim)
    header += struct.pack(f"<{arr.ndim}I", *arr.shape)
    Path(path).write_bytes(header + arr.tobytes())


def load_tensor(path) -> np.ndarray:
    """Read a float32 tensor written by :func:`save_tensor`."""
    raw = Path(path).read_bytes()
    if len(raw) < 8:
        raise ContainerError(f"{path}: truncated header")
    if raw[:4] != MAGIC:
        raise ContainerError(f"{path}: bad magic {raw[:4]!r}")
    (rank,) = struct.unpack_from("<I", raw, 4)
    if rank > MAX_RANK:
        raise ContainerError(f"{path}: implausible rank {rank}")
    if len(raw) < 8 + 4 * rank:
        raise ContainerError(f"{path}: truncated extent list")
    shape = struct.unpack_from(f"<{rank}I", raw, 8)
    count = int(np.prod(shape, dtype=np.int64)) if rank else 1
    payload = raw[8 + 4 * rank:]
    if len(payload) != 4 * count:
        raise ContainerError(
            f"{path}: payload holds {len(payload)} bytes, extents {shape} "
            f"require {4 * count}")
    return np.frombuffer(payload, dtype="<f4").reshape(shape).copy()
