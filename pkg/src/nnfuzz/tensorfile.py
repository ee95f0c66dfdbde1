"""Raw tensor file IO.

A tensor file holds one float32 array: a little-endian uint32 rank, then one
little-endian uint32 per dimension, then the element data as little-endian
float32 in row-major order.  The same encoding backs corpus entries, dataset
images, and candidate dumps.
"""

from __future__ import annotations

import numpy as np

from .errors import CorruptCorpus, IoError

_MAX_RANK = 8


def write_tensor(path, array: np.ndarray) -> None:
    """Write ``array`` to ``path`` in the raw tensor encoding.

    The array is converted to little-endian float32 if it is not already.
    """
    arr = np.ascontiguousarray(array, dtype="<f4")
    header = np.array([arr.ndim, *arr.shape], dtype="<u4")
    try:
        with open(path, "wb") as fh:
            fh.write(header.tobytes())
            fh.write(arr.tobytes())
    except OSError as exc:
        raise IoError(f"cannot write tensor file {path}: {exc}") from exc


def read_tensor(path) -> np.ndarray:
    """Read a tensor file written by :func:`write_tensor`.

    Raises CorruptCorpus if the file is truncated or its header is
    inconsistent, IoError if it cannot be opened at all.
    """
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise IoError(f"cannot read tensor file {path}: {exc}") from exc

    if len(raw) < 4:
        raise CorruptCorpus(f"tensor file {path} is truncated (no rank field)")
    rank = int(np.frombuffer(raw, dtype="<u4", count=1)[0])
    if rank > _MAX_RANK:
        raise CorruptCorpus(f"tensor file {path} declares implausible rank {rank}")
    if len(raw) < 4 + 4 * rank:
        raise CorruptCorpus(f"tensor file {path} is truncated (incomplete shape)")
    shape = tuple(
        int(d) for d in np.frombuffer(raw, dtype="<u4", count=rank, offset=4)
    )
    count = 1
    for d in shape:
        count *= d
    expected = 4 + 4 * rank + 4 * count
    if len(raw) != expected:
        raise CorruptCorpus(
            f"tensor file {path} has {len(raw)} bytes, expected {expected} "
            f"for shape {shape}"
        )
    data = np.frombuffer(raw, dtype="<f4", count=count, offset=4 + 4 * rank)
    return data.reshape(shape).copy()
