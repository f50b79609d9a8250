"""PLE1: a little-endian binary container for one embedding dataset.

Layout, in order, everything little-endian:

    magic            4 bytes, b"PLE1"
    version          u16 (currently 1)
    d, n, C          u32 each
    features         n * d float32, row-major
    labels           n int32, -1 = unlabeled
    ids              n uint64
    class names      C strings, each u16 byte length + UTF-8 bytes
    base_prototypes  C * d float32, row-major

Values are float64 in memory and float32 on disk. On read, row norms are
checked: drift up to 1e-5 is kept as stored (so write -> read -> write is
byte-identical), drift in (1e-5, 1e-3] is re-normalized, anything worse is an
error.
"""

from __future__ import annotations

import struct
from typing import Tuple

import numpy as np

from .core import ClassSpace, EmbeddingSet, unit_normalize

MAGIC = b"PLE1"
VERSION = 1

KEEP_DRIFT = 1e-5
MAX_DRIFT = 1e-3


def write_ple(path: str, data: EmbeddingSet, space: ClassSpace) -> None:
    """Serialize one embedding set plus its class space."""
    if data.d != space.d:
        raise ValueError("embedding and prototype dimensions differ")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<H", VERSION))
        fh.write(struct.pack("<III", data.d, data.n, space.C))
        fh.write(np.ascontiguousarray(data.features, dtype="<f4").tobytes())
        fh.write(np.ascontiguousarray(data.labels, dtype="<i4").tobytes())
        fh.write(np.ascontiguousarray(data.ids, dtype="<u8").tobytes())
        for name in space.class_names:
            raw = name.encode("utf-8")
            if len(raw) > 0xFFFF:
                raise ValueError(f"class name too long to serialize: {name[:32]}...")
            fh.write(struct.pack("<H", len(raw)))
            fh.write(raw)
        fh.write(np.ascontiguousarray(space.base_prototypes, dtype="<f4").tobytes())


def _take(buf: bytes, offset: int, count: int) -> Tuple[bytes, int]:
    if offset + count > len(buf):
        raise ValueError("not a PLE1 file: truncated payload")
    return buf[offset : offset + count], offset + count


def _check_norms(mat: np.ndarray, what: str) -> np.ndarray:
    norms = np.linalg.norm(mat, axis=1)
    drift = float(np.max(np.abs(norms - 1.0))) if norms.size else 0.0
    if drift > MAX_DRIFT:
        raise ValueError(f"{what} norm drift {drift:.3g} exceeds {MAX_DRIFT}")
    if drift > KEEP_DRIFT:
        return unit_normalize(mat)
    return mat


def read_ple(path: str) -> Tuple[EmbeddingSet, ClassSpace]:
    """Load a PLE1 file back into (EmbeddingSet, ClassSpace)."""
    with open(path, "rb") as fh:
        buf = fh.read()
    if len(buf) < 6 or buf[:4] != MAGIC:
        raise ValueError("not a PLE1 file: bad magic")
    (version,) = struct.unpack_from("<H", buf, 4)
    if version != VERSION:
        raise ValueError(f"not a PLE1 file: unsupported version {version}")
    offset = 6
    header, offset = _take(buf, offset, 12)
    d, n, C = struct.unpack("<III", header)
    if d < 1 or n < 1 or C < 1:
        raise ValueError("not a PLE1 file: empty dimensions")

    raw, offset = _take(buf, offset, 4 * n * d)
    features = np.frombuffer(raw, dtype="<f4").astype(np.float64).reshape(n, d)
    raw, offset = _take(buf, offset, 4 * n)
    labels = np.frombuffer(raw, dtype="<i4").astype(np.int64)
    raw, offset = _take(buf, offset, 8 * n)
    ids = np.frombuffer(raw, dtype="<u8").copy()

    names = []
    for _ in range(C):
        raw, offset = _take(buf, offset, 2)
        (ln,) = struct.unpack("<H", raw)
        raw, offset = _take(buf, offset, ln)
        names.append(raw.decode("utf-8"))
    raw, offset = _take(buf, offset, 4 * C * d)
    prototypes = np.frombuffer(raw, dtype="<f4").astype(np.float64).reshape(C, d)
    if offset != len(buf):
        raise ValueError("not a PLE1 file: trailing bytes after payload")

    features = _check_norms(features, "feature")
    prototypes = _check_norms(prototypes, "prototype")
    data = EmbeddingSet(features, labels, ids)
    space = ClassSpace(tuple(names), prototypes)
    return data, space


def inspect_ple(path: str) -> dict:
    """Human-oriented summary of a PLE1 file."""
    data, space = read_ple(path)
    norms = np.linalg.norm(data.features, axis=1)
    return {
        "path": path,
        "n": data.n,
        "d": data.d,
        "C": space.C,
        "labeled_rows": int(np.sum(data.labels >= 0)),
        "unlabeled_rows": int(np.sum(data.labels < 0)),
        "class_names": list(space.class_names),
        "max_norm_drift": float(np.max(np.abs(norms - 1.0))),
    }
