"""Tensor batch file (TBF) reader and writer.

Layout, all little-endian::

    magic   4 bytes  b"CMIX"
    version u16      1
    kind    u8       0 images, 1 int labels, 2 soft labels, 3 provenance
    ndim    u8
    dims    ndim x u32
    payload row-major; float32 for kinds 0 and 2, uint32 for kinds 1 and 3
"""

from __future__ import annotations

import enum
import io
import os
import struct
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO

import numpy as np

from .errors import FormatError

MAGIC = b"CMIX"
VERSION = 1
_PREFIX = struct.Struct("<4sHBB")


class Kind(enum.IntEnum):
    IMAGES = 0
    LABELS = 1
    SOFT_LABELS = 2
    PROVENANCE = 3


NDIM = {Kind.IMAGES: 4, Kind.LABELS: 1, Kind.SOFT_LABELS: 2, Kind.PROVENANCE: 2}
DTYPE = {
    Kind.IMAGES: np.dtype("<f4"),
    Kind.LABELS: np.dtype("<u4"),
    Kind.SOFT_LABELS: np.dtype("<f4"),
    Kind.PROVENANCE: np.dtype("<u4"),
}


class BadMagicError(FormatError):
    pass


class VersionError(FormatError):
    pass


class TruncatedError(FormatError):
    pass


class KindError(FormatError):
    pass


@dataclass(frozen=True)
class TensorFile:
    kind: Kind
    data: np.ndarray

    @property
    def dims(self) -> tuple[int, ...]:
        return self.data.shape


def encode(kind: Kind, data) -> bytes:
    kind = Kind(kind)
    arr = np.asarray(data)
    if arr.ndim != NDIM[kind]:
        raise KindError(f"{kind.name.lower()} need ndim={NDIM[kind]}, got {arr.ndim}")
    dtype = DTYPE[kind]
    if dtype.kind == "u":
        if arr.size and (not np.issubdtype(arr.dtype, np.integer) or arr.min() < 0 or arr.max() > 0xFFFFFFFF):
            raise KindError(f"{kind.name.lower()} must be integers in the uint32 range")
    elif arr.dtype != np.float32:
        arr = arr.astype(np.float32)
    if any(d > 0xFFFFFFFF for d in arr.shape):
        raise KindError(f"dimension too large for u32: {arr.shape}")
    header = _PREFIX.pack(MAGIC, VERSION, int(kind), arr.ndim) + struct.pack(f"<{arr.ndim}I", *arr.shape)
    return header + np.ascontiguousarray(arr, dtype=dtype).tobytes()


@dataclass(frozen=True)
class Header:
    kind: Kind
    dims: tuple[int, ...]

    @property
    def dtype(self) -> np.dtype:
        return DTYPE[self.kind]

    @property
    def payload_bytes(self) -> int:
        return int(np.prod(self.dims, dtype=np.uint64)) * self.dtype.itemsize

    @property
    def header_bytes(self) -> int:
        return _PREFIX.size + 4 * len(self.dims)


def read_header(fh: BinaryIO) -> Header:
    """Parse and validate a header; leaves ``fh`` at the start of the payload."""
    prefix = fh.read(_PREFIX.size)
    head = prefix[:4]
    if head != MAGIC[: len(head)]:
        raise BadMagicError(f"bad magic {bytes(head)!r}, expected {MAGIC!r}")
    if len(prefix) < _PREFIX.size:
        raise TruncatedError(f"header needs {_PREFIX.size} bytes, file has {len(prefix)}")
    _, version, kind, ndim = _PREFIX.unpack(prefix)
    if version != VERSION:
        raise VersionError(f"unsupported TBF version {version}, expected {VERSION}")
    try:
        kind = Kind(kind)
    except ValueError:
        raise KindError(f"unknown kind code {kind}") from None
    if ndim != NDIM[kind]:
        raise KindError(f"kind {kind.name.lower()} requires ndim={NDIM[kind]}, header says {ndim}")
    raw = fh.read(4 * ndim)
    if len(raw) < 4 * ndim:
        raise TruncatedError(f"header declares {ndim} dims but only {len(raw) // 4} present")
    return Header(kind, struct.unpack(f"<{ndim}I", raw))


def _read(fh: BinaryIO) -> TensorFile:
    header = read_header(fh)
    expected = header.payload_bytes
    payload = fh.read(expected)
    if len(payload) < expected:
        raise TruncatedError(f"payload truncated: {len(payload)} bytes, dims {header.dims} need {expected}")
    extra = len(fh.read())
    if extra:
        raise FormatError(f"{extra} trailing bytes after payload of dims {header.dims}")
    data = np.frombuffer(payload, dtype=header.dtype).reshape(header.dims)
    return TensorFile(header.kind, data)


def decode(buf: bytes) -> TensorFile:
    return _read(io.BytesIO(buf))


def read_tbf(path) -> TensorFile:
    with open(path, "rb") as fh:
        return _read(fh)


def write_tbf(path, kind: Kind, data) -> None:
    """Write atomically: temp file in the target directory, then rename."""
    payload = encode(kind, data)
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent or ".")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.chmod(tmp, 0o644)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_kind(path, kind: Kind) -> np.ndarray:
    tf = read_tbf(path)
    if tf.kind != kind:
        raise KindError(f"{path}: expected {Kind(kind).name.lower()}, found {tf.kind.name.lower()}")
    return tf.data
