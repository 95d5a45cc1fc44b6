"""SFST tensor files and SFCB codebook files.

SFST layout (little-endian)::

    magic  "SFST"      4 bytes
    version u16        = 1
    dtype   u16        0 = float64 values, 1 = unsigned codes
    wbit    u16        only present when dtype == 1
    ndim    u16
    dims    ndim x u32
    payload            row-major; float64 (dtype 0) or u32 per code (dtype 1)

SFCB layout::

    magic "SFCB", wbit u16, then 2**wbit float64 values
"""
from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import FormatError
from .tensor import QuantCodebook

SFST_MAGIC = b"SFST"
SFCB_MAGIC = b"SFCB"
SFST_VERSION = 1
DTYPE_REAL = 0
DTYPE_CODE = 1


@dataclass(frozen=True, eq=False)
class Tensor:
    """An n-d array as stored in an SFST file.

    ``wbit`` is set only for code tensors.
    """

    values: np.ndarray
    wbit: int | None = None

    @property
    def is_codes(self) -> bool:
        return self.wbit is not None

    def __eq__(self, other):
        if not isinstance(other, Tensor):
            return NotImplemented
        return (
            self.wbit == other.wbit
            and self.values.shape == other.values.shape
            and np.array_equal(self.values, other.values)
        )


def save_tensor(tensor, wbit: int | None = None) -> bytes:
    """Serialize a :class:`Tensor` or an ndarray.

    Float arrays are stored as reals.  Integer arrays are stored as codes;
    ``wbit`` defaults to the smallest width that holds the largest code.
    """
    if isinstance(tensor, Tensor):
        values, wbit = tensor.values, tensor.wbit if wbit is None else wbit
        is_codes = tensor.is_codes
    else:
        values = np.asarray(tensor)
        is_codes = values.dtype.kind in "iub"
    if len(values.shape) > 0xFFFF or any(d > 0xFFFFFFFF for d in values.shape):
        raise FormatError("dims", "shape not representable")
    if is_codes:
        values = np.asarray(values)
        if values.size and values.min() < 0:
            raise FormatError("payload", "codes must be unsigned")
        if wbit is None:
            top = int(values.max()) if values.size else 0
            wbit = max(1, top.bit_length())
        if not 1 <= wbit <= 32:
            raise FormatError("wbit", f"must lie in [1, 32], got {wbit}")
        if values.size and int(values.max()) >= 1 << wbit:
            raise FormatError("payload", f"code exceeds wbit={wbit}")
        head = struct.pack("<4sHHHH", SFST_MAGIC, SFST_VERSION, DTYPE_CODE, wbit, values.ndim)
        payload = values.astype("<u4").tobytes()
    else:
        head = struct.pack("<4sHHH", SFST_MAGIC, SFST_VERSION, DTYPE_REAL, values.ndim)
        payload = np.asarray(values, dtype="<f8").tobytes()
    dims = struct.pack(f"<{values.ndim}I", *values.shape)
    return head + dims + payload


def load_tensor(data: bytes) -> Tensor:
    data = bytes(data)
    if len(data) < 10:
        raise FormatError("header", "file shorter than the fixed header")
    magic, version, dtype = struct.unpack_from("<4sHH", data, 0)
    if magic != SFST_MAGIC:
        raise FormatError("magic", f"expected {SFST_MAGIC!r}, got {magic!r}")
    if version != SFST_VERSION:
        raise FormatError("version", f"unsupported version {version}")
    offset = 8
    wbit = None
    if dtype == DTYPE_CODE:
        if len(data) < offset + 4:
            raise FormatError("header", "truncated before ndim")
        (wbit,) = struct.unpack_from("<H", data, offset)
        offset += 2
        if not 1 <= wbit <= 32:
            raise FormatError("wbit", f"must lie in [1, 32], got {wbit}")
    elif dtype != DTYPE_REAL:
        raise FormatError("dtype", f"unknown dtype {dtype}")
    (ndim,) = struct.unpack_from("<H", data, offset)
    offset += 2
    if len(data) < offset + 4 * ndim:
        raise FormatError("dims", "truncated dimension list")
    dims = struct.unpack_from(f"<{ndim}I", data, offset)
    offset += 4 * ndim
    itemsize = 8 if dtype == DTYPE_REAL else 4
    expected = math.prod(dims) * itemsize
    if len(data) - offset != expected:
        raise FormatError(
            "payload length", f"header implies {expected} bytes, found {len(data) - offset}"
        )
    if dtype == DTYPE_REAL:
        values = np.frombuffer(data, dtype="<f8", offset=offset).astype(np.float64)
    else:
        values = np.frombuffer(data, dtype="<u4", offset=offset).astype(np.uint32)
        if values.size and int(values.max()) >= 1 << wbit:
            raise FormatError("payload", f"code exceeds wbit={wbit}")
    return Tensor(values.reshape(dims), wbit)


def save_codebook(codebook: QuantCodebook) -> bytes:
    return struct.pack("<4sH", SFCB_MAGIC, codebook.wbit) + codebook.table.astype("<f8").tobytes()


def load_codebook(data: bytes) -> QuantCodebook:
    codebook, used = read_codebook(data, 0)
    if used != len(data):
        raise FormatError("payload length", f"{len(data) - used} trailing bytes after codebook")
    return codebook


def read_codebook(data: bytes, offset: int) -> tuple[QuantCodebook, int]:
    """Parse an SFCB section at ``offset``; returns it and the end offset."""
    if len(data) < offset + 6:
        raise FormatError("header", "codebook header truncated")
    magic, wbit = struct.unpack_from("<4sH", data, offset)
    if magic != SFCB_MAGIC:
        raise FormatError("magic", f"expected {SFCB_MAGIC!r}, got {magic!r}")
    if not 1 <= wbit <= 32:
        raise FormatError("wbit", f"must lie in [1, 32], got {wbit}")
    n = 1 << wbit
    end = offset + 6 + 8 * n
    if len(data) < end:
        raise FormatError("payload length", f"codebook needs {n} float64 entries")
    table = np.frombuffer(data, dtype="<f8", count=n, offset=offset + 6).astype(np.float64)
    if table[0] != 0.0:
        raise FormatError("table", "code 0 must map to 0.0")
    return QuantCodebook(wbit, table), end


def read_tensor_file(path) -> Tensor:
    return load_tensor(Path(path).read_bytes())


def write_tensor_file(path, tensor, wbit: int | None = None) -> None:
    Path(path).write_bytes(save_tensor(tensor, wbit))


def read_codebook_file(path) -> QuantCodebook:
    return load_codebook(Path(path).read_bytes())


def write_codebook_file(path, codebook: QuantCodebook) -> None:
    Path(path).write_bytes(save_codebook(codebook))
