"""Relative-indexed compressed sparse filter (CSF) encoding.

A reshaped filter group (C x K x K x m) is read column by column: a column
is the ``m`` weights at one kernel position ``(chi, r, c)``.  Nonzero codes
are stored as ``(rel, code)`` entries where ``rel`` counts zero positions
skipped since the previous entry, so every entry advances the absolute
position by ``rel + 1``.  A zero run that does not fit in ``bit`` bits is
broken with padding entries ``(2**bit - 1, 0)``, each consuming ``2**bit``
positions.  Relative indexing runs straight through column boundaries and
zeros after the last entry are implied by the block length.

CSF1 file layout (little-endian)::

    magic "CSF1", version u16 = 1, m u32, num_columns u32, bit u8, wbit u8,
    entry_count u64, packed entries (bit + wbit bits each, LSB first, rel
    before code), zero bits up to the next byte, optional SFCB codebook.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import CorruptStream, EncodingError, FormatError, RangeError, ShapeError
from .flow import FilterGroup, ReshapedGroup, group_filters, reshape_group, unreshape_group
from .tensor import QuantCodebook, _readonly
from .tensorio import read_codebook, save_codebook

CSF_MAGIC = b"CSF1"
CSF_VERSION = 1
_HEADER = struct.Struct("<4sHIIBBQ")

MAX_BIT = 16
MAX_WBIT = 32


class CsfEntry(NamedTuple):
    rel: int
    code: int

    @property
    def is_padding(self) -> bool:
        return self.code == 0


@dataclass(frozen=True, eq=False)
class ColumnSequence:
    """Flat column-major weights of one group: column i holds positions [i*m, (i+1)*m)."""

    m: int
    num_columns: int
    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values).ravel()
        if self.m < 1 or self.num_columns < 0 or arr.size != self.m * self.num_columns:
            raise ShapeError(
                f"sequence of {arr.size} values is not {self.num_columns} columns of {self.m}"
            )
        object.__setattr__(self, "values", _readonly(arr))

    def __len__(self):
        return self.values.size

    def __eq__(self, other):
        if not isinstance(other, ColumnSequence):
            return NotImplemented
        return (
            self.m == other.m
            and self.num_columns == other.num_columns
            and np.array_equal(self.values, other.values)
        )

    def column(self, i: int) -> np.ndarray:
        return self.values[i * self.m : (i + 1) * self.m]


def entry_positions(rel) -> np.ndarray:
    """Absolute position of each entry in a stream of relative indices."""
    rel = np.asarray(rel, dtype=np.int64)
    return np.cumsum(rel + 1) - 1


def build_column_counts(entries, m: int, num_columns: int) -> np.ndarray:
    """Number of stored entries (padding included) falling in each column.

    ``entries`` may be a :class:`CsfBlock`, a sequence of :class:`CsfEntry`
    or an array of relative indices.
    """
    if isinstance(entries, CsfBlock):
        rel = entries.rel
    else:
        rel = np.asarray([e[0] if isinstance(e, tuple) else e for e in entries], dtype=np.int64)
    pos = entry_positions(rel)
    if pos.size and pos[-1] >= m * num_columns:
        raise CorruptStream(
            f"entry stream reaches position {int(pos[-1])} in a block of {m * num_columns}"
        )
    return np.bincount(pos // m, minlength=num_columns).astype(np.int64)


@dataclass(frozen=True, eq=False)
class CsfBlock:
    """One encoded filter group.

    ``rel`` and ``code`` hold the entry stream; ``column_counts`` is derived
    from it on construction and never stored in files.
    """

    m: int
    num_columns: int
    bit: int
    wbit: int
    rel: np.ndarray
    code: np.ndarray
    codebook: QuantCodebook | None = None

    def __post_init__(self):
        _check_widths(self.bit, self.wbit)
        rel = np.asarray(self.rel, dtype=np.uint32).ravel()
        code = np.asarray(self.code, dtype=np.uint32).ravel()
        if rel.size != code.size:
            raise CorruptStream(f"{rel.size} relative indices but {code.size} codes")
        if rel.size and int(rel.max()) >= 1 << self.bit:
            raise CorruptStream(f"relative index exceeds {self.bit} bits")
        if code.size and int(code.max()) >= 1 << self.wbit:
            raise CorruptStream(f"code exceeds {self.wbit} bits")
        if self.codebook is not None and self.codebook.wbit != self.wbit:
            raise RangeError(f"codebook wbit {self.codebook.wbit} != block wbit {self.wbit}")
        object.__setattr__(self, "rel", _readonly(rel))
        object.__setattr__(self, "code", _readonly(code))
        counts = build_column_counts(rel, self.m, self.num_columns)
        counts.setflags(write=False)
        object.__setattr__(self, "column_counts", counts)

    def __eq__(self, other):
        if not isinstance(other, CsfBlock):
            return NotImplemented
        return (
            (self.m, self.num_columns, self.bit, self.wbit)
            == (other.m, other.num_columns, other.bit, other.wbit)
            and np.array_equal(self.rel, other.rel)
            and np.array_equal(self.code, other.code)
            and self.codebook == other.codebook
        )

    def __len__(self):
        return self.rel.size

    @property
    def entries(self) -> list[CsfEntry]:
        return [CsfEntry(int(r), int(c)) for r, c in zip(self.rel, self.code)]

    @property
    def positions(self) -> np.ndarray:
        return entry_positions(self.rel)

    @property
    def total_len(self) -> int:
        return self.m * self.num_columns

    @property
    def nonzero_count(self) -> int:
        return int(np.count_nonzero(self.code))

    @property
    def padding_count(self) -> int:
        return len(self) - self.nonzero_count

    def column_offsets(self) -> np.ndarray:
        """Index of the first entry of each column, plus the total at the end."""
        return np.concatenate([[0], np.cumsum(self.column_counts)])

    def column_entries(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        """Filter index ``j`` and code of every stored entry of column ``i``."""
        offsets = self.column_offsets()
        lo, hi = offsets[i], offsets[i + 1]
        return self.positions[lo:hi] % self.m, self.code[lo:hi]


def _check_widths(bit: int, wbit: int) -> None:
    if not 1 <= bit <= MAX_BIT:
        raise RangeError(f"bit must lie in [1, {MAX_BIT}], got {bit}")
    if not 1 <= wbit <= MAX_WBIT:
        raise RangeError(f"wbit must lie in [1, {MAX_WBIT}], got {wbit}")


def flatten_columns(group: ReshapedGroup) -> ColumnSequence:
    values = np.asarray(group.values)
    return ColumnSequence(group.m, group.C * group.K * group.K, values.reshape(-1))


def unflatten_columns(seq: ColumnSequence, C: int, K: int, index: int = 0) -> ReshapedGroup:
    if seq.num_columns != C * K * K:
        raise ShapeError(f"{seq.num_columns} columns cannot form C={C}, K={K}")
    return ReshapedGroup(index, seq.values.reshape(C, K, K, seq.m))


def encode(seq: ColumnSequence, bit: int, wbit: int, codebook: QuantCodebook | None = None) -> CsfBlock:
    """Encode a column sequence of codes into a :class:`CsfBlock`.

    When a ``codebook`` is given it is attached to the block and checked:
    a nonzero code must never decode to a zero weight.
    """
    _check_widths(bit, wbit)
    values = np.asarray(seq.values)
    if values.dtype.kind == "f":
        if np.any(values != np.round(values)):
            raise RangeError("codes must be integers")
        values = values.astype(np.int64)
    if values.size and values.min() < 0:
        raise RangeError("codes must be unsigned")
    if values.size and int(values.max()) >= 1 << wbit:
        raise RangeError(f"code {int(values.max())} does not fit in wbit={wbit}")
    if codebook is not None:
        if codebook.wbit != wbit:
            raise RangeError(f"codebook wbit {codebook.wbit} != {wbit}")
        used = np.unique(values[values != 0])
        if used.size and np.any(codebook.table[used.astype(np.intp)] == 0.0):
            raise EncodingError("a zero weight carries a nonzero code")

    span = 1 << bit
    nz = np.flatnonzero(values)
    gaps = np.diff(nz, prepend=-1) - 1
    trailing = values.size - 1 - nz[-1] if nz.size else values.size
    pads = gaps // span
    # each nonzero is preceded by its padding entries
    n_entries = int(pads.sum()) + nz.size + trailing // span
    rel = np.full(n_entries, span - 1, dtype=np.uint32)
    code = np.zeros(n_entries, dtype=np.uint32)
    slots = np.cumsum(pads + 1) - 1
    rel[slots] = gaps % span
    code[slots] = values[nz]
    return CsfBlock(seq.m, seq.num_columns, bit, wbit, rel, code, codebook)


def decode(block: CsfBlock, total_len: int | None = None) -> ColumnSequence:
    """Inverse of :func:`encode`; positions without an entry are zero."""
    if total_len is None:
        total_len = block.total_len
    if total_len != block.total_len:
        raise ShapeError(f"total_len {total_len} != m*num_columns = {block.total_len}")
    pos = block.positions
    if pos.size and pos[-1] >= total_len:
        raise CorruptStream(f"entry stream overruns block of {total_len} positions")
    out = np.zeros(total_len, dtype=np.uint32)
    out[pos] = block.code
    return ColumnSequence(block.m, block.num_columns, out)


def encode_layer(codes, m: int, bit: int, wbit: int, codebook: QuantCodebook | None = None) -> list[CsfBlock]:
    """Encode an M x C x K x K code bank as M/m blocks."""
    return [
        encode(flatten_columns(reshape_group(g)), bit, wbit, codebook)
        for g in group_filters(codes, m)
    ]


def decode_layer(blocks, C: int, K: int) -> np.ndarray:
    """Rebuild the M x C x K x K code bank from its blocks."""
    groups = [
        unreshape_group(unflatten_columns(decode(b), C, K, n)).values
        for n, b in enumerate(blocks)
    ]
    if not groups:
        raise ShapeError("no blocks to decode")
    return np.concatenate(groups, axis=0)


def _pack(words: np.ndarray, width: int) -> bytes:
    shifts = np.arange(width, dtype=np.uint64)
    bits = ((words.astype(np.uint64)[:, None] >> shifts) & np.uint64(1)).astype(np.uint8)
    return np.packbits(bits.ravel(), bitorder="little").tobytes()


def _unpack(data: bytes, count: int, width: int) -> np.ndarray:
    bits = np.unpackbits(np.frombuffer(data, dtype=np.uint8), bitorder="little")
    tail = bits[count * width :]
    if tail.any():
        raise FormatError("padding bits", "nonzero bits after the last entry")
    bits = bits[: count * width].reshape(count, width).astype(np.uint64)
    words = (bits << np.arange(width, dtype=np.uint64)).sum(axis=1, dtype=np.uint64)
    return words


def serialize(block: CsfBlock) -> bytes:
    head = _HEADER.pack(
        CSF_MAGIC, CSF_VERSION, block.m, block.num_columns, block.bit, block.wbit, len(block)
    )
    words = block.rel.astype(np.uint64) | (block.code.astype(np.uint64) << np.uint64(block.bit))
    body = _pack(words, block.bit + block.wbit)
    tail = save_codebook(block.codebook) if block.codebook is not None else b""
    return head + body + tail


def deserialize(data: bytes) -> CsfBlock:
    data = bytes(data)
    if len(data) < _HEADER.size:
        raise FormatError("header", f"need {_HEADER.size} bytes, got {len(data)}")
    magic, version, m, num_columns, bit, wbit, count = _HEADER.unpack_from(data, 0)
    if magic != CSF_MAGIC:
        raise FormatError("magic", f"expected {CSF_MAGIC!r}, got {magic!r}")
    if version != CSF_VERSION:
        raise FormatError("version", f"unsupported version {version}")
    if m < 1:
        raise FormatError("m", "column height must be positive")
    if not 1 <= bit <= MAX_BIT:
        raise FormatError("bit", f"must lie in [1, {MAX_BIT}], got {bit}")
    if not 1 <= wbit <= MAX_WBIT:
        raise FormatError("wbit", f"must lie in [1, {MAX_WBIT}], got {wbit}")
    width = bit + wbit
    if count > m * num_columns:
        raise CorruptStream(f"{count} entries cannot fit in {m * num_columns} positions")
    nbytes = (count * width + 7) // 8
    start = _HEADER.size
    if len(data) < start + nbytes:
        raise FormatError("entry stream length", f"need {nbytes} bytes, got {len(data) - start}")
    words = _unpack(data[start : start + nbytes], count, width)
    rel = words & np.uint64((1 << bit) - 1)
    code = words >> np.uint64(bit)
    codebook = None
    end = start + nbytes
    if end < len(data):
        codebook, end = read_codebook(data, end)
        if end != len(data):
            raise FormatError("payload length", f"{len(data) - end} trailing bytes")
    return CsfBlock(m, num_columns, bit, wbit, rel, code, codebook)


def group_from_block(block: CsfBlock, C: int, K: int, index: int = 0) -> FilterGroup:
    return unreshape_group(unflatten_columns(decode(block), C, K, index))
