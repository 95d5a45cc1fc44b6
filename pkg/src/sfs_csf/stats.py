"""Run-length statistics and the relative-index width optimizer."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .codec import flatten_columns
from .errors import RangeError
from .flow import group_filters, reshape_group

DEFAULT_MAX_BIT = 16


@dataclass(frozen=True)
class ZeroRunHistogram:
    """Run length -> number of maximal runs of that length."""

    counts: dict[int, int] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "counts", dict(sorted((int(k), int(v)) for k, v in self.counts.items() if v)))

    @property
    def max(self) -> int:
        return max(self.counts, default=0)

    @property
    def runs(self) -> int:
        return sum(self.counts.values())

    def covered(self) -> int:
        """Number of sequence elements that lie inside a counted run."""
        return sum(k * v for k, v in self.counts.items())

    def __getitem__(self, length: int) -> int:
        return self.counts.get(length, 0)

    def __add__(self, other: "ZeroRunHistogram") -> "ZeroRunHistogram":
        return ZeroRunHistogram(dict(Counter(self.counts) + Counter(other.counts)))


def _runs(mask: np.ndarray) -> ZeroRunHistogram:
    # lengths of maximal True runs
    padded = np.concatenate([[False], mask, [False]]).astype(np.int8)
    edges = np.diff(padded)
    starts = np.flatnonzero(edges == 1)
    ends = np.flatnonzero(edges == -1)
    lengths, counts = np.unique(ends - starts, return_counts=True)
    return ZeroRunHistogram(dict(zip(lengths.tolist(), counts.tolist())))


def _flat(seq) -> np.ndarray:
    return np.asarray(getattr(seq, "values", seq)).ravel()


def zero_run_hist(seq) -> ZeroRunHistogram:
    return _runs(_flat(seq) == 0)


def nonzero_run_hist(seq) -> ZeroRunHistogram:
    return _runs(_flat(seq) != 0)


def padding_count(zero_stat: ZeroRunHistogram, bit: int) -> int:
    """Padding entries needed to break every zero run at index width ``bit``."""
    span = 1 << bit
    return sum((i // span) * n for i, n in zero_stat.counts.items() if i >= span)


def total_bits(zero_stat: ZeroRunHistogram, nz_num: int, wbit: int, bit: int) -> int:
    """Index bits of every nonzero plus the full cost of every padding entry."""
    return nz_num * bit + padding_count(zero_stat, bit) * (wbit + bit)


@dataclass(frozen=True)
class BitOptResult:
    bit: int
    total_bits: int
    table: dict[int, int]


def optimize_bits(zero_stat: ZeroRunHistogram, nz_num: int, wbit: int, max_bit: int = DEFAULT_MAX_BIT) -> BitOptResult:
    """Smallest index width minimising :func:`total_bits` over ``1..max_bit``."""
    if max_bit < 1:
        raise RangeError(f"max_bit must be >= 1, got {max_bit}")
    table = {b: total_bits(zero_stat, nz_num, wbit, b) for b in range(1, max_bit + 1)}
    best = min(table, key=lambda b: (table[b], b))
    return BitOptResult(best, table[best], table)


def extra_space(nz_num: int, bit: int, padding_count: int, wbit: int) -> int:
    """Bits spent on relative indices and padding entries beyond the weights."""
    if min(nz_num, bit, padding_count, wbit) < 0:
        raise RangeError("extra_space inputs must be nonnegative")
    return nz_num * bit + padding_count * (wbit + bit)


def layer_zero_stat(codes, m: int) -> tuple[ZeroRunHistogram, int]:
    """Zero-run histogram summed over the groups of a layer, and its nonzero count."""
    hist = ZeroRunHistogram()
    for g in group_filters(codes, m):
        hist = hist + zero_run_hist(flatten_columns(reshape_group(g)))
    return hist, int(np.count_nonzero(getattr(codes, "values", codes)))


@dataclass(frozen=True)
class SweepRow:
    m: int
    best_bit: int
    total_bits: int
    index_bits: int
    padding: int


def batch_size_sweep(filters, wbit: int, candidates, max_bit: int = DEFAULT_MAX_BIT) -> list[SweepRow]:
    """Storage of a code bank for each candidate batch size.

    One index width is chosen per layer; the total counts weight bits,
    index bits and padding entries.
    """
    rows = []
    for m in candidates:
        hist, nz = layer_zero_stat(filters, m)
        opt = optimize_bits(hist, nz, wbit, max_bit)
        pad = padding_count(hist, opt.bit)
        rows.append(SweepRow(m, opt.bit, nz * wbit + opt.total_bits, nz * opt.bit, pad))
    return rows


def best_batch(rows: list[SweepRow]) -> SweepRow:
    return min(rows, key=lambda r: (r.total_bits, r.m))
