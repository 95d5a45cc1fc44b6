"""Operation-counting model of the 3D-SIMD dataflow.

For each filter group and each input channel the simulator

1. fetches the group's CSF entries for that channel into the local filter
   buffer (they stay there for the whole channel pass),
2. streams the channel's rows through a line buffer,
3. forms the K x K window for every output position of a row, and
4. for every kernel position multiplies the window element by the stored
   entries of the matching column, one MAC per entry.

Padding entries occupy a MAC slot with a zero weight.  Nothing here models
time; the counters are what the metrics are built from.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import asdict, dataclass, fields
from typing import Literal

import numpy as np

from .errors import DivisionError, ShapeError
from .tensor import FeatureMap, LayerSpec, QuantCodebook, as_mode, dequantize_array

BaselineModel = Literal["per-nonzero", "per-column"]


@dataclass(frozen=True)
class ArchConfig:
    m: int
    line_buffer_rows: int | None = None
    count_lookups: BaselineModel = "per-nonzero"

    def rows_for(self, K: int) -> int:
        rows = K if self.line_buffer_rows is None else self.line_buffer_rows
        if rows < K:
            raise ShapeError(f"line buffer of {rows} rows cannot hold a {K}-row window")
        return rows


@dataclass
class SimCounters:
    total_macs: float = 0
    nz_macs: float = 0
    csf_macs: float = 0
    csf_lookups: float = 0
    baseline_lookups: float = 0
    feature_loads: float = 0
    filter_loads: float = 0

    def __add__(self, other: "SimCounters") -> "SimCounters":
        return SimCounters(*(getattr(self, f.name) + getattr(other, f.name) for f in fields(self)))

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class LayerReport:
    counters: SimCounters
    util_dense: float
    util_csf: float
    speedup: float
    lookup_ratio: float


@dataclass(frozen=True)
class MacCounts:
    total: int
    nz: int
    csf: int


def mac_counts(spec: LayerSpec, nz_entries: int, padding_entries: int) -> MacCounts:
    positions = spec.W_out * spec.H_out
    return MacCounts(
        spec.M * spec.C * spec.K * spec.K * positions,
        nz_entries * positions,
        (nz_entries + padding_entries) * positions,
    )


def _weights(block, codebook: QuantCodebook | None, mode: str) -> np.ndarray:
    book = block.codebook if block.codebook is not None else codebook
    w = block.code if book is None else dequantize_array(block.code, book)
    return as_mode(w, mode)


def simulate_layer(spec: LayerSpec, blocks, inputs, config: ArchConfig,
                   codebook: QuantCodebook | None = None, mode: str = "int"):
    """Run one layer through the dataflow; returns ``(output, counters)``."""
    v = as_mode(inputs, mode)
    if v.shape != spec.input_shape:
        raise ShapeError(f"input has shape {v.shape}, layer expects {spec.input_shape}")
    if config.m != spec.m:
        raise ShapeError(f"PE column width {config.m} != layer batch size {spec.m}")
    if len(blocks) != spec.groups:
        raise ShapeError(f"expected {spec.groups} blocks, got {len(blocks)}")
    K, S, Ho, Wo = spec.K, spec.S, spec.H_out, spec.W_out
    cols_per_channel = K * K
    for b in blocks:
        if b.m != spec.m or b.num_columns != spec.C * cols_per_channel:
            raise ShapeError(f"block of {b.num_columns} columns x {b.m} does not match layer")
    rows_cap = config.rows_for(K)
    dtype = np.float64 if mode == "real" else np.int64
    out = np.zeros(spec.output_shape, dtype=dtype)
    cnt = SimCounters(total_macs=mac_counts(spec, 0, 0).total)
    # output column x reads window column S*x + c
    xs = np.arange(Wo) * S

    for n, block in enumerate(blocks):
        weights = _weights(block, codebook, mode)
        pos = block.positions
        offsets = block.column_offsets()
        nonzero = block.code != 0
        for chi in range(spec.C):
            lo = offsets[chi * cols_per_channel]
            hi = offsets[(chi + 1) * cols_per_channel]
            # local filter buffer for this channel
            local_pos = pos[lo:hi] - chi * cols_per_channel * spec.m
            col = local_pos // spec.m
            j = local_pos % spec.m
            r, c = col // K, col % K
            w = weights[lo:hi]
            n_entries = hi - lo
            n_nonzero = int(nonzero[lo:hi].sum())
            live_columns = int(np.count_nonzero(block.column_counts[chi * cols_per_channel:(chi + 1) * cols_per_channel]))
            cnt.filter_loads += n_entries

            line_buffer = deque(maxlen=rows_cap)
            next_row = 0
            for y in range(Ho):
                top = S * y
                while next_row < top + K:
                    line_buffer.append((next_row, v[chi, next_row]))
                    cnt.feature_loads += spec.W
                    next_row += 1
                first = line_buffer[0][0]
                rows = np.stack([line_buffer[top - first + k][1] for k in range(K)])
                # window registers for every x of this output row: (K, K, Wo)
                window = rows[:, xs[None, :] + np.arange(K)[:, None]]
                if n_entries:
                    contrib = w[:, None] * window[r, c]
                    np.add.at(out[n * spec.m : (n + 1) * spec.m, y], j, contrib)
                cnt.csf_macs += n_entries * Wo
                cnt.nz_macs += n_nonzero * Wo
                cnt.csf_lookups += live_columns * Wo
                if config.count_lookups == "per-column":
                    cnt.baseline_lookups += cols_per_channel * Wo
                else:
                    cnt.baseline_lookups += n_nonzero * Wo
    return FeatureMap(out), cnt


def _ratio(num, den) -> float:
    if den == 0:
        return 1.0 if num == 0 else math.inf
    return num / den


def report(counters: SimCounters) -> LayerReport:
    if counters.total_macs == 0:
        raise DivisionError("total_macs is zero")
    return LayerReport(
        counters,
        util_dense=counters.nz_macs / counters.total_macs,
        util_csf=_ratio(counters.nz_macs, counters.csf_macs),
        speedup=_ratio(counters.total_macs, counters.csf_macs),
        lookup_ratio=_ratio(counters.csf_lookups, counters.baseline_lookups),
    )


def aggregate(reports) -> LayerReport:
    reports = list(reports)
    if not reports:
        raise ValueError("aggregate needs at least one report")
    total = reports[0].counters
    for rep in reports[1:]:
        total = total + rep.counters
    return report(total)
