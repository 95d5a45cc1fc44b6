"""Stacked-filters-stationary (SFS) convolution.

The filter bank is split into groups of ``m`` consecutive filters.  Each
group is permuted so the ``m`` filters sit on the innermost axis, and one
input channel at a time is convolved against all ``m`` filters of that
channel at once.  The per-group outputs are concatenated back along the
channel axis, which reproduces :func:`~sfs_csf.tensor.dense_conv` exactly.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError
from .tensor import FeatureMap, LayerSpec, _readonly, as_mode, check_layer


@dataclass(frozen=True, eq=False)
class FilterGroup:
    """Filters ``index*m ... index*m + m - 1`` laid out as m x C x K x K."""

    index: int
    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values)
        if arr.ndim != 4 or arr.shape[2] != arr.shape[3]:
            raise ShapeError(f"filter group must be m x C x K x K, got {arr.shape}")
        object.__setattr__(self, "values", _readonly(arr))

    @property
    def m(self) -> int:
        return self.values.shape[0]

    def __eq__(self, other):
        if not isinstance(other, FilterGroup):
            return NotImplemented
        return self.index == other.index and np.array_equal(self.values, other.values)


@dataclass(frozen=True, eq=False)
class ReshapedGroup:
    """A filter group as C x K x K x m; the last axis selects the filter."""

    index: int
    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values)
        if arr.ndim != 4 or arr.shape[1] != arr.shape[2]:
            raise ShapeError(f"reshaped group must be C x K x K x m, got {arr.shape}")
        object.__setattr__(self, "values", _readonly(arr))

    @property
    def m(self) -> int:
        return self.values.shape[3]

    @property
    def C(self) -> int:
        return self.values.shape[0]

    @property
    def K(self) -> int:
        return self.values.shape[1]

    def __eq__(self, other):
        if not isinstance(other, ReshapedGroup):
            return NotImplemented
        return self.index == other.index and np.array_equal(self.values, other.values)


def group_filters(filters, m: int) -> list[FilterGroup]:
    w = np.asarray(getattr(filters, "values", filters))
    if w.ndim != 4:
        raise ShapeError(f"filter bank must be 4-D, got shape {w.shape}")
    M = w.shape[0]
    if m < 1 or M % m:
        raise ShapeError(f"batch size m={m} does not divide M={M}")
    return [FilterGroup(n, w[n * m : (n + 1) * m]) for n in range(M // m)]


def reshape_group(group: FilterGroup) -> ReshapedGroup:
    # [j][chi][r][c] -> [chi][r][c][j]
    return ReshapedGroup(group.index, np.ascontiguousarray(group.values.transpose(1, 2, 3, 0)))


def unreshape_group(group: ReshapedGroup) -> FilterGroup:
    return FilterGroup(group.index, np.ascontiguousarray(group.values.transpose(3, 0, 1, 2)))


def sfs_conv_group(group: ReshapedGroup, inputs, spec: LayerSpec, mode: str = "int") -> FeatureMap:
    """Convolve one reshaped group: m output channels of size H' x W'.

    The loop nest walks (channel, kernel row, kernel column); at each step
    one input element per output position is multiplied by the column of
    ``m`` weights at that kernel position and accumulated into all ``m``
    output channels.  The per-position and per-filter work inside a step is
    the parallel part and is expressed as a broadcast.
    """
    v = np.asarray(getattr(inputs, "values", inputs))
    if group.C != spec.C or group.K != spec.K:
        raise ShapeError(
            f"group is C={group.C}, K={group.K}; layer expects C={spec.C}, K={spec.K}"
        )
    if v.shape != spec.input_shape:
        raise ShapeError(f"input has shape {v.shape}, layer expects {spec.input_shape}")
    w, v = as_mode(group.values, mode), as_mode(v, mode)
    S, Ho, Wo = spec.S, spec.H_out, spec.W_out
    out = np.zeros((group.m, Ho, Wo), dtype=w.dtype)
    for chi in range(spec.C):
        for r in range(spec.K):
            for c in range(spec.K):
                # V[chi][S*y + r][S*x + c] for every (y, x)
                patch = v[chi, r : r + S * (Ho - 1) + 1 : S, c : c + S * (Wo - 1) + 1 : S]
                out += w[chi, r, c, :, None, None] * patch
    return FeatureMap(out)


def concat_outputs(parts) -> FeatureMap:
    arrays = [np.asarray(getattr(p, "values", p)) for p in parts]
    if not arrays:
        raise ShapeError("no output parts to concatenate")
    first = arrays[0]
    for a in arrays:
        if a.ndim != 3 or a.shape != first.shape:
            raise ShapeError(f"inconsistent part shapes {first.shape} and {a.shape}")
    if len(arrays) == 1:
        return parts[0] if isinstance(parts[0], FeatureMap) else FeatureMap(first)
    return FeatureMap(np.concatenate(arrays, axis=0))


def sfs_conv(filters, inputs, spec: LayerSpec, mode: str = "int") -> FeatureMap:
    """Group, reshape, convolve per group and concatenate."""
    w, v = check_layer(spec, filters, inputs)
    parts = [sfs_conv_group(reshape_group(g), v, spec, mode) for g in group_filters(w, spec.m)]
    return concat_outputs(parts)
