"""Dense tensor types, layer shape arithmetic and the reference convolution.

All dense tensors use channel-major, then row, then column order.  Two
arithmetic modes exist and are always chosen explicitly by the caller:

* ``"int"``  -- values are exact integers, accumulation in int64;
* ``"real"`` -- 64-bit floating point.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import RangeError, ShapeError

MODES = ("int", "real")


class Dims(NamedTuple):
    W_out: int
    H_out: int
    groups: int


@dataclass(frozen=True)
class LayerSpec:
    """Shape of one CONV layer (FC layers are K=1, W=H=1).

    M filters of C channels with a KxK kernel, stride S, over a WxH input,
    processed in groups of m filters.
    """

    M: int
    C: int
    K: int
    S: int
    W: int
    H: int
    m: int | None = None

    def __post_init__(self):
        if self.m is None:
            object.__setattr__(self, "m", self.M)
        for name in ("M", "C", "K", "S", "W", "H", "m"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise ShapeError(f"{name} must be a positive integer, got {value!r}")
        if self.K > self.W or self.K > self.H:
            raise ShapeError(f"kernel {self.K} larger than input {self.H}x{self.W}")
        if self.M % self.m:
            raise ShapeError(f"batch size m={self.m} does not divide M={self.M}")
        if (self.W - self.K) % self.S or (self.H - self.K) % self.S:
            raise ShapeError(
                f"stride {self.S} does not tile input {self.H}x{self.W} with kernel {self.K}"
            )

    @classmethod
    def fc(cls, n_out: int, n_in: int, m: int | None = None) -> "LayerSpec":
        """A fully connected layer viewed as a 1x1 convolution on a 1x1 input."""
        return cls(M=n_out, C=n_in, K=1, S=1, W=1, H=1, m=m)

    @property
    def W_out(self) -> int:
        return (self.W - self.K) // self.S + 1

    @property
    def H_out(self) -> int:
        return (self.H - self.K) // self.S + 1

    @property
    def groups(self) -> int:
        return self.M // self.m

    @property
    def filter_shape(self) -> tuple[int, int, int, int]:
        return (self.M, self.C, self.K, self.K)

    @property
    def input_shape(self) -> tuple[int, int, int]:
        return (self.C, self.H, self.W)

    @property
    def output_shape(self) -> tuple[int, int, int]:
        return (self.M, self.H_out, self.W_out)

    def with_batch(self, m: int) -> "LayerSpec":
        return LayerSpec(self.M, self.C, self.K, self.S, self.W, self.H, m)


def derive_dims(spec: LayerSpec) -> Dims:
    """Output width, output height and number of filter groups."""
    if spec.M % spec.m:
        raise ShapeError(f"batch size m={spec.m} does not divide M={spec.M}")
    if (spec.W - spec.K) % spec.S or (spec.H - spec.K) % spec.S:
        raise ShapeError(f"stride {spec.S} does not tile the input")
    return Dims((spec.W - spec.K) // spec.S + 1, (spec.H - spec.K) // spec.S + 1, spec.M // spec.m)


def _readonly(values) -> np.ndarray:
    arr = np.array(values, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class FilterBank:
    """M x C x K x K weights (real values or quantization codes)."""

    spec: LayerSpec
    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values)
        if arr.size != math.prod(self.spec.filter_shape):
            raise ShapeError(
                f"filter bank has {arr.size} values, expected {self.spec.filter_shape}"
            )
        object.__setattr__(self, "values", _readonly(arr.reshape(self.spec.filter_shape)))


@dataclass(frozen=True, eq=False)
class FeatureMap:
    """channels x height x width activations."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values)
        if arr.ndim != 3:
            raise ShapeError(f"feature map must be 3-D, got shape {arr.shape}")
        object.__setattr__(self, "values", _readonly(arr))

    @property
    def channels(self) -> int:
        return self.values.shape[0]

    @property
    def height(self) -> int:
        return self.values.shape[1]

    @property
    def width(self) -> int:
        return self.values.shape[2]

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.values.shape


@dataclass(frozen=True, eq=False)
class QuantCodebook:
    """Maps a ``wbit``-bit code to a weight value; code 0 is always 0.0."""

    wbit: int
    table: np.ndarray

    def __post_init__(self):
        if not 1 <= self.wbit <= 32:
            raise RangeError(f"wbit must lie in [1, 32], got {self.wbit}")
        table = np.asarray(self.table, dtype=np.float64).ravel()
        if table.size != 1 << self.wbit:
            raise RangeError(f"codebook needs {1 << self.wbit} entries, got {table.size}")
        if table[0] != 0.0:
            raise RangeError("codebook code 0 must map to 0.0")
        object.__setattr__(self, "table", _readonly(table))

    def __eq__(self, other):
        if not isinstance(other, QuantCodebook):
            return NotImplemented
        return self.wbit == other.wbit and np.array_equal(self.table, other.table)

    @classmethod
    def from_values(cls, values, wbit: int | None = None) -> "QuantCodebook":
        """Exact codebook listing the distinct nonzero ``values`` in ascending order."""
        levels = np.unique(np.asarray(values, dtype=np.float64))
        levels = levels[levels != 0.0]
        needed = max(1, math.ceil(math.log2(levels.size + 1)))
        if wbit is None:
            wbit = needed
        elif wbit < needed:
            raise RangeError(f"{levels.size} distinct nonzero values need wbit >= {needed}")
        table = np.zeros(1 << wbit)
        table[1 : levels.size + 1] = levels
        return cls(wbit, table)

    def encode(self, values) -> np.ndarray:
        """Codes of ``values``; every value must appear in the table."""
        values = np.asarray(values, dtype=np.float64)
        levels = self.table[1:]
        order = np.argsort(levels, kind="stable")
        sorted_levels = levels[order]
        pos = np.clip(np.searchsorted(sorted_levels, values), 0, sorted_levels.size - 1)
        codes = (order[pos] + 1).astype(np.uint32)
        codes[values == 0.0] = 0
        bad = (values != 0.0) & (sorted_levels[pos] != values)
        if bad.any():
            raise RangeError(f"value {values[bad][0]!r} not present in codebook")
        return codes


def dequantize(code: int, codebook: QuantCodebook) -> float:
    if code < 0 or code >= codebook.table.size:
        raise RangeError(f"code {code} outside codebook of {codebook.table.size} entries")
    return float(codebook.table[code])


def dequantize_array(codes, codebook: QuantCodebook) -> np.ndarray:
    codes = np.asarray(codes)
    if codes.size and (codes.min() < 0 or codes.max() >= codebook.table.size):
        raise RangeError(f"codes outside codebook of {codebook.table.size} entries")
    return codebook.table[codes.astype(np.intp)]


def as_mode(values, mode: str) -> np.ndarray:
    """Cast ``values`` to the array type used by ``mode``.

    In integer mode non-integral values raise :class:`RangeError`.
    """
    arr = np.asarray(getattr(values, "values", values))
    if mode == "real":
        return arr.astype(np.float64)
    if mode != "int":
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    if arr.dtype.kind == "f":
        if not np.all(np.isfinite(arr)) or np.any(arr != np.round(arr)):
            raise RangeError("integer mode requires integral values")
    return arr.astype(np.int64)


def check_layer(spec: LayerSpec, filters, inputs) -> tuple[np.ndarray, np.ndarray]:
    w = np.asarray(getattr(filters, "values", filters))
    v = np.asarray(getattr(inputs, "values", inputs))
    if w.shape != spec.filter_shape:
        raise ShapeError(f"filters have shape {w.shape}, layer expects {spec.filter_shape}")
    if v.shape != spec.input_shape:
        raise ShapeError(f"input has shape {v.shape}, layer expects {spec.input_shape}")
    return w, v


def dense_conv(filters, inputs, spec: LayerSpec, mode: str = "int") -> FeatureMap:
    """Valid (unpadded) strided convolution without bias.

    ``out[o, y, x] = sum_{i, r, c} W[o, i, r, c] * V[i, S*y + r, S*x + c]``
    """
    w, v = check_layer(spec, filters, inputs)
    w, v = as_mode(w, mode), as_mode(v, mode)
    S = spec.S
    # (C, H', W', K, K) view of every receptive field
    windows = sliding_window_view(v, (spec.K, spec.K), axis=(1, 2))[:, ::S, ::S]
    out = np.einsum("oirc,iyxrc->oyx", w, windows)
    return FeatureMap(out)
