"""Relative-indexed CSF encoding of one filter group.

Run with ``python demos/02_csf_encoding.py``.
"""
import numpy as np

from sfs_csf import (
    ColumnSequence,
    LayerSpec,
    decode,
    deserialize,
    encode,
    flatten_columns,
    group_filters,
    reshape_group,
    serialize,
)

# The smallest interesting case: one column of m = 4 weights, 2-bit relative indices.
block = encode(ColumnSequence(4, 1, [5, 0, 0, 7]), bit=2, wbit=4)
print("entries:", block.entries)
print("column counts:", block.column_counts)

# A zero run longer than 2**bit - 1 needs a padding entry (code 0).
block = encode(ColumnSequence(4, 2, [0, 0, 0, 0, 9, 0, 0, 0]), bit=2, wbit=4)
print("entries:", block.entries, "padding:", block.padding_count)
print("absolute positions:", block.positions, "column counts:", block.column_counts)

# The file holds only the entry stream; column counts are rebuilt on load.
data = serialize(block)
print("CSF1 file:", len(data), "bytes:", data.hex())
print("decoded:", decode(deserialize(data)).values)

# A realistic group: 8 filters of 4 channels, 3x3 kernels, ~25% nonzero codes.
rng = np.random.default_rng(1)
spec = LayerSpec(M=8, C=4, K=3, S=1, W=5, H=5)
codes = np.where(rng.random(spec.filter_shape) < 0.25, rng.integers(1, 16, spec.filter_shape), 0)
seq = flatten_columns(reshape_group(group_filters(codes, 8)[0]))
print(f"\n{seq.num_columns} columns of {seq.m}, {np.count_nonzero(seq.values)} nonzeros")
for bit in (1, 2, 3, 4, 6):
    b = encode(seq, bit, wbit=4)
    bits = len(serialize(b)) * 8
    print(f"bit={bit}: {len(b):4d} entries ({b.padding_count:3d} padding), file {bits} bits")
    assert decode(b) == seq

# Per-channel access: the counts locate every column without scanning the stream.
b = encode(seq, 3, 4)
j, code = b.column_entries(0)
print("column 0 filters:", j, "codes:", code)
