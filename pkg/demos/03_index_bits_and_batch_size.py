"""Choosing the relative index width and the batch size.

Run with ``python demos/03_index_bits_and_batch_size.py``.
"""
import numpy as np

from sfs_csf import (
    ColumnSequence,
    LayerSpec,
    encode,
    extra_space,
    nonzero_run_hist,
    optimize_bits,
    padding_count,
    zero_run_hist,
)
from sfs_csf.stats import batch_size_sweep, best_batch, layer_zero_stat

rng = np.random.default_rng(2)
spec = LayerSpec(M=32, C=16, K=3, S=1, W=5, H=5)
wbit = 5
codes = np.where(rng.random(spec.filter_shape) < 0.3, rng.integers(1, 1 << wbit, spec.filter_shape), 0)

# Zero runs along the column-major stream, over all groups of the layer.
hist, nz = layer_zero_stat(codes, spec.m)
print(f"{nz} nonzeros, longest zero run {hist.max}")
print("zero runs:", dict(list(hist.counts.items())[:10]), "...")

# Cost of every candidate width: index bits of the nonzeros + full padding entries.
res = optimize_bits(hist, nz, wbit, max_bit=8)
for bit, total in res.table.items():
    marker = "  <- best" if bit == res.bit else ""
    print(f"bit={bit}: {total:6d} extra bits, {padding_count(hist, bit):5d} padding entries{marker}")

# The encoder emits exactly the padding the histogram predicts.
seq = ColumnSequence(4, 5, [1, 0, 0, 0, 0, 0, 0, 0, 0, 2] + [0] * 10)
for bit in (1, 2, 3):
    assert encode(seq, bit, 2).padding_count == padding_count(zero_run_hist(seq), bit)
print("nonzero runs of the toy sequence:", nonzero_run_hist(seq).counts)

# Compared with a fixed 4-bit index:
base = extra_space(nz, 4, padding_count(hist, 4), wbit)
print(f"extra space {res.total_bits} vs {base} at 4 bits -> {base / res.total_bits:.3f}x")

# Smaller groups change the column height, hence the runs and the best width.
rows = batch_size_sweep(codes, wbit, [1, 2, 4, 8, 16, 32])
for r in rows:
    print(f"m={r.m:2d}: bit={r.best_bit}, padding={r.padding:4d}, total={r.total_bits} bits")
print("smallest storage at m =", best_batch(rows).m)
