"""Stacked-filters-stationary convolution, step by step.

Run with ``python demos/01_sfs_flow.py``.
"""
import numpy as np

from sfs_csf import (
    LayerSpec,
    concat_outputs,
    dense_conv,
    group_filters,
    reshape_group,
    sfs_conv,
    sfs_conv_group,
)

rng = np.random.default_rng(0)

# A small CONV layer: 6 filters of 3 channels, 3x3 kernel, stride 2 over a 9x7 input,
# processed in groups of m = 3 filters.
spec = LayerSpec(M=6, C=3, K=3, S=2, W=9, H=7, m=3)
print(spec, "-> output", spec.output_shape, "groups", spec.groups)

weights = rng.integers(-4, 5, spec.filter_shape) * (rng.random(spec.filter_shape) < 0.4)
inputs = rng.integers(-4, 5, spec.input_shape)

# Split the bank into groups and move the filter axis innermost: C x K x K x m.
groups = group_filters(weights, spec.m)
reshaped = [reshape_group(g) for g in groups]
print("group 0 as m x C x K x K:", groups[0].values.shape)
print("group 0 as C x K x K x m:", reshaped[0].values.shape)

# Each kernel position now holds a column of m weights, one per filter.
print("column at (chi=0, r=0, c=0):", reshaped[0].values[0, 0, 0])

# Convolve each group one channel at a time and stack the results.
parts = [sfs_conv_group(g, inputs, spec) for g in reshaped]
stacked = concat_outputs(parts)

reference = dense_conv(weights, inputs, spec)
print("stacked == dense:", np.array_equal(stacked.values, reference.values))

# The batch size only changes the schedule, never the result.
for m in (1, 2, 3, 6):
    same = np.array_equal(sfs_conv(weights, inputs, spec.with_batch(m)).values, reference.values)
    print(f"m={m}: equal to dense convolution -> {same}")

# Fully connected layers are 1x1 convolutions on a 1x1 input.
fc = LayerSpec.fc(n_out=4, n_in=10, m=2)
w = rng.integers(-3, 4, (4, 10))
x = rng.integers(-3, 4, 10)
out = sfs_conv(w.reshape(fc.filter_shape), x.reshape(fc.input_shape), fc).values.ravel()
print("FC via SFS:", out, " W @ x:", w @ x)
