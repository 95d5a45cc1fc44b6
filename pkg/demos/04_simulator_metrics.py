"""Counting MACs and lookups on the 3D-SIMD dataflow model.

Run with ``python demos/04_simulator_metrics.py``.
"""
import numpy as np

from sfs_csf import ArchConfig, SimCounters, aggregate, dense_conv, report, simulate_layer
from sfs_csf.network import synthetic_network
from sfs_csf.reports import choose_bit, encode_network

net = synthetic_network(seed=0)
blocks = encode_network(net)

reports = []
for layer in net:
    v = layer.input_for("int", seed=0)
    out, counters = simulate_layer(layer.spec, blocks[layer.name], v, ArchConfig(layer.spec.m), layer.codebook)
    ok = np.array_equal(out.values, dense_conv(layer.weights("int"), v, layer.spec).values)
    rep = report(counters)
    reports.append(rep)
    print(
        f"{layer.name:7s} bit={choose_bit(layer)} output ok={ok} "
        f"util {rep.util_dense:.3f} -> {rep.util_csf:.3f}, speed-up {rep.speedup:.2f}x, "
        f"lookups {rep.lookup_ratio:.3f} of per-nonzero"
    )

net_rep = aggregate(reports)
print(f"network: util {net_rep.util_dense:.3f} -> {net_rep.util_csf:.3f}, speed-up {net_rep.speedup:.2f}x")

# The same ratios applied to published AlexNet MAC totals (GOPS).
alexnet = report(SimCounters(total_macs=1.05728963, nz_macs=0.2799577, csf_macs=0.2899182))
print(f"AlexNet totals: util {alexnet.util_dense:.7f} -> {alexnet.util_csf:.7f}, speed-up {alexnet.speedup:.2f}x")
