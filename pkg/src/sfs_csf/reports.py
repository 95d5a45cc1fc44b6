"""Per-layer and network reports built from codec, statistics and simulator output.

Every report is a plain dict ready for :func:`to_json`; numbers are either
copied from library results or formed as sums and ratios of them.
"""
from __future__ import annotations

import json
import math

import numpy as np

from .codec import decode_layer, encode_layer, flatten_columns
from .flow import group_filters, reshape_group, sfs_conv
from .network import Layer, NetworkManifest
from .sim import ArchConfig, LayerReport, aggregate, report, simulate_layer
from .stats import (
    DEFAULT_MAX_BIT,
    ZeroRunHistogram,
    batch_size_sweep,
    best_batch,
    extra_space,
    layer_zero_stat,
    nonzero_run_hist,
    optimize_bits,
    padding_count,
)
from .tensor import as_mode, dense_conv, dequantize_array

BASELINE_BIT = 4
SIG_DIGITS = 7


def ratio(num, den) -> float:
    if den == 0:
        return 1.0 if num == 0 else math.inf
    return num / den


def choose_bit(layer: Layer, bit="auto", max_bit: int = DEFAULT_MAX_BIT) -> int:
    """Index width for a layer: fixed, from the manifest, or the optimizer's choice."""
    if bit != "auto":
        return int(bit)
    if layer.bit is not None:
        return layer.bit
    hist, nz = layer_zero_stat(layer.codes, layer.spec.m)
    return optimize_bits(hist, nz, layer.wbit, max_bit).bit


def encode_network(net: NetworkManifest, bit="auto") -> dict[str, list]:
    """CSF blocks of every layer keyed by layer name."""
    return {
        layer.name: encode_layer(layer.codes, layer.spec.m, choose_bit(layer, bit), layer.wbit, layer.codebook)
        for layer in net
    }


def _spec_dict(layer: Layer) -> dict:
    s = layer.spec
    return {"M": s.M, "C": s.C, "K": s.K, "S": s.S, "W": s.W, "H": s.H, "m": s.m}


def encode_report(net: NetworkManifest, blocks: dict[str, list], files: dict[str, list] | None = None) -> dict:
    rows = []
    for layer in net:
        layer_blocks = blocks[layer.name]
        hist, nz = layer_zero_stat(layer.codes, layer.spec.m)
        bit = layer_blocks[0].bit
        pad = sum(b.padding_count for b in layer_blocks)
        extra = extra_space(nz, bit, pad, layer.wbit)
        base_pad = padding_count(hist, BASELINE_BIT)
        base_extra = extra_space(nz, BASELINE_BIT, base_pad, layer.wbit)
        row = {
            "name": layer.name,
            "spec": _spec_dict(layer),
            "groups": len(layer_blocks),
            "wbit": layer.wbit,
            "nonzeros": nz,
            "bit": bit,
            "padding": pad,
            "extra_space_bits": extra,
            "total_bits": nz * layer.wbit + extra,
            "baseline_bit": BASELINE_BIT,
            "baseline_padding": base_pad,
            "baseline_extra_space_bits": base_extra,
            "improvement": ratio(base_extra, extra),
        }
        if files is not None:
            row["files"] = files.get(layer.name, [])
        rows.append(row)
    nz = sum(r["nonzeros"] for r in rows)
    extra = sum(r["extra_space_bits"] for r in rows)
    base = sum(r["baseline_extra_space_bits"] for r in rows)
    return {
        "command": "encode",
        "layers": rows,
        "totals": {
            "nonzeros": nz,
            "extra_space_bits": extra,
            "baseline_extra_space_bits": base,
            "total_bits": sum(r["total_bits"] for r in rows),
            "improvement": ratio(base, extra),
        },
    }


def _hist_dict(h: ZeroRunHistogram) -> dict:
    return {str(k): v for k, v in h.counts.items()}


def stats_report(net: NetworkManifest, max_bit: int = DEFAULT_MAX_BIT) -> dict:
    rows = []
    for layer in net:
        zeros, nz = layer_zero_stat(layer.codes, layer.spec.m)
        nonzeros = ZeroRunHistogram()
        for g in group_filters(layer.codes, layer.spec.m):
            nonzeros = nonzeros + nonzero_run_hist(flatten_columns(reshape_group(g)))
        opt = optimize_bits(zeros, nz, layer.wbit, max_bit)
        rows.append({
            "name": layer.name,
            "length": int(layer.codes.size),
            "nonzeros": nz,
            "wbit": layer.wbit,
            "zero_runs": _hist_dict(zeros),
            "nonzero_runs": _hist_dict(nonzeros),
            "total_bits_by_bit": {str(b): f for b, f in opt.table.items()},
            "best_bit": opt.bit,
            "best_total_bits": opt.total_bits,
        })
    return {"command": "stats", "layers": rows}


def layer_report_dict(rep: LayerReport) -> dict:
    return {
        "counters": rep.counters.as_dict(),
        "util_dense": rep.util_dense,
        "util_csf": rep.util_csf,
        "speedup": rep.speedup,
        "lookup_ratio": rep.lookup_ratio,
    }


def simulate_network(net: NetworkManifest, blocks: dict[str, list], mode: str, seed: int,
                     line_buffer_rows: int | None = None, lookup_baseline: str = "per-nonzero"):
    """Simulate every layer; returns ``({name: output}, {name: LayerReport})``."""
    outputs, reports = {}, {}
    for layer in net:
        config = ArchConfig(layer.spec.m, line_buffer_rows, lookup_baseline)
        out, counters = simulate_layer(
            layer.spec, blocks[layer.name], layer.input_for(mode, seed), config, layer.codebook, mode
        )
        outputs[layer.name] = out.values
        reports[layer.name] = report(counters)
    return outputs, reports


def simulate_report(net: NetworkManifest, reports: dict[str, LayerReport]) -> dict:
    rows = [{"name": l.name, **layer_report_dict(reports[l.name])} for l in net]
    return {
        "command": "simulate",
        "layers": rows,
        "network": layer_report_dict(aggregate(reports[l.name] for l in net)),
    }


def sweep_report(net: NetworkManifest, candidates, max_bit: int = DEFAULT_MAX_BIT) -> dict:
    rows = []
    for layer in net:
        sweep = batch_size_sweep(layer.codes, layer.wbit, candidates, max_bit)
        best = best_batch(sweep)
        rows.append({
            "name": layer.name,
            "rows": [
                {"m": r.m, "best_bit": r.best_bit, "total_bits": r.total_bits,
                 "padding": r.padding, "best": r is best}
                for r in sweep
            ],
            "best_m": best.m,
        })
    return {"command": "sweep", "layers": rows}


def verify_layer(layer: Layer, layer_blocks, mode: str, seed: int) -> dict:
    """Compare dense convolution against the SFS path run from decoded CSF blocks."""
    spec = layer.spec
    inputs = layer.input_for(mode, seed)
    reference = dense_conv(layer.weights(mode), inputs, spec, mode).values
    codes = decode_layer(layer_blocks, spec.C, spec.K)
    book = layer_blocks[0].codebook if layer_blocks[0].codebook is not None else layer.codebook
    decoded = as_mode(codes if book is None else dequantize_array(codes, book), mode)
    checks = {
        "sfs_conv": sfs_conv(decoded, inputs, spec, mode).values,
        "simulate_layer": simulate_layer(spec, layer_blocks, inputs, ArchConfig(spec.m), book, mode)[0].values,
    }
    result = {"name": layer.name, "pass": True, "checks": {}}
    for path, got in checks.items():
        if mode == "int":
            bad = got != reference
        else:
            bad = ~np.isclose(got, reference, rtol=1e-5, atol=1e-12)
        entry = {"pass": not bad.any()}
        if bad.any():
            idx = tuple(int(i) for i in np.argwhere(bad)[0])
            entry.update(first_mismatch=list(idx), expected=reference[idx].item(), got=got[idx].item())
            result["pass"] = False
        result["checks"][path] = entry
    return result


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return float(f"{x:.{SIG_DIGITS}g}") if math.isfinite(x) else None
    return obj


def to_json(doc: dict) -> str:
    """Stable JSON: sorted keys, floats rounded to 7 significant digits."""
    return json.dumps(_clean(doc), indent=2, sort_keys=True) + "\n"


def _fmt(v) -> str:
    if isinstance(v, float):
        return "-" if not math.isfinite(v) else f"{v:.{SIG_DIGITS}g}"
    return str(v)


def table(rows: list[dict], columns: list[str]) -> str:
    cells = [[_fmt(r.get(c, "")) for c in columns] for r in rows]
    widths = [max(len(c), *(len(row[i]) for row in cells)) for i, c in enumerate(columns)]
    lines = ["  ".join(c.rjust(w) for c, w in zip(columns, widths))]
    lines.append("  ".join("-" * w for w in widths))
    lines += ["  ".join(v.rjust(w) for v, w in zip(row, widths)) for row in cells]
    return "\n".join(lines)


def histogram_text(counts: dict, width: int = 40) -> str:
    if not counts:
        return "  (empty)"
    top = max(counts.values())
    return "\n".join(
        f"  {k:>5} {v:>8} {'#' * max(1, round(width * v / top))}" for k, v in counts.items()
    )


def to_text(doc: dict) -> str:
    cmd = doc["command"]
    if cmd == "encode":
        cols = ["name", "nonzeros", "wbit", "bit", "padding", "extra_space_bits",
                "baseline_extra_space_bits", "improvement"]
        totals = {"name": "total", **doc["totals"]}
        return table(doc["layers"] + [totals], cols) + "\n"
    if cmd == "stats":
        parts = []
        for row in doc["layers"]:
            parts.append(f"{row['name']}: {row['nonzeros']} nonzeros of {row['length']}, best bit {row['best_bit']}")
            parts.append(" zero runs (length, count):")
            parts.append(histogram_text(row["zero_runs"]))
            parts.append(" nonzero runs (length, count):")
            parts.append(histogram_text(row["nonzero_runs"]))
            parts.append(" " + table(
                [{"bit": b, "total_bits": f} for b, f in row["total_bits_by_bit"].items()],
                ["bit", "total_bits"]).replace("\n", "\n "))
        return "\n".join(parts) + "\n"
    if cmd == "simulate":
        rows = []
        for row in doc["layers"] + [{"name": "network", **doc["network"]}]:
            rows.append({"name": row["name"], **row["counters"], **{k: row[k] for k in
                         ("util_dense", "util_csf", "speedup", "lookup_ratio")}})
        return table(rows, ["name", "total_macs", "nz_macs", "csf_macs", "util_dense",
                            "util_csf", "speedup", "lookup_ratio"]) + "\n"
    if cmd == "sweep":
        parts = []
        for layer in doc["layers"]:
            parts.append(f"{layer['name']}: best m = {layer['best_m']}")
            rows = [{**r, "best": "*" if r["best"] else ""} for r in layer["rows"]]
            parts.append(table(rows, ["m", "best_bit", "padding", "total_bits", "best"]))
        return "\n".join(parts) + "\n"
    if cmd == "verify":
        lines = []
        for row in doc["layers"]:
            lines.append(f"{row['name']}: {'PASS' if row['pass'] else 'FAIL'}")
            for path, c in row["checks"].items():
                detail = "" if c["pass"] else f" first mismatch at {c['first_mismatch']}: expected {c['expected']}, got {c['got']}"
                lines.append(f"  {path}: {'ok' if c['pass'] else 'mismatch'}{detail}")
        lines.append("PASS" if doc["pass"] else "FAIL")
        return "\n".join(lines) + "\n"
    if cmd == "decode":
        return "\n".join(f"{r['name']}: {r['file']}" for r in doc["layers"]) + "\n"
    return to_json(doc)
