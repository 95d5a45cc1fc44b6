"""Command-line front end.

Subcommands: encode, decode, verify, stats, simulate, sweep.  Without
``--manifest`` every command runs on the built-in synthetic network drawn
from ``--seed``.  Exit codes: 0 success, 1 verification failure, 2 input or
format error.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import reports
from .codec import decode_layer, deserialize, serialize
from .errors import SfsError, ShapeError
from .network import ManifestError, NetworkManifest, load_manifest, synthetic_network
from .tensorio import write_codebook_file, write_tensor_file

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


def _bit_arg(text: str):
    if text == "auto":
        return text
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"--bit must be 'auto' or an integer, got {text!r}")
    if not 1 <= value <= 16:
        raise argparse.ArgumentTypeError("--bit must lie in [1, 16]")
    return value


def _batch_sizes(text: str) -> list[int]:
    try:
        sizes = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad batch size list {text!r}")
    if not sizes or min(sizes) < 1:
        raise argparse.ArgumentTypeError("batch sizes must be positive integers")
    return sizes


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--manifest", type=Path, help="network manifest (JSON); default: synthetic network")
    common.add_argument("--out", type=Path, help="output directory")
    common.add_argument("--bit", type=_bit_arg, default="auto", help="relative index width or 'auto'")
    common.add_argument("--wbit", type=int, help="code width for layers stored as real values")
    common.add_argument("--mode", choices=("int", "real"), default="int", help="arithmetic mode")
    common.add_argument("--seed", type=int, default=0, help="seed for the synthetic network and inputs")
    common.add_argument("--format", choices=("json", "text"), default="text", help="report format")

    parser = argparse.ArgumentParser(prog="sfs-csf", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("encode", parents=[common], help="encode every layer to CSF1 files")
    p = sub.add_parser("decode", parents=[common], help="decode CSF1 files back to SFST code tensors")
    p.add_argument("--csf-dir", type=Path, required=True, help="directory written by 'encode'")
    p = sub.add_parser("verify", parents=[common], help="check CSF/SFS results against dense convolution")
    p.add_argument("--csf-dir", type=Path, help="verify existing CSF1 files instead of encoding afresh")
    sub.add_parser("stats", parents=[common], help="run-length histograms and index-width tables")
    p = sub.add_parser("simulate", parents=[common], help="count MACs and lookups on the 3D-SIMD model")
    p.add_argument("--csf-dir", type=Path, help="simulate existing CSF1 files instead of encoding afresh")
    p.add_argument("--line-buffer-rows", type=int, help="line buffer capacity in rows (default K)")
    p.add_argument("--lookup-baseline", choices=("per-nonzero", "per-column"), default="per-nonzero")
    p = sub.add_parser("sweep", parents=[common], help="storage for several batch sizes")
    p.add_argument("--batch-sizes", type=_batch_sizes, required=True, help="comma-separated list of m")
    return parser


def block_path(directory: Path, name: str, n: int) -> Path:
    return directory / f"{name}.g{n}.csf"


def _network(args) -> NetworkManifest:
    if args.manifest is None:
        return synthetic_network(args.seed)
    return load_manifest(args.manifest, args.wbit)


def _read_blocks(net: NetworkManifest, directory: Path) -> dict[str, list]:
    blocks = {}
    for layer in net:
        try:
            blocks[layer.name] = [
                deserialize(block_path(directory, layer.name, n).read_bytes())
                for n in range(layer.spec.groups)
            ]
        except (SfsError, OSError) as exc:
            raise ManifestError(f"layer {layer.name}: {exc}") from exc
    return blocks


def _blocks(args, net: NetworkManifest) -> dict[str, list]:
    if getattr(args, "csf_dir", None) is not None:
        return _read_blocks(net, args.csf_dir)
    return reports.encode_network(net, args.bit)


def _emit(doc: dict, args) -> None:
    text = reports.to_json(doc) if args.format == "json" else reports.to_text(doc)
    sys.stdout.write(text)
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / f"{doc['command']}_report.json").write_text(reports.to_json(doc))


def cmd_encode(args) -> int:
    net = _network(args)
    blocks = reports.encode_network(net, args.bit)
    files = None
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        files = {}
        for name, layer_blocks in blocks.items():
            files[name] = []
            for n, block in enumerate(layer_blocks):
                path = block_path(args.out, name, n)
                path.write_bytes(serialize(block))
                files[name].append(path.name)
    _emit(reports.encode_report(net, blocks, files), args)
    return EXIT_OK


def cmd_decode(args) -> int:
    net = _network(args)
    blocks = _read_blocks(net, args.csf_dir)
    out = args.out or args.csf_dir
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for layer in net:
        layer_blocks = blocks[layer.name]
        codes = decode_layer(layer_blocks, layer.spec.C, layer.spec.K)
        path = out / f"{layer.name}.decoded.sfst"
        write_tensor_file(path, codes, layer_blocks[0].wbit)
        row = {"name": layer.name, "file": path.name, "matches_manifest": bool((codes == layer.codes).all())}
        if layer_blocks[0].codebook is not None:
            write_codebook_file(out / f"{layer.name}.decoded.sfcb", layer_blocks[0].codebook)
        rows.append(row)
    doc = {"command": "decode", "layers": rows}
    sys.stdout.write(reports.to_json(doc) if args.format == "json" else reports.to_text(doc))
    return EXIT_OK


def cmd_verify(args) -> int:
    net = _network(args)
    blocks = _blocks(args, net)
    rows = [reports.verify_layer(layer, blocks[layer.name], args.mode, args.seed) for layer in net]
    doc = {"command": "verify", "layers": rows, "pass": all(r["pass"] for r in rows)}
    _emit(doc, args)
    return EXIT_OK if doc["pass"] else EXIT_FAIL


def cmd_stats(args) -> int:
    _emit(reports.stats_report(_network(args)), args)
    return EXIT_OK


def cmd_simulate(args) -> int:
    net = _network(args)
    blocks = _blocks(args, net)
    _, layer_reports = reports.simulate_network(
        net, blocks, args.mode, args.seed, args.line_buffer_rows, args.lookup_baseline
    )
    _emit(reports.simulate_report(net, layer_reports), args)
    return EXIT_OK


def cmd_sweep(args) -> int:
    net = _network(args)
    for layer in net:
        bad = [m for m in args.batch_sizes if layer.spec.M % m]
        if bad:
            raise ShapeError(f"layer {layer.name}: batch sizes {bad} do not divide M={layer.spec.M}")
    _emit(reports.sweep_report(net, args.batch_sizes), args)
    return EXIT_OK


COMMANDS = {
    "encode": cmd_encode,
    "decode": cmd_decode,
    "verify": cmd_verify,
    "stats": cmd_stats,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (SfsError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
