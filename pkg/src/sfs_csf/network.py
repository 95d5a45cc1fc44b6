"""Network manifests and the built-in synthetic fixture.

A manifest is a JSON document::

    {
      "layers": [
        {"name": "conv1", "M": 96, "C": 3, "K": 11, "S": 4, "W": 227, "H": 227,
         "m": 96,                       # optional, defaults to M
         "weights": "conv1.sfst",       # SFST file, codes or real values
         "codebook": "conv1.sfcb",      # optional SFCB file
         "bit": 3,                      # optional fixed index width
         "wbit": 8,                     # optional code width
         "input": "conv1_in.sfst"}      # optional activations for verify/simulate
      ]
    }

Relative paths are resolved against the manifest's directory.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import RangeError, SfsError, ShapeError
from .tensor import LayerSpec, QuantCodebook, as_mode, dequantize_array
from .tensorio import (
    read_codebook_file,
    read_tensor_file,
    write_codebook_file,
    write_tensor_file,
)

SPEC_KEYS = ("M", "C", "K", "S", "W", "H")


class ManifestError(SfsError, ValueError):
    """A manifest entry or one of the files it names is unusable."""


@dataclass(frozen=True, eq=False)
class Layer:
    """One manifest layer with its weights already turned into codes."""

    name: str
    spec: LayerSpec
    codes: np.ndarray
    wbit: int
    codebook: QuantCodebook | None = None
    bit: int | None = None
    inputs: np.ndarray | None = field(default=None, repr=False)

    def weights(self, mode: str) -> np.ndarray:
        """Weight values used for arithmetic: dequantized codes, or the codes themselves."""
        w = self.codes if self.codebook is None else dequantize_array(self.codes, self.codebook)
        return as_mode(w, mode)

    def input_for(self, mode: str, seed: int) -> np.ndarray:
        if self.inputs is not None:
            return as_mode(self.inputs, mode)
        rng = np.random.default_rng([seed, _stable_hash(self.name)])
        if mode == "int":
            return rng.integers(-8, 9, size=self.spec.input_shape)
        return rng.standard_normal(self.spec.input_shape)


@dataclass(frozen=True, eq=False)
class NetworkManifest:
    layers: list[Layer]
    root: Path | None = None

    def __post_init__(self):
        names = [l.name for l in self.layers]
        if len(set(names)) != len(names):
            raise ManifestError(f"layer names are not unique: {names}")

    def __iter__(self):
        return iter(self.layers)

    def __len__(self):
        return len(self.layers)


def _stable_hash(name: str) -> int:
    return int.from_bytes(name.encode()[:8].ljust(8, b"\0"), "little")


def _min_wbit(codes: np.ndarray) -> int:
    top = int(codes.max()) if codes.size else 0
    return max(1, top.bit_length())


def _load_layer(rec: dict, root: Path, wbit_override: int | None) -> Layer:
    name = rec.get("name")
    if not isinstance(name, str) or not name:
        raise ManifestError(f"layer record without a name: {rec!r}")
    try:
        missing = [k for k in SPEC_KEYS + ("weights",) if k not in rec]
        if missing:
            raise ManifestError(f"missing field(s) {missing}")
        spec = LayerSpec(*(int(rec[k]) for k in SPEC_KEYS), m=rec.get("m"))
        tensor = read_tensor_file(root / rec["weights"])
        # FC weights may be stored as M x C
        if tensor.values.size != np.prod(spec.filter_shape):
            raise ShapeError(
                f"weights have shape {tensor.values.shape}, layer needs {spec.filter_shape}"
            )
        values = tensor.values.reshape(spec.filter_shape)
        codebook = read_codebook_file(root / rec["codebook"]) if rec.get("codebook") else None
        wbit = rec.get("wbit", wbit_override)
        if tensor.is_codes:
            codes = values.astype(np.uint32)
            if codebook is not None:
                wbit = codebook.wbit
            elif wbit is None:
                wbit = tensor.wbit
        else:
            if codebook is None:
                codebook = QuantCodebook.from_values(values, wbit)
            codes = codebook.encode(values)
            wbit = codebook.wbit
        wbit = int(wbit)
        if codes.size and int(codes.max()) >= 1 << wbit:
            raise RangeError(f"codes need more than wbit={wbit} bits")
        inputs = None
        if rec.get("input"):
            inputs = read_tensor_file(root / rec["input"]).values
            if inputs.shape != spec.input_shape:
                raise ShapeError(f"input has shape {inputs.shape}, layer needs {spec.input_shape}")
        bit = rec.get("bit")
        return Layer(name, spec, codes, wbit, codebook, None if bit is None else int(bit), inputs)
    except (SfsError, OSError, TypeError, ValueError) as exc:
        if isinstance(exc, ManifestError) and str(exc).startswith(f"layer {name}:"):
            raise
        raise ManifestError(f"layer {name}: {exc}") from exc


def load_manifest(path, wbit: int | None = None) -> NetworkManifest:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ManifestError(f"cannot read manifest {path}: {exc}") from exc
    records = doc.get("layers") if isinstance(doc, dict) else None
    if not isinstance(records, list) or not records:
        raise ManifestError("manifest needs a non-empty 'layers' list")
    root = path.parent
    return NetworkManifest([_load_layer(r, root, wbit) for r in records], root)


# layer shapes of the built-in fixture: (name, M, C, K, S, W, H, m, density, wbit)
SYNTHETIC_LAYERS = (
    ("conv_a", 8, 3, 3, 1, 8, 8, 8, 0.35, 4),
    ("conv_b", 16, 8, 5, 2, 11, 11, 8, 0.2, 4),
    ("fc", 10, 64, 1, 1, 1, 1, 10, 0.1, 5),
)


def integer_codebook(wbit: int) -> QuantCodebook:
    """Codebook of small signed integers, so integer mode stays exact."""
    n = 1 << wbit
    half = n // 2
    levels = [v for v in range(-half + 1, half + 1) if v != 0]
    return QuantCodebook(wbit, [0.0, *levels])


def synthetic_network(seed: int = 0) -> NetworkManifest:
    """Small deterministic sparse network with integer-valued codebooks."""
    rng = np.random.default_rng(seed)
    layers = []
    for name, M, C, K, S, W, H, m, density, wbit in SYNTHETIC_LAYERS:
        spec = LayerSpec(M, C, K, S, W, H, m)
        mask = rng.random(spec.filter_shape) < density
        codes = np.where(mask, rng.integers(1, 1 << wbit, size=spec.filter_shape), 0)
        layers.append(Layer(name, spec, codes.astype(np.uint32), wbit, integer_codebook(wbit)))
    return NetworkManifest(layers)


def write_manifest(net: NetworkManifest, directory) -> Path:
    """Write every layer's weights and codebook plus a manifest; returns its path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    records = []
    for layer in net:
        rec = {k: getattr(layer.spec, k) for k in SPEC_KEYS}
        rec.update(name=layer.name, m=layer.spec.m, weights=f"{layer.name}.sfst")
        write_tensor_file(directory / rec["weights"], layer.codes, layer.wbit)
        if layer.codebook is not None:
            rec["codebook"] = f"{layer.name}.sfcb"
            write_codebook_file(directory / rec["codebook"], layer.codebook)
        if layer.bit is not None:
            rec["bit"] = layer.bit
        if layer.inputs is not None:
            rec["input"] = f"{layer.name}_in.sfst"
            write_tensor_file(directory / rec["input"], np.asarray(layer.inputs, dtype=np.float64))
        records.append(rec)
    path = directory / "manifest.json"
    path.write_text(json.dumps({"layers": records}, indent=2, sort_keys=True) + "\n")
    return path
