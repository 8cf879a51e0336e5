"""Parity fixture: seeded inputs plus source-framework tap outputs.

The fixture lets any consumer of the exported graph check numerical
agreement with the originating framework. Layout: one flat binary file of
float32 tensors plus a JSON index mapping names to (offset, shape, dtype),
with a sha256 checksum of the binary blob. Case 0 is always the constant
zero input.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np
import torch
import torch.nn.functional as F

from .arch import FaceBackbone, load_weights
from .export import ExportFailure, ExportManifest
from .onnx_writer import INPUT_SIZE, TAP_NAMES


def _tap_forward(model: FaceBackbone, batch: torch.Tensor):
    # same entry downscale the exported graph applies
    return model.forward_taps(F.avg_pool2d(batch, 2))


def generate_parity_fixture(
    weights_path, out_base, count: int = 4, seed: int = 0, manifest_path=None
) -> dict:
    """Write `<out_base>.bin` and `<out_base>.json`; returns the index."""
    if count < 1:
        raise ExportFailure("fixture needs at least one case")
    model = load_weights(FaceBackbone(), weights_path).eval()

    rng = np.random.default_rng(seed)
    inputs = [np.zeros((3, INPUT_SIZE, INPUT_SIZE), np.float32)]
    for _ in range(count - 1):
        inputs.append(
            rng.uniform(-1.0, 1.0, (3, INPUT_SIZE, INPUT_SIZE)).astype(np.float32)
        )

    blob = bytearray()
    entries = []

    def put(name: str, array: np.ndarray) -> None:
        array = np.ascontiguousarray(array, np.float32)
        entries.append(
            {
                "name": name,
                "offset": len(blob),
                "shape": list(array.shape),
                "dtype": "float32",
            }
        )
        blob.extend(array.tobytes())

    with torch.no_grad():
        for case, data in enumerate(inputs):
            put(f"case{case}/input", data)
            taps = _tap_forward(model, torch.from_numpy(data[None]))
            for tap_name, tensor in zip(TAP_NAMES, taps):
                put(f"case{case}/{tap_name}", tensor.numpy()[0])

    out_base = Path(out_base)
    out_base.parent.mkdir(parents=True, exist_ok=True)
    checksum = hashlib.sha256(bytes(blob)).hexdigest()
    index = {
        "cases": count,
        "seed": seed,
        "tap_names": list(TAP_NAMES),
        "checksum": checksum,
        "entries": entries,
    }
    out_base.with_suffix(".bin").write_bytes(bytes(blob))
    out_base.with_suffix(".json").write_text(json.dumps(index, indent=2) + "\n")

    if manifest_path is not None:
        manifest = ExportManifest.load(manifest_path)
        manifest.parity_fixture_checksum = checksum
        manifest.save(manifest_path)
    return index
