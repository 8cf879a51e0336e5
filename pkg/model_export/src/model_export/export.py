"""One-shot backbone export: weights in, ONNX graph + manifest out.

The manifest JSON doubles as the scoring runtime's backend sidecar (it
carries graph_path/tap_names/channel_counts/input_mean/input_std) and
additionally records provenance: which convolution indices the taps
correspond to, under which counting convention, and checksums for the graph
and the parity fixture.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import torch

from .arch import FaceBackbone, load_weights, seeded_init, stage_final_conv_indices
from .onnx_writer import CHANNEL_COUNTS, INPUT_SIZE, OPSET, TAP_NAMES, build_model_bytes

GRAPH_FILENAME = "backbone.onnx"
MANIFEST_FILENAME = "manifest.json"
INPUT_MEAN = (0.5, 0.5, 0.5)
INPUT_STD = (0.5, 0.5, 0.5)

TAP_CONVENTION = (
    "convolutions counted in forward order within the four residual stages "
    "(projection shortcuts included, stem conv excluded); each tap is the "
    "post-residual stage output, plus the final embedding after its batch norm"
)


class ExportError(Exception):
    pass


class ArchitectureMismatch(ExportError):
    pass


class ExportFailure(ExportError):
    pass


@dataclass
class ExportManifest:
    graph_path: str
    tap_names: list
    channel_counts: list
    input_mean: list
    input_std: list
    source_weights: str
    tap_layer_indices: list
    tap_convention: str
    input_size: int
    native_input_size: int
    opset: int
    graph_sha256: str
    parity_fixture_checksum: str | None = None

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(asdict(self), indent=2) + "\n")

    @classmethod
    def load(cls, path) -> "ExportManifest":
        doc = json.loads(Path(path).read_text())
        return cls(**{k: doc.get(k) for k in cls.__dataclass_fields__})


def _build_model(weights_path=None, seed: int | None = None) -> FaceBackbone:
    model = FaceBackbone()
    if weights_path is not None:
        load_weights(model, weights_path)
        source = str(weights_path)
    else:
        seeded_init(model, 0 if seed is None else seed)
        source = f"random-init:{0 if seed is None else seed}"
    model.eval()
    model._source = source
    return model


def export_backbone(weights_path, out_dir) -> ExportManifest:
    """Serialize the backbone at `weights_path` into `out_dir`."""
    return _export(_build_model(weights_path=weights_path), out_dir)


def export_random_init(seed: int, out_dir) -> ExportManifest:
    """Export a deterministic random-init backbone (tests, fixtures).

    Also saves the generated state dict as weights.pt so the parity fixture
    can be produced from the same parameters.
    """
    model = _build_model(seed=seed)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    torch.save(model.state_dict(), out_dir / "weights.pt")
    return _export(model, out_dir)


def _export(model: FaceBackbone, out_dir) -> ExportManifest:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        blob = build_model_bytes(model)
    except Exception as exc:
        raise ExportFailure(f"graph serialization failed: {exc}") from exc
    graph_path = out_dir / GRAPH_FILENAME
    graph_path.write_bytes(blob)

    manifest = ExportManifest(
        graph_path=GRAPH_FILENAME,
        tap_names=list(TAP_NAMES),
        channel_counts=list(CHANNEL_COUNTS),
        input_mean=list(INPUT_MEAN),
        input_std=list(INPUT_STD),
        source_weights=getattr(model, "_source", "unknown"),
        tap_layer_indices=stage_final_conv_indices(model) + ["final"],
        tap_convention=TAP_CONVENTION,
        input_size=INPUT_SIZE,
        native_input_size=112,
        opset=OPSET,
        graph_sha256=hashlib.sha256(blob).hexdigest(),
    )
    manifest.save(out_dir / MANIFEST_FILENAME)
    return manifest
