import json

import pytest
import torch

from model_export.arch import FaceBackbone, seeded_init
from model_export.export import (
    ArchitectureMismatch,
    ExportManifest,
    export_backbone,
    export_random_init,
)


@pytest.fixture(scope="module")
def weights_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("weights") / "weights.pt"
    torch.save(seeded_init(FaceBackbone(), 3).state_dict(), path)
    return path


def test_export_writes_graph_and_manifest(tmp_path, weights_file):
    manifest = export_backbone(weights_file, tmp_path)
    assert (tmp_path / "backbone.onnx").exists()
    doc = json.loads((tmp_path / "manifest.json").read_text())
    assert doc["channel_counts"] == [64, 128, 256, 512, 512]
    assert doc["tap_names"] == ["stage1", "stage2", "stage3", "stage4", "stage5"]
    assert doc["tap_layer_indices"] == [7, 16, 45, 52, "final"]
    assert doc["input_size"] == 224
    assert doc["graph_sha256"] == manifest.graph_sha256
    assert doc["input_mean"] == [0.5, 0.5, 0.5]


def test_reexport_is_deterministic(tmp_path, weights_file):
    m1 = export_backbone(weights_file, tmp_path / "a")
    m2 = export_backbone(weights_file, tmp_path / "b")
    assert m1.graph_sha256 == m2.graph_sha256
    assert (tmp_path / "a" / "backbone.onnx").read_bytes() == (
        tmp_path / "b" / "backbone.onnx"
    ).read_bytes()


def test_truncated_weights_rejected(tmp_path, weights_file):
    truncated = tmp_path / "truncated.pt"
    truncated.write_bytes(weights_file.read_bytes()[: 10_000])
    with pytest.raises(ArchitectureMismatch):
        export_backbone(truncated, tmp_path / "out")


def test_wrong_architecture_rejected(tmp_path):
    bogus = tmp_path / "bogus.pt"
    torch.save({"unexpected.weight": torch.zeros(3)}, bogus)
    with pytest.raises(ArchitectureMismatch):
        export_backbone(bogus, tmp_path / "out")


def test_random_init_export_saves_weights(tmp_path):
    manifest = export_random_init(9, tmp_path)
    assert (tmp_path / "weights.pt").exists()
    assert manifest.source_weights == "random-init:9"
    loaded = ExportManifest.load(tmp_path / "manifest.json")
    assert loaded.graph_sha256 == manifest.graph_sha256
    assert loaded.parity_fixture_checksum is None
