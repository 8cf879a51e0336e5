import hashlib
import json

import numpy as np
import pytest
import torch

from model_export.arch import FaceBackbone, seeded_init
from model_export.export import ExportManifest, export_random_init
from model_export.fixtures import generate_parity_fixture


@pytest.fixture(scope="module")
def exported(tmp_path_factory):
    root = tmp_path_factory.mktemp("exported")
    export_random_init(4, root)
    return root


def test_fixture_layout_and_checksum(exported, tmp_path):
    base = tmp_path / "fixture"
    index = generate_parity_fixture(
        exported / "weights.pt", base, count=4, seed=0,
        manifest_path=exported / "manifest.json",
    )
    blob = base.with_suffix(".bin").read_bytes()
    assert hashlib.sha256(blob).hexdigest() == index["checksum"]
    names = [e["name"] for e in index["entries"]]
    assert len(names) == 4 * 6  # input + 5 taps per case
    assert "case0/input" in names and "case3/stage5" in names
    manifest = ExportManifest.load(exported / "manifest.json")
    assert manifest.parity_fixture_checksum == index["checksum"]


def test_fixture_bytes_stable_across_runs(exported, tmp_path):
    a = tmp_path / "a"
    b = tmp_path / "b"
    generate_parity_fixture(exported / "weights.pt", a, count=3, seed=7)
    generate_parity_fixture(exported / "weights.pt", b, count=3, seed=7)
    assert a.with_suffix(".bin").read_bytes() == b.with_suffix(".bin").read_bytes()
    ja = json.loads(a.with_suffix(".json").read_text())
    jb = json.loads(b.with_suffix(".json").read_text())
    assert ja == jb


def test_fixture_zero_case_matches_direct_forward(exported, tmp_path):
    base = tmp_path / "fixture"
    index = generate_parity_fixture(exported / "weights.pt", base, count=2, seed=1)
    blob = base.with_suffix(".bin").read_bytes()
    entries = {e["name"]: e for e in index["entries"]}

    def read(name):
        e = entries[name]
        count = int(np.prod(e["shape"]))
        return np.frombuffer(blob, np.float32, count, e["offset"]).reshape(e["shape"])

    assert float(np.abs(read("case0/input")).max()) == 0.0
    model = FaceBackbone()
    model.load_state_dict(torch.load(exported / "weights.pt", weights_only=True))
    model.eval()
    with torch.no_grad():
        taps = model.forward_taps(
            torch.nn.functional.avg_pool2d(torch.zeros(1, 3, 224, 224), 2)
        )
    for tap_name, tensor in zip(index["tap_names"], taps):
        assert np.allclose(read(f"case0/{tap_name}"), tensor.numpy()[0], atol=1e-6)
