"""Cross-runtime parity: replay the exporter's fixture through this runtime.

The export utility lives in a separate package (model_export) and talks to
this one only through files: the ONNX graph, its JSON sidecar, and a fixture
of inputs with source-framework stage outputs. Skipped when that package or
torch is unavailable.
"""

import hashlib
import importlib.util
import json
import subprocess
import sys

import numpy as np
import pytest

from favor.backend import BackendConfig, extract_features, load_backend
from favor.ingest import InputTensor

EXPECTED_CHANNELS = (64, 128, 256, 512, 512)

_have_secondary = (
    importlib.util.find_spec("model_export") is not None
    and importlib.util.find_spec("torch") is not None
)

pytestmark = pytest.mark.skipif(
    not _have_secondary, reason="model_export package (and torch) not installed"
)


@pytest.fixture(scope="module")
def exported(tmp_path_factory):
    root = tmp_path_factory.mktemp("export")
    run = [sys.executable, "-m", "model_export.cli"]
    proc = subprocess.run(
        run + ["export", "--random-init", "7", "--out", str(root)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    proc = subprocess.run(
        run
        + [
            "fixture",
            "--weights", str(root / "weights.pt"),
            "--manifest", str(root / "manifest.json"),
            "--out", str(root / "fixture"),
            "--count", "4",
            "--seed", "0",
        ],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    return root


def _load_fixture(root):
    """Read <root>/fixture.json + fixture.bin (the exporter's flat layout)."""
    index = json.loads((root / "fixture.json").read_text())
    blob = (root / "fixture.bin").read_bytes()
    assert hashlib.sha256(blob).hexdigest() == index["checksum"]
    tensors = {}
    for entry in index["entries"]:
        count = int(np.prod(entry["shape"]))
        arr = np.frombuffer(
            blob, dtype=entry["dtype"], count=count, offset=entry["offset"]
        ).reshape(entry["shape"])
        tensors[entry["name"]] = arr
    return index, tensors


def test_manifest_channel_counts(exported):
    manifest = json.loads((exported / "manifest.json").read_text())
    assert tuple(manifest["channel_counts"]) == EXPECTED_CHANNELS
    assert len(manifest["tap_names"]) == 5


def test_fixture_replay_parity(exported):
    config = BackendConfig.from_json(exported / "manifest.json")
    handle = load_backend(config)
    index, tensors = _load_fixture(exported)
    cases = index["cases"]
    assert cases >= 4
    worst = 0.0
    for case in range(cases):
        tensor = InputTensor(tensors[f"case{case}/input"])
        pyramid = extract_features(handle, tensor)
        for stage in range(5):
            want = tensors[f"case{case}/stage{stage + 1}"]
            got = pyramid.stages[stage].reshape(want.shape)
            worst = max(worst, float(np.abs(got.astype(np.float64) - want.astype(np.float64)).max()))
    assert worst < 1e-4, f"max abs deviation {worst:.2e}"
    print(f"\nACCEPTANCE export parity (max abs deviation {worst:.2e}): PASS")


def test_fixture_includes_zero_input(exported):
    _, tensors = _load_fixture(exported)
    names = [k for k in tensors if k.endswith("/input")]
    assert any(float(np.abs(tensors[n]).max()) == 0.0 for n in names)
