"""Feature extraction backends.

A backend turns one normalized 3x224x224 input into a 5-stage feature
pyramid with 64/128/256/512/512 channels. Two implementations exist: a
deterministic seeded analytic pyramid (no external files, used for tests and
self-checks), and an ONNX-graph backend that executes an exported
face-recognition backbone on the CPU.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ChannelMismatch, GraphLoadError, InferenceFailure, MissingTap
from .ingest import INPUT_SIZE, InputTensor
from .onnxio import OnnxModel, OnnxNode

STAGE_COUNT = 5
DEFAULT_CHANNELS = (64, 128, 256, 512, 512)
DEFAULT_INPUT_MEAN = (0.5, 0.5, 0.5)
DEFAULT_INPUT_STD = (0.5, 0.5, 0.5)


@dataclass
class FeaturePyramid:
    """Per-frame multi-stage feature maps, each stage (C, H, W)."""

    stages: list

    def __post_init__(self):
        if len(self.stages) != STAGE_COUNT:
            raise ValueError(f"expected {STAGE_COUNT} stages, got {len(self.stages)}")
        self.stages = [np.asarray(s) for s in self.stages]
        for s in self.stages:
            if s.ndim != 3:
                raise ValueError("each stage must be (C, H, W)")

    @property
    def channel_counts(self) -> tuple[int, ...]:
        return tuple(s.shape[0] for s in self.stages)


@dataclass
class BackendConfig:
    """Sidecar description of a serialized backbone graph."""

    graph_path: str
    tap_names: tuple
    channel_counts: tuple = DEFAULT_CHANNELS
    input_mean: tuple = DEFAULT_INPUT_MEAN
    input_std: tuple = DEFAULT_INPUT_STD

    def __post_init__(self):
        self.tap_names = tuple(self.tap_names)
        self.channel_counts = tuple(int(c) for c in self.channel_counts)
        if len(self.tap_names) != STAGE_COUNT:
            raise ValueError(f"need {STAGE_COUNT} tap names")
        if len(set(self.tap_names)) != STAGE_COUNT:
            raise ValueError("tap names must be distinct")
        if len(self.channel_counts) != STAGE_COUNT or any(
            c <= 0 for c in self.channel_counts
        ):
            raise ValueError("channel counts must be five positive integers")

    @classmethod
    def from_json(cls, path) -> "BackendConfig":
        path = Path(path)
        with open(path) as fh:
            doc = json.load(fh)
        graph = Path(doc["graph_path"])
        if not graph.is_absolute():
            graph = path.parent / graph
        return cls(
            graph_path=str(graph),
            tap_names=doc["tap_names"],
            channel_counts=doc.get("channel_counts", DEFAULT_CHANNELS),
            input_mean=tuple(doc.get("input_mean", DEFAULT_INPUT_MEAN)),
            input_std=tuple(doc.get("input_std", DEFAULT_INPUT_STD)),
        )


# ---------------------------------------------------------------------------
# ONNX graph execution
# ---------------------------------------------------------------------------

def _pad2d(x, pads):
    pt, pl, pb, pr = pads
    if not any(pads):
        return x
    return np.pad(x, ((0, 0), (0, 0), (pt, pb), (pl, pr)))


def _pool_slices(x, kernel, strides, pads):
    """Yield the (kh*kw) strided views of a padded NCHW tensor."""
    kh, kw = kernel
    sh, sw = strides
    xp = _pad2d(x, pads)
    out_h = (xp.shape[2] - kh) // sh + 1
    out_w = (xp.shape[3] - kw) // sw + 1
    for i in range(kh):
        for j in range(kw):
            yield xp[:, :, i : i + sh * out_h : sh, j : j + sw * out_w : sw]


def _op_conv(node, vals):
    x, w = vals[node.inputs[0]], vals[node.inputs[1]]
    b = vals[node.inputs[2]] if len(node.inputs) > 2 else None
    attrs = node.attrs
    if attrs.get("group", 1) != 1 or set(attrs.get("dilations", [1, 1])) != {1}:
        raise InferenceFailure(f"Conv node {node.name!r}: unsupported group/dilation")
    strides = tuple(attrs.get("strides", [1, 1]))
    pads = tuple(attrs.get("pads", [0, 0, 0, 0]))
    kh, kw = w.shape[2], w.shape[3]
    acc = None
    for (i, j), xs in zip(
        ((i, j) for i in range(kh) for j in range(kw)),
        _pool_slices(x, (kh, kw), strides, pads),
    ):
        term = np.einsum("oc,nchw->nohw", w[:, :, i, j], xs, optimize=True)
        acc = term if acc is None else acc + term
    if b is not None:
        acc = acc + b.reshape(1, -1, 1, 1)
    return acc


def _op_batchnorm(node, vals):
    x, scale, bias, mean, var = (vals[name] for name in node.inputs[:5])
    eps = node.attrs.get("epsilon", 1e-5)
    shape = (1, -1) + (1,) * (x.ndim - 2)
    inv = scale.reshape(shape) / np.sqrt(var.reshape(shape) + eps)
    return x * inv + (bias.reshape(shape) - mean.reshape(shape) * inv)


def _op_prelu(node, vals):
    x, slope = vals[node.inputs[0]], vals[node.inputs[1]]
    if slope.ndim == 1 and x.ndim > 1:
        slope = slope.reshape((1, -1) + (1,) * (x.ndim - 2))
    return np.where(x >= 0, x, slope * x)


def _op_avgpool(node, vals):
    x = vals[node.inputs[0]]
    kernel = tuple(node.attrs["kernel_shape"])
    strides = tuple(node.attrs.get("strides", kernel))
    pads = tuple(node.attrs.get("pads", [0, 0, 0, 0]))
    acc = None
    for xs in _pool_slices(x, kernel, strides, pads):
        acc = xs.copy() if acc is None else acc + xs
    return acc / (kernel[0] * kernel[1])


def _op_maxpool(node, vals):
    x = vals[node.inputs[0]]
    kernel = tuple(node.attrs["kernel_shape"])
    strides = tuple(node.attrs.get("strides", kernel))
    pads = tuple(node.attrs.get("pads", [0, 0, 0, 0]))
    acc = None
    for xs in _pool_slices(x, kernel, strides, pads):
        acc = xs.copy() if acc is None else np.maximum(acc, xs)
    return acc


def _op_gemm(node, vals):
    a, b = vals[node.inputs[0]], vals[node.inputs[1]]
    attrs = node.attrs
    if attrs.get("transA", 0):
        a = a.T
    if attrs.get("transB", 0):
        b = b.T
    y = attrs.get("alpha", 1.0) * (a @ b)
    if len(node.inputs) > 2:
        y = y + attrs.get("beta", 1.0) * vals[node.inputs[2]]
    return y


def _op_flatten(node, vals):
    x = vals[node.inputs[0]]
    axis = node.attrs.get("axis", 1)
    lead = int(np.prod(x.shape[:axis])) if axis else 1
    return x.reshape(lead, -1)


def _op_reshape(node, vals):
    x, shape = vals[node.inputs[0]], vals[node.inputs[1]]
    dims = [x.shape[i] if d == 0 else int(d) for i, d in enumerate(shape)]
    return x.reshape(dims)


_OPS = {
    "Conv": _op_conv,
    "BatchNormalization": _op_batchnorm,
    "PRelu": _op_prelu,
    "AveragePool": _op_avgpool,
    "MaxPool": _op_maxpool,
    "GlobalAveragePool": lambda node, vals: vals[node.inputs[0]].mean(
        axis=(2, 3), keepdims=True
    ),
    "Gemm": _op_gemm,
    "MatMul": lambda node, vals: vals[node.inputs[0]] @ vals[node.inputs[1]],
    "Flatten": _op_flatten,
    "Reshape": _op_reshape,
    "Add": lambda node, vals: vals[node.inputs[0]] + vals[node.inputs[1]],
    "Relu": lambda node, vals: np.maximum(vals[node.inputs[0]], 0),
    "Tanh": lambda node, vals: np.tanh(vals[node.inputs[0]]),
    "Identity": lambda node, vals: vals[node.inputs[0]],
    "Dropout": lambda node, vals: vals[node.inputs[0]],
}


def run_graph(model: OnnxModel, feeds: dict, fetch: tuple) -> dict:
    """Execute nodes in file order (ONNX requires topological order)."""
    vals = dict(model.initializers)
    vals.update(feeds)
    wanted = set(fetch)
    results = {}
    for node in model.nodes:
        op = _OPS.get(node.op_type)
        if op is None:
            raise InferenceFailure(f"unsupported op {node.op_type!r}")
        try:
            out = op(node, vals)
        except InferenceFailure:
            raise
        except Exception as exc:
            raise InferenceFailure(f"{node.op_type} node failed: {exc}") from exc
        vals[node.outputs[0]] = out
        if node.outputs[0] in wanted:
            results[node.outputs[0]] = out
    for name in fetch:
        if name not in results:
            if name in vals:
                results[name] = vals[name]
            else:
                raise MissingTap(name)
    return results


# ---------------------------------------------------------------------------
# backends
# ---------------------------------------------------------------------------

class AnalyticBackend:
    """Seeded 5-stage strided-convolution pyramid, no external files.

    Each stage is a 2x2/stride-2 convolution (no padding) followed by tanh,
    so spatial size exactly halves: 224 -> 112/56/28/14/7. The last stage is
    mean-pooled to 1x1, mirroring an embedding-style final output.
    """

    def __init__(self, seed: int = 0):
        self.seed = int(seed)
        self.channel_counts = DEFAULT_CHANNELS
        self.input_mean = DEFAULT_INPUT_MEAN
        self.input_std = DEFAULT_INPUT_STD
        rng = np.random.default_rng(self.seed)
        self.layers = []
        c_in = 3
        for c_out in self.channel_counts:
            w = rng.normal(0.0, 1.0 / np.sqrt(4.0 * c_in), size=(c_out, c_in, 2, 2))
            b = rng.normal(0.0, 0.1, size=c_out)
            self.layers.append((w.astype(np.float32), b.astype(np.float32)))
            c_in = c_out
        self.stage_conv_sizes = tuple(
            INPUT_SIZE // 2 ** (i + 1) for i in range(STAGE_COUNT)
        )

    def extract(self, data: np.ndarray) -> list:
        cur = np.asarray(data, dtype=np.float32)
        stages = []
        for i, (w, b) in enumerate(self.layers):
            c, h, ww = cur.shape
            patches = cur.reshape(c, h // 2, 2, ww // 2, 2)
            out = np.einsum("ocij,chiwj->ohw", w, patches, optimize=True)
            cur = np.tanh(out + b[:, None, None])
            if i == STAGE_COUNT - 1:
                stages.append(cur.mean(axis=(1, 2), keepdims=True))
            else:
                stages.append(cur)
        return stages


class OnnxBackend:
    """Runs an exported backbone graph and gathers the five tap tensors."""

    def __init__(self, model: OnnxModel, config: BackendConfig):
        self.model = model
        self.config = config
        self.channel_counts = config.channel_counts
        self.input_mean = config.input_mean
        self.input_std = config.input_std
        if not model.inputs:
            raise GraphLoadError("graph declares no inputs")
        self.input_name = model.inputs[0]

        produced = set(model.initializers) | set(model.inputs)
        for node in model.nodes:
            produced.update(node.outputs)
        for tap in config.tap_names:
            if tap not in produced:
                raise MissingTap(tap)

        # One validation pass pins down actual channel counts.
        probe = np.zeros((1, 3, INPUT_SIZE, INPUT_SIZE), dtype=np.float32)
        outs = run_graph(model, {self.input_name: probe}, config.tap_names)
        for i, tap in enumerate(config.tap_names):
            found = outs[tap].shape[1] if outs[tap].ndim > 1 else outs[tap].shape[0]
            if found != config.channel_counts[i]:
                raise ChannelMismatch(i + 1, config.channel_counts[i], found)

    def extract(self, data: np.ndarray) -> list:
        feed = np.asarray(data, dtype=np.float32)[None]
        outs = run_graph(self.model, {self.input_name: feed}, self.config.tap_names)
        stages = []
        for tap in self.config.tap_names:
            arr = np.asarray(outs[tap], dtype=np.float32)
            if arr.ndim == 4:
                arr = arr[0]
            elif arr.ndim == 2:
                arr = arr.reshape(arr.shape[1], 1, 1)
            elif arr.ndim == 1:
                arr = arr.reshape(-1, 1, 1)
            stages.append(arr)
        return stages


def analytic_backend(seed: int = 0) -> AnalyticBackend:
    return AnalyticBackend(seed)


def load_backend(config: BackendConfig) -> OnnxBackend:
    try:
        model = OnnxModel.load(config.graph_path)
    except (OSError, ValueError) as exc:
        raise GraphLoadError(f"{config.graph_path}: {exc}") from exc
    return OnnxBackend(model, config)


def extract_features(backend, tensor: InputTensor) -> FeaturePyramid:
    stages = backend.extract(tensor.data)
    pyramid = FeaturePyramid(stages)
    if pyramid.channel_counts != tuple(backend.channel_counts):
        raise InferenceFailure(
            f"stage channels {pyramid.channel_counts} do not match backend "
            f"{tuple(backend.channel_counts)}"
        )
    for i, stage in enumerate(pyramid.stages):
        if not np.all(np.isfinite(stage)):
            raise InferenceFailure(f"non-finite values in stage {i + 1}")
    return pyramid


def analytic_to_onnx(backend: AnalyticBackend) -> OnnxModel:
    """Serialize the analytic pyramid as an equivalent ONNX graph.

    Used to exercise the graph-execution path against the native one.
    """
    nodes = []
    initializers = {}
    prev = "input"
    taps = []
    for i, (w, b) in enumerate(backend.layers):
        sid = i + 1
        initializers[f"w{sid}"] = w
        initializers[f"b{sid}"] = b
        nodes.append(
            OnnxNode(
                "Conv",
                [prev, f"w{sid}", f"b{sid}"],
                [f"conv{sid}"],
                {"kernel_shape": [2, 2], "strides": [2, 2], "pads": [0, 0, 0, 0]},
            )
        )
        act = f"stage{sid}" if sid < STAGE_COUNT else f"act{sid}"
        nodes.append(OnnxNode("Tanh", [f"conv{sid}"], [act]))
        prev = act
    nodes.append(OnnxNode("GlobalAveragePool", [prev], [f"stage{STAGE_COUNT}"]))
    taps = [f"stage{i + 1}" for i in range(STAGE_COUNT)]
    return OnnxModel(
        nodes=nodes,
        initializers=initializers,
        inputs=["input"],
        outputs=taps,
        opset=11,
        graph_name="analytic_pyramid",
        input_shapes={"input": (1, 3, INPUT_SIZE, INPUT_SIZE)},
    )


def save_analytic_onnx(seed: int, graph_path, config_path=None) -> BackendConfig:
    """Write the analytic pyramid as graph + JSON sidecar; returns the config."""
    backend = AnalyticBackend(seed)
    model = analytic_to_onnx(backend)
    model.save(graph_path)
    config = BackendConfig(
        graph_path=str(graph_path),
        tap_names=tuple(f"stage{i + 1}" for i in range(STAGE_COUNT)),
        channel_counts=backend.channel_counts,
        input_mean=backend.input_mean,
        input_std=backend.input_std,
    )
    if config_path is not None:
        doc = {
            "graph_path": str(Path(graph_path).name),
            "tap_names": list(config.tap_names),
            "channel_counts": list(config.channel_counts),
            "input_mean": list(config.input_mean),
            "input_std": list(config.input_std),
        }
        with open(config_path, "w") as fh:
            json.dump(doc, fh, indent=2)
    return config
