"""Minimal ONNX (protobuf) writer and graph builder for the face backbone.

The deployment mirror carries no `onnx` package and torch refuses to export
without it, so the ModelProto wire format is emitted directly. Field
numbers follow the public onnx.proto schema; only the writing direction is
needed here. The graph prepends a 2x2 average pool so 224x224 inputs reach
the backbone at its native 112x112 resolution, and exposes five outputs:
the four stage tensors plus the final embedding.
"""

from __future__ import annotations

import numpy as np
import torch.nn as nn

from .arch import EMBEDDING_DIM, FaceBackbone, STAGE_PLANES

INPUT_NAME = "input"
INPUT_SIZE = 224
TAP_NAMES = ("stage1", "stage2", "stage3", "stage4", "stage5")
CHANNEL_COUNTS = tuple(STAGE_PLANES) + (EMBEDDING_DIM,)
OPSET = 11

_FLOAT, _INT64 = 1, 7
_AT_FLOAT, _AT_INT, _AT_INTS = 1, 2, 7


def _varint(value: int) -> bytes:
    out = bytearray()
    while True:
        byte = value & 0x7F
        value >>= 7
        if value:
            out.append(byte | 0x80)
        else:
            out.append(byte)
            return bytes(out)


def _key(field: int, wire: int) -> bytes:
    return _varint((field << 3) | wire)


def _bytes_field(field: int, data: bytes) -> bytes:
    return _key(field, 2) + _varint(len(data)) + data


def _str_field(field: int, text: str) -> bytes:
    return _bytes_field(field, text.encode("utf-8"))


def _int_field(field: int, value: int) -> bytes:
    return _key(field, 0) + _varint(value)


def _packed_ints(field: int, values) -> bytes:
    payload = b"".join(_varint(int(v)) for v in values)
    return _bytes_field(field, payload)


def tensor_proto(name: str, array: np.ndarray) -> bytes:
    array = np.ascontiguousarray(array)
    dtype = _FLOAT if array.dtype == np.float32 else _INT64
    if array.dtype not in (np.float32, np.int64):
        raise ValueError(f"unsupported dtype {array.dtype}")
    body = _packed_ints(1, array.shape)
    body += _int_field(2, dtype)
    body += _str_field(8, name)
    body += _bytes_field(9, array.tobytes())
    return body


def _attribute(name: str, value) -> bytes:
    body = _str_field(1, name)
    if isinstance(value, float):
        body += _key(2, 5) + np.float32(value).tobytes()
        body += _int_field(20, _AT_FLOAT)
    elif isinstance(value, int):
        body += _int_field(3, value)
        body += _int_field(20, _AT_INT)
    else:
        body += _packed_ints(8, value)
        body += _int_field(20, _AT_INTS)
    return body


def node_proto(op_type: str, inputs, outputs, name: str = "", **attrs) -> bytes:
    body = b"".join(_str_field(1, i) for i in inputs)
    body += b"".join(_str_field(2, o) for o in outputs)
    if name:
        body += _str_field(3, name)
    body += _str_field(4, op_type)
    for key in attrs:
        body += _bytes_field(5, _attribute(key, attrs[key]))
    return body


def _value_info(name: str, dims) -> bytes:
    shape = b"".join(_bytes_field(1, _int_field(1, d)) for d in dims)
    tensor_type = _int_field(1, _FLOAT) + _bytes_field(2, shape)
    return _str_field(1, name) + _bytes_field(2, _bytes_field(1, tensor_type))


def model_proto(nodes, initializers, inputs, outputs, graph_name: str) -> bytes:
    graph = b"".join(_bytes_field(1, n) for n in nodes)
    graph += _str_field(2, graph_name)
    graph += b"".join(
        _bytes_field(5, tensor_proto(name, arr)) for name, arr in initializers
    )
    graph += b"".join(_bytes_field(11, _value_info(n, d)) for n, d in inputs)
    graph += b"".join(_bytes_field(12, _value_info(n, d)) for n, d in outputs)

    model = _int_field(1, 7)  # ir_version
    model += _str_field(2, "model-export")
    model += _bytes_field(7, graph)
    model += _bytes_field(8, _str_field(1, "") + _int_field(2, OPSET))
    return model


# ---------------------------------------------------------------------------
# backbone graph assembly
# ---------------------------------------------------------------------------

class _GraphBuilder:
    def __init__(self):
        self.nodes = []
        self.initializers = []

    def init(self, name: str, array) -> str:
        self.initializers.append((name, np.asarray(array.detach().numpy(), np.float32)))
        return name

    def conv(self, prefix: str, module: nn.Conv2d, src: str) -> str:
        out = f"{prefix}_out"
        weight = self.init(f"{prefix}.weight", module.weight)
        self.nodes.append(
            node_proto(
                "Conv",
                [src, weight],
                [out],
                name=prefix,
                kernel_shape=list(module.kernel_size),
                strides=list(module.stride),
                pads=[module.padding[0], module.padding[1]] * 2,
            )
        )
        return out

    def bn(self, prefix: str, module, src: str) -> str:
        out = f"{prefix}_out"
        params = [
            self.init(f"{prefix}.weight", module.weight),
            self.init(f"{prefix}.bias", module.bias),
            self.init(f"{prefix}.running_mean", module.running_mean),
            self.init(f"{prefix}.running_var", module.running_var),
        ]
        self.nodes.append(
            node_proto(
                "BatchNormalization",
                [src] + params,
                [out],
                name=prefix,
                epsilon=float(module.eps),
            )
        )
        return out

    def prelu(self, prefix: str, module: nn.PReLU, src: str) -> str:
        out = f"{prefix}_out"
        slope = self.init(
            f"{prefix}.weight", module.weight.reshape(module.num_parameters, 1, 1)
        )
        self.nodes.append(node_proto("PRelu", [src, slope], [out], name=prefix))
        return out

    def block(self, prefix: str, module, src: str, out_name: str | None = None) -> str:
        x = self.bn(f"{prefix}.bn1", module.bn1, src)
        x = self.conv(f"{prefix}.conv1", module.conv1, x)
        x = self.bn(f"{prefix}.bn2", module.bn2, x)
        x = self.prelu(f"{prefix}.prelu", module.prelu, x)
        x = self.conv(f"{prefix}.conv2", module.conv2, x)
        x = self.bn(f"{prefix}.bn3", module.bn3, x)
        identity = src
        if module.downsample is not None:
            identity = self.conv(f"{prefix}.downsample.0", module.downsample[0], src)
            identity = self.bn(f"{prefix}.downsample.1", module.downsample[1], identity)
        out = out_name or f"{prefix}_sum"
        self.nodes.append(node_proto("Add", [x, identity], [out], name=f"{prefix}.add"))
        return out


def build_model_bytes(model: FaceBackbone) -> bytes:
    model = model.eval()
    g = _GraphBuilder()

    g.nodes.append(
        node_proto(
            "AveragePool",
            [INPUT_NAME],
            ["entry_pool_out"],
            name="entry_pool",
            kernel_shape=[2, 2],
            strides=[2, 2],
        )
    )
    x = g.conv("conv1", model.conv1, "entry_pool_out")
    x = g.bn("bn1", model.bn1, x)
    x = g.prelu("prelu", model.prelu, x)

    for stage_idx, layer in enumerate(
        (model.layer1, model.layer2, model.layer3, model.layer4), start=1
    ):
        blocks = list(layer)
        for block_idx, block in enumerate(blocks):
            out_name = (
                TAP_NAMES[stage_idx - 1] if block_idx == len(blocks) - 1 else None
            )
            x = g.block(f"layer{stage_idx}.{block_idx}", block, x, out_name)

    x = g.bn("bn2", model.bn2, x)
    g.nodes.append(node_proto("Flatten", [x], ["flatten_out"], name="flatten", axis=1))
    fc_w = g.init("fc.weight", model.fc.weight)
    fc_b = g.init("fc.bias", model.fc.bias)
    g.nodes.append(
        node_proto(
            "Gemm",
            ["flatten_out", fc_w, fc_b],
            ["fc_out"],
            name="fc",
            alpha=1.0,
            beta=1.0,
            transB=1,
        )
    )
    # final embedding norm emits the fifth tap
    params = [
        g.init("features.weight", model.features.weight),
        g.init("features.bias", model.features.bias),
        g.init("features.running_mean", model.features.running_mean),
        g.init("features.running_var", model.features.running_var),
    ]
    g.nodes.append(
        node_proto(
            "BatchNormalization",
            ["fc_out"] + params,
            [TAP_NAMES[4]],
            name="features",
            epsilon=float(model.features.eps),
        )
    )

    half = INPUT_SIZE // 2
    output_shapes = [
        (TAP_NAMES[0], (1, STAGE_PLANES[0], half // 2, half // 2)),
        (TAP_NAMES[1], (1, STAGE_PLANES[1], half // 4, half // 4)),
        (TAP_NAMES[2], (1, STAGE_PLANES[2], half // 8, half // 8)),
        (TAP_NAMES[3], (1, STAGE_PLANES[3], half // 16, half // 16)),
        (TAP_NAMES[4], (1, EMBEDDING_DIM)),
    ]
    return model_proto(
        g.nodes,
        g.initializers,
        inputs=[(INPUT_NAME, (1, 3, INPUT_SIZE, INPUT_SIZE))],
        outputs=output_shapes,
        graph_name="face_backbone",
    )
