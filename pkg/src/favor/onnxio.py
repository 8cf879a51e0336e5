"""Self-contained ONNX model file reader/writer.

The package index in some deployment environments carries neither `onnx` nor
`onnxruntime`, so the interchange format is handled directly: this module
speaks the protobuf wire format for the subset of `ModelProto` needed to
serialize and load feed-forward convolutional graphs (opset >= 11). Field
numbers follow the public onnx.proto schema, which is frozen by protobuf
compatibility rules.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# TensorProto.DataType values.
DT_FLOAT = 1
DT_INT64 = 7
DT_DOUBLE = 11

_NP_DTYPES = {DT_FLOAT: np.float32, DT_INT64: np.int64, DT_DOUBLE: np.float64}


# ---------------------------------------------------------------------------
# wire-format primitives
# ---------------------------------------------------------------------------

def _write_varint(out: bytearray, value: int) -> None:
    if value < 0:
        value &= (1 << 64) - 1
    while True:
        byte = value & 0x7F
        value >>= 7
        if value:
            out.append(byte | 0x80)
        else:
            out.append(byte)
            return


def _read_varint(buf: bytes, pos: int) -> tuple[int, int]:
    result = 0
    shift = 0
    while True:
        if pos >= len(buf):
            raise ValueError("truncated varint")
        byte = buf[pos]
        pos += 1
        result |= (byte & 0x7F) << shift
        if not byte & 0x80:
            return result, pos
        shift += 7
        if shift > 70:
            raise ValueError("varint too long")


def _tag(out: bytearray, field_no: int, wire_type: int) -> None:
    _write_varint(out, (field_no << 3) | wire_type)


def _emit_bytes(out: bytearray, field_no: int, data: bytes) -> None:
    _tag(out, field_no, 2)
    _write_varint(out, len(data))
    out.extend(data)


def _emit_str(out: bytearray, field_no: int, text: str) -> None:
    _emit_bytes(out, field_no, text.encode("utf-8"))


def _emit_int(out: bytearray, field_no: int, value: int) -> None:
    _tag(out, field_no, 0)
    _write_varint(out, value)


def _emit_float(out: bytearray, field_no: int, value: float) -> None:
    _tag(out, field_no, 5)
    out.extend(np.float32(value).tobytes())


def _emit_packed_ints(out: bytearray, field_no: int, values) -> None:
    payload = bytearray()
    for v in values:
        _write_varint(payload, int(v))
    _emit_bytes(out, field_no, bytes(payload))


def parse_message(buf: bytes) -> dict[int, list[tuple[int, object]]]:
    """Decode one message into {field_number: [(wire_type, value), ...]}."""
    fields: dict[int, list[tuple[int, object]]] = {}
    pos = 0
    while pos < len(buf):
        key, pos = _read_varint(buf, pos)
        field_no, wire_type = key >> 3, key & 0x7
        if wire_type == 0:
            value, pos = _read_varint(buf, pos)
        elif wire_type == 1:
            value, pos = buf[pos : pos + 8], pos + 8
        elif wire_type == 2:
            length, pos = _read_varint(buf, pos)
            value, pos = buf[pos : pos + length], pos + length
            if pos > len(buf):
                raise ValueError("truncated length-delimited field")
        elif wire_type == 5:
            value, pos = buf[pos : pos + 4], pos + 4
        else:
            raise ValueError(f"unsupported wire type {wire_type}")
        fields.setdefault(field_no, []).append((wire_type, value))
    return fields


def _scalar_int(fields, field_no, default=0):
    entries = fields.get(field_no)
    return int(entries[-1][1]) if entries else default


def _scalar_bytes(fields, field_no, default=b""):
    entries = fields.get(field_no)
    return bytes(entries[-1][1]) if entries else default


def _repeated_ints(fields, field_no) -> list[int]:
    out: list[int] = []
    for wire_type, value in fields.get(field_no, []):
        if wire_type == 0:
            out.append(int(value))
        else:  # packed
            pos = 0
            while pos < len(value):
                v, pos = _read_varint(value, pos)
                out.append(v)
    return out


# ---------------------------------------------------------------------------
# model structures
# ---------------------------------------------------------------------------

@dataclass
class OnnxAttribute:
    name: str
    value: object  # int, float, bytes, list[int], list[float] or np.ndarray

    # AttributeProto.AttributeType
    FLOAT, INT, STRING, TENSOR = 1, 2, 3, 4
    FLOATS, INTS = 6, 7

    def serialize(self) -> bytes:
        out = bytearray()
        _emit_str(out, 1, self.name)
        v = self.value
        if isinstance(v, np.ndarray):
            _emit_bytes(out, 5, serialize_tensor(self.name, v))
            _emit_int(out, 20, self.TENSOR)
        elif isinstance(v, bytes):
            _emit_bytes(out, 4, v)
            _emit_int(out, 20, self.STRING)
        elif isinstance(v, float):
            _emit_float(out, 2, v)
            _emit_int(out, 20, self.FLOAT)
        elif isinstance(v, int):
            _emit_int(out, 3, v)
            _emit_int(out, 20, self.INT)
        elif isinstance(v, (list, tuple)) and v and isinstance(v[0], float):
            for item in v:
                _emit_float(out, 7, item)
            _emit_int(out, 20, self.FLOATS)
        else:
            _emit_packed_ints(out, 8, v)
            _emit_int(out, 20, self.INTS)
        return bytes(out)

    @classmethod
    def parse(cls, buf: bytes) -> "OnnxAttribute":
        fields = parse_message(buf)
        name = _scalar_bytes(fields, 1).decode("utf-8")
        atype = _scalar_int(fields, 20)
        if atype == cls.FLOAT or (atype == 0 and 2 in fields):
            value = float(np.frombuffer(fields[2][-1][1], dtype="<f4")[0])
        elif atype == cls.INT or (atype == 0 and 3 in fields):
            value = _scalar_int(fields, 3)
        elif atype == cls.STRING or (atype == 0 and 4 in fields):
            value = _scalar_bytes(fields, 4)
        elif atype == cls.TENSOR or (atype == 0 and 5 in fields):
            value = parse_tensor(_scalar_bytes(fields, 5))[1]
        elif atype == cls.FLOATS or (atype == 0 and 7 in fields):
            value = [float(np.frombuffer(raw, dtype="<f4")[0]) for _, raw in fields[7]]
        else:
            value = _repeated_ints(fields, 8)
        return cls(name, value)


@dataclass
class OnnxNode:
    op_type: str
    inputs: list[str]
    outputs: list[str]
    attrs: dict[str, object] = field(default_factory=dict)
    name: str = ""

    def serialize(self) -> bytes:
        out = bytearray()
        for inp in self.inputs:
            _emit_str(out, 1, inp)
        for outp in self.outputs:
            _emit_str(out, 2, outp)
        if self.name:
            _emit_str(out, 3, self.name)
        _emit_str(out, 4, self.op_type)
        for key in self.attrs:
            _emit_bytes(out, 5, OnnxAttribute(key, self.attrs[key]).serialize())
        return bytes(out)

    @classmethod
    def parse(cls, buf: bytes) -> "OnnxNode":
        fields = parse_message(buf)
        inputs = [v.decode("utf-8") for _, v in fields.get(1, [])]
        outputs = [v.decode("utf-8") for _, v in fields.get(2, [])]
        name = _scalar_bytes(fields, 3).decode("utf-8")
        op_type = _scalar_bytes(fields, 4).decode("utf-8")
        attrs = {}
        for _, raw in fields.get(5, []):
            attr = OnnxAttribute.parse(raw)
            attrs[attr.name] = attr.value
        return cls(op_type, inputs, outputs, attrs, name)


def serialize_tensor(name: str, array: np.ndarray) -> bytes:
    array = np.asarray(array)
    if array.dtype == np.float32:
        dtype = DT_FLOAT
    elif array.dtype == np.int64:
        dtype = DT_INT64
    elif array.dtype == np.float64:
        dtype = DT_DOUBLE
    else:
        raise ValueError(f"unsupported tensor dtype {array.dtype}")
    out = bytearray()
    _emit_packed_ints(out, 1, array.shape)
    _emit_int(out, 2, dtype)
    _emit_str(out, 8, name)
    _emit_bytes(out, 9, np.ascontiguousarray(array).tobytes())
    return bytes(out)


def parse_tensor(buf: bytes) -> tuple[str, np.ndarray]:
    fields = parse_message(buf)
    dims = _repeated_ints(fields, 1)
    dtype = _scalar_int(fields, 2, DT_FLOAT)
    name = _scalar_bytes(fields, 8).decode("utf-8")
    if dtype not in _NP_DTYPES:
        raise ValueError(f"unsupported tensor data type {dtype}")
    np_dtype = _NP_DTYPES[dtype]
    raw = fields.get(9)
    if raw is not None:
        array = np.frombuffer(raw[-1][1], dtype=np.dtype(np_dtype).newbyteorder("<"))
    elif dtype == DT_FLOAT and 4 in fields:
        floats = []
        for wire_type, value in fields[4]:
            chunk = value if wire_type == 2 else value
            floats.append(np.frombuffer(chunk, dtype="<f4"))
        array = np.concatenate(floats) if floats else np.zeros(0, np.float32)
    elif dtype == DT_INT64 and 7 in fields:
        array = np.asarray(_repeated_ints(fields, 7), dtype=np.int64)
    else:
        array = np.zeros(0, np_dtype)
    count = int(np.prod(dims)) if dims else array.size
    return name, array[:count].reshape(dims).astype(np_dtype)


def _serialize_value_info(name: str, dims) -> bytes:
    shape = bytearray()
    for d in dims:
        dim = bytearray()
        _emit_int(dim, 1, int(d))
        _emit_bytes(shape, 1, bytes(dim))
    tensor_type = bytearray()
    _emit_int(tensor_type, 1, DT_FLOAT)
    _emit_bytes(tensor_type, 2, bytes(shape))
    type_proto = bytearray()
    _emit_bytes(type_proto, 1, bytes(tensor_type))
    out = bytearray()
    _emit_str(out, 1, name)
    _emit_bytes(out, 2, bytes(type_proto))
    return bytes(out)


def _parse_value_info_name(buf: bytes) -> str:
    return _scalar_bytes(parse_message(buf), 1).decode("utf-8")


@dataclass
class OnnxModel:
    nodes: list[OnnxNode]
    initializers: dict[str, np.ndarray]
    inputs: list[str]
    outputs: list[str]
    opset: int = 11
    graph_name: str = "graph"
    producer: str = "favor"
    input_shapes: dict[str, tuple[int, ...]] = field(default_factory=dict)
    output_shapes: dict[str, tuple[int, ...]] = field(default_factory=dict)

    def serialize(self) -> bytes:
        graph = bytearray()
        for node in self.nodes:
            _emit_bytes(graph, 1, node.serialize())
        _emit_str(graph, 2, self.graph_name)
        for name in self.initializers:
            _emit_bytes(graph, 5, serialize_tensor(name, self.initializers[name]))
        for name in self.inputs:
            _emit_bytes(graph, 11, _serialize_value_info(name, self.input_shapes.get(name, ())))
        for name in self.outputs:
            _emit_bytes(graph, 12, _serialize_value_info(name, self.output_shapes.get(name, ())))

        out = bytearray()
        _emit_int(out, 1, 7)  # ir_version
        _emit_str(out, 2, self.producer)
        _emit_bytes(out, 7, bytes(graph))
        opset = bytearray()
        _emit_str(opset, 1, "")
        _emit_int(opset, 2, self.opset)
        _emit_bytes(out, 8, bytes(opset))
        return bytes(out)

    def save(self, path) -> None:
        with open(path, "wb") as fh:
            fh.write(self.serialize())

    @classmethod
    def parse(cls, buf: bytes) -> "OnnxModel":
        fields = parse_message(buf)
        if 7 not in fields:
            raise ValueError("no graph in model")
        opset = 0
        for _, raw in fields.get(8, []):
            opset_fields = parse_message(raw)
            domain = _scalar_bytes(opset_fields, 1).decode("utf-8")
            if domain in ("", "ai.onnx"):
                opset = max(opset, _scalar_int(opset_fields, 2))
        graph_fields = parse_message(fields[7][-1][1])
        nodes = [OnnxNode.parse(raw) for _, raw in graph_fields.get(1, [])]
        initializers = {}
        for _, raw in graph_fields.get(5, []):
            name, array = parse_tensor(raw)
            initializers[name] = array
        inputs = [_parse_value_info_name(raw) for _, raw in graph_fields.get(11, [])]
        outputs = [_parse_value_info_name(raw) for _, raw in graph_fields.get(12, [])]
        graph_name = _scalar_bytes(graph_fields, 2).decode("utf-8")
        return cls(nodes, initializers, inputs, outputs, opset, graph_name)

    @classmethod
    def load(cls, path) -> "OnnxModel":
        with open(path, "rb") as fh:
            return cls.parse(fh.read())
