"""Video ingestion and frame preprocessing.

Decodes Y4M files (C420*/C444) and PNG frame directories into aligned RGB
sequences, and turns individual frames into normalized network input tensors.
Y4M chroma is assumed BT.601 limited range when the header does not say
otherwise.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import (
    DegenerateFrame,
    EmptySequence,
    UnreadableFile,
    UnsupportedColorFormat,
)

INPUT_SIZE = 224
MIN_FRAME_DIM = 32

# BT.601 luma coefficients.
_KR, _KG, _KB = 0.299, 0.587, 0.114

_Y4M_MAGIC = b"YUV4MPEG2"
_C420_TAGS = {"420", "420jpeg", "420mpeg2", "420paldv"}


@dataclass
class FrameSequence:
    """Ordered RGB frames of one video, uint8, identical dimensions."""

    frames: np.ndarray  # (L, H, W, 3) uint8
    source_id: str = ""

    def __post_init__(self):
        self.frames = np.asarray(self.frames)
        if self.frames.ndim != 4 or self.frames.shape[-1] != 3:
            raise ValueError("frames must be (L, H, W, 3)")
        if self.frames.shape[0] < 1:
            raise EmptySequence("sequence has no frames")
        if self.frames.dtype != np.uint8:
            raise ValueError("frames must be uint8")

    @property
    def frame_count(self) -> int:
        return self.frames.shape[0]

    @property
    def height(self) -> int:
        return self.frames.shape[1]

    @property
    def width(self) -> int:
        return self.frames.shape[2]

    def __len__(self) -> int:
        return self.frame_count


@dataclass
class InputTensor:
    """Normalized 3x224x224 float32 network input."""

    data: np.ndarray
    origin_frame_index: int = 0

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float32)
        if self.data.shape != (3, INPUT_SIZE, INPUT_SIZE):
            raise ValueError(f"input tensor must be 3x{INPUT_SIZE}x{INPUT_SIZE}")
        if not np.all(np.isfinite(self.data)):
            raise ValueError("input tensor contains non-finite values")


def ycbcr_to_rgb_bt601(y: np.ndarray, cb: np.ndarray, cr: np.ndarray) -> np.ndarray:
    """Limited-range BT.601 YCbCr planes -> uint8 RGB image."""
    yf = (y.astype(np.float64) - 16.0) / 219.0
    pb = (cb.astype(np.float64) - 128.0) / 224.0
    pr = (cr.astype(np.float64) - 128.0) / 224.0
    r = yf + 2.0 * (1.0 - _KR) * pr
    b = yf + 2.0 * (1.0 - _KB) * pb
    g = (yf - _KR * r - _KB * b) / _KG
    rgb = np.stack([r, g, b], axis=-1) * 255.0
    return np.clip(np.rint(rgb), 0, 255).astype(np.uint8)


def _upsample_chroma(plane: np.ndarray, height: int, width: int) -> np.ndarray:
    """Replicate subsampled chroma up to the luma grid (4:4:4)."""
    ry = height // plane.shape[0]
    rx = width // plane.shape[1]
    return np.repeat(np.repeat(plane, ry, axis=0), rx, axis=1)


def _parse_y4m_header(line: bytes, path) -> tuple[int, int, str]:
    fields = line.decode("ascii", "replace").split()
    if not fields or fields[0] != _Y4M_MAGIC.decode():
        raise UnreadableFile(f"{path}: not a YUV4MPEG2 stream")
    width = height = 0
    colorspace = "420"
    for tok in fields[1:]:
        if tok.startswith("W"):
            width = int(tok[1:])
        elif tok.startswith("H"):
            height = int(tok[1:])
        elif tok.startswith("C"):
            colorspace = tok[1:]
    if width <= 0 or height <= 0:
        raise UnreadableFile(f"{path}: missing frame dimensions in header")
    return width, height, colorspace


def load_y4m(path) -> FrameSequence:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise UnreadableFile(f"{path}: {exc}") from exc

    nl = raw.find(b"\n")
    if nl < 0:
        raise UnreadableFile(f"{path}: truncated header")
    width, height, colorspace = _parse_y4m_header(raw[:nl], path)

    if colorspace in _C420_TAGS:
        cw, ch = width // 2, height // 2
    elif colorspace == "444":
        cw, ch = width, height
    else:
        raise UnsupportedColorFormat(f"{path}: C{colorspace} is not supported")
    frame_bytes = width * height + 2 * cw * ch

    frames = []
    pos = nl + 1
    while pos < len(raw):
        marker_end = raw.find(b"\n", pos)
        if marker_end < 0 or not raw[pos:marker_end].startswith(b"FRAME"):
            raise UnreadableFile(f"{path}: malformed FRAME marker at byte {pos}")
        start = marker_end + 1
        end = start + frame_bytes
        if end > len(raw):
            raise UnreadableFile(f"{path}: truncated frame payload")
        buf = np.frombuffer(raw[start:end], dtype=np.uint8)
        yp = buf[: width * height].reshape(height, width)
        cbp = buf[width * height : width * height + cw * ch].reshape(ch, cw)
        crp = buf[width * height + cw * ch :].reshape(ch, cw)
        cb = _upsample_chroma(cbp, height, width)
        cr = _upsample_chroma(crp, height, width)
        frames.append(ycbcr_to_rgb_bt601(yp, cb, cr))
        pos = end

    if not frames:
        raise EmptySequence(f"{path}: no frames")
    return FrameSequence(np.stack(frames), source_id=path.stem)


_NUMERIC_PNG = re.compile(r"^(\d+)\.png$", re.IGNORECASE)


def load_frame_dir(path) -> FrameSequence:
    path = Path(path)
    if not path.is_dir():
        raise UnreadableFile(f"{path}: not a directory")
    entries = []
    for child in path.iterdir():
        m = _NUMERIC_PNG.match(child.name)
        if m:
            entries.append((int(m.group(1)), child))
    if not entries:
        raise EmptySequence(f"{path}: no numerically named PNG frames")
    entries.sort()

    frames = []
    shape = None
    for _, child in entries:
        try:
            with Image.open(child) as img:
                arr = np.asarray(img.convert("RGB"), dtype=np.uint8)
        except OSError as exc:
            raise UnreadableFile(f"{child}: {exc}") from exc
        if shape is None:
            shape = arr.shape
        elif arr.shape != shape:
            raise UnreadableFile(f"{child}: frame dimensions differ within sequence")
        frames.append(arr)
    return FrameSequence(np.stack(frames), source_id=path.name)


def load_video(path, fmt: str | None = None) -> FrameSequence:
    """Decode a video into RGB frames. ``fmt`` is ``y4m``, ``frame-dir`` or None (auto)."""
    path = Path(path)
    if fmt is None:
        if path.is_dir():
            fmt = "frame-dir"
        elif path.suffix.lower() == ".y4m":
            fmt = "y4m"
        else:
            raise UnreadableFile(f"{path}: cannot infer format (expect .y4m or directory)")
    if fmt == "y4m":
        return load_y4m(path)
    if fmt == "frame-dir":
        return load_frame_dir(path)
    raise UnreadableFile(f"unknown format {fmt!r}")


def write_frame_dir(seq: FrameSequence, path) -> None:
    """Render a sequence as 1-based %06d.png files (the frame-dir layout)."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    for k in range(seq.frame_count):
        Image.fromarray(seq.frames[k]).save(path / f"{k + 1:06d}.png")


def resize_bilinear(img: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Bilinear resample with half-pixel-centered sampling, float64 output."""
    img = np.asarray(img, dtype=np.float64)
    in_h, in_w = img.shape[:2]
    if in_h == out_h and in_w == out_w:
        return img.copy()

    def axis_coords(n_in, n_out):
        src = (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5
        src = np.clip(src, 0.0, n_in - 1.0)
        lo = np.floor(src).astype(np.int64)
        hi = np.minimum(lo + 1, n_in - 1)
        return lo, hi, src - lo

    y0, y1, wy = axis_coords(in_h, out_h)
    x0, x1, wx = axis_coords(in_w, out_w)
    wy = wy[:, None, None] if img.ndim == 3 else wy[:, None]
    wx = wx[None, :, None] if img.ndim == 3 else wx[None, :]

    top = img[y0][:, x0] * (1.0 - wx) + img[y0][:, x1] * wx
    bot = img[y1][:, x0] * (1.0 - wx) + img[y1][:, x1] * wx
    return top * (1.0 - wy) + bot * wy


def center_crop_square(img: np.ndarray) -> np.ndarray:
    h, w = img.shape[:2]
    side = min(h, w)
    top = (h - side) // 2
    left = (w - side) // 2
    return img[top : top + side, left : left + side]


def preprocess(
    frame: np.ndarray,
    mean: tuple[float, float, float] = (0.5, 0.5, 0.5),
    std: tuple[float, float, float] = (0.5, 0.5, 0.5),
    origin_frame_index: int = 0,
) -> InputTensor:
    """RGB frame -> normalized 3x224x224 tensor.

    Non-square frames are center-cropped to the short side so the isotropic
    resize never distorts aspect ratio. Pixels are scaled to [0, 1] and then
    standardized per channel with the backend's published statistics.
    """
    frame = np.asarray(frame)
    if frame.ndim != 3 or frame.shape[-1] != 3:
        raise DegenerateFrame("expected an (H, W, 3) RGB frame")
    if min(frame.shape[0], frame.shape[1]) < MIN_FRAME_DIM:
        raise DegenerateFrame(
            f"frame {frame.shape[1]}x{frame.shape[0]} below minimum {MIN_FRAME_DIM}"
        )
    img = center_crop_square(frame)
    img = resize_bilinear(img, INPUT_SIZE, INPUT_SIZE) / 255.0
    mean = np.asarray(mean, dtype=np.float64).reshape(1, 1, 3)
    std = np.asarray(std, dtype=np.float64).reshape(1, 1, 3)
    img = (img - mean) / std
    return InputTensor(img.transpose(2, 0, 1).astype(np.float32), origin_frame_index)
