import numpy as np
import pytest

from favor.backend import analytic_backend
from favor.quality import SimilarityWeights

CHANNELS = (64, 128, 256, 512, 512)
# Small spatial grids keep the channel-loop oracles fast; the final stage is
# the 1x1 embedding-style case.
SMALL_GRIDS = ((6, 6), (5, 5), (4, 4), (2, 2), (1, 1))


def build_y4m(frames, colorspace="444", width=None, height=None):
    """Assemble Y4M bytes from per-frame (y, cb, cr) uint8 planes."""
    y0 = frames[0][0]
    height = height or y0.shape[0]
    width = width or y0.shape[1]
    out = bytearray(f"YUV4MPEG2 W{width} H{height} F25:1 Ip A1:1 C{colorspace}\n".encode())
    for y, cb, cr in frames:
        out.extend(b"FRAME\n")
        out.extend(np.asarray(y, np.uint8).tobytes())
        out.extend(np.asarray(cb, np.uint8).tobytes())
        out.extend(np.asarray(cr, np.uint8).tobytes())
    return bytes(out)


def random_planes(rng, width, height, colorspace="444"):
    sub = 1 if colorspace == "444" else 2
    y = rng.integers(16, 236, (height, width), dtype=np.uint8)
    cb = rng.integers(16, 241, (height // sub, width // sub), dtype=np.uint8)
    cr = rng.integers(16, 241, (height // sub, width // sub), dtype=np.uint8)
    return y, cb, cr


def random_pyramid(rng, grids=SMALL_GRIDS, scale=1.0, dtype=np.float64):
    return [
        (rng.normal(0.0, scale, (c, h, w))).astype(dtype)
        for c, (h, w) in zip(CHANNELS, grids)
    ]


@pytest.fixture(scope="session")
def backend0():
    return analytic_backend(0)


@pytest.fixture(scope="session")
def uniform_weights(backend0):
    return SimilarityWeights.uniform(backend0.channel_counts)


def random_frame(rng, height=64, width=64):
    return rng.integers(0, 256, (height, width, 3), dtype=np.uint8)
