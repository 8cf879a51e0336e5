import numpy as np
import pytest

from favor.errors import (
    DegenerateFrame,
    EmptySequence,
    UnreadableFile,
    UnsupportedColorFormat,
)
from favor.ingest import (
    INPUT_SIZE,
    FrameSequence,
    center_crop_square,
    load_video,
    preprocess,
    resize_bilinear,
    write_frame_dir,
    ycbcr_to_rgb_bt601,
)

from conftest import build_y4m, random_planes
from oracles import bilinear_oracle, decode_y4m_oracle


def test_y4m_frame_count_and_order(tmp_path):
    rng = np.random.default_rng(0)
    frames = [random_planes(rng, 32, 16) for _ in range(7)]
    # Stamp the frame index into the luma plane to pin presentation order.
    for k, (y, _, _) in enumerate(frames):
        y[0, 0] = 16 + k
    path = tmp_path / "clip.y4m"
    path.write_bytes(build_y4m(frames))
    seq = load_video(path)
    assert seq.frame_count == 7
    assert (seq.width, seq.height) == (32, 16)
    stamps = [ycbcr_to_rgb_bt601(*frames[k])[0, 0].tolist() for k in range(7)]
    assert [seq.frames[k][0, 0].tolist() for k in range(7)] == stamps


def test_y4m_c420_matches_independent_decoder(tmp_path):
    rng = np.random.default_rng(1)
    frames = [random_planes(rng, 16, 12, "420") for _ in range(3)]
    raw = build_y4m(frames, "420")
    path = tmp_path / "clip.y4m"
    path.write_bytes(raw)
    seq = load_video(path)
    oracle_frames = decode_y4m_oracle(raw)
    assert seq.frame_count == 3
    for k in range(3):
        diff = np.abs(seq.frames[k].astype(int) - oracle_frames[k].astype(int))
        assert diff.max() <= 1  # independent float paths may round differently


def test_y4m_and_frame_dir_render_identically(tmp_path):
    rng = np.random.default_rng(2)
    frames = [random_planes(rng, 24, 24) for _ in range(4)]
    path = tmp_path / "clip.y4m"
    path.write_bytes(build_y4m(frames))
    seq = load_video(path, "y4m")
    out_dir = tmp_path / "frames"
    write_frame_dir(seq, out_dir)
    again = load_video(out_dir, "frame-dir")
    assert np.array_equal(seq.frames, again.frames)


def test_frame_dir_single_png(tmp_path):
    from PIL import Image

    d = tmp_path / "frames"
    d.mkdir()
    Image.fromarray(np.zeros((40, 40, 3), np.uint8)).save(d / "000001.png")
    seq = load_video(d)
    assert seq.frame_count == 1


def test_frame_dir_numeric_ordering(tmp_path):
    from PIL import Image

    d = tmp_path / "frames"
    d.mkdir()
    for idx in (3, 1, 2):
        frame = np.full((8, 8, 3), idx * 10, np.uint8)
        Image.fromarray(frame).save(d / f"{idx:06d}.png")
    seq = load_video(d)
    assert [f[0, 0, 0] for f in seq.frames] == [10, 20, 30]


def test_unsupported_colorspace(tmp_path):
    path = tmp_path / "c422.y4m"
    path.write_bytes(b"YUV4MPEG2 W4 H4 F25:1 C422\nFRAME\n" + bytes(4 * 4 * 2))
    with pytest.raises(UnsupportedColorFormat):
        load_video(path)


def test_unreadable_and_empty(tmp_path):
    with pytest.raises(UnreadableFile):
        load_video(tmp_path / "missing.y4m")
    garbage = tmp_path / "bad.y4m"
    garbage.write_bytes(b"not a stream\n")
    with pytest.raises(UnreadableFile):
        load_video(garbage)
    headless = tmp_path / "empty.y4m"
    headless.write_bytes(b"YUV4MPEG2 W4 H4 F25:1 C444\n")
    with pytest.raises(EmptySequence):
        load_video(headless)
    empty_dir = tmp_path / "frames"
    empty_dir.mkdir()
    with pytest.raises(EmptySequence):
        load_video(empty_dir)


def test_truncated_payload(tmp_path):
    path = tmp_path / "short.y4m"
    path.write_bytes(b"YUV4MPEG2 W4 H4 F25:1 C444\nFRAME\n" + bytes(10))
    with pytest.raises(UnreadableFile):
        load_video(path)


def test_bt601_roundtrip_within_one_lsb():
    # Synthesized YCbCr ramp -> RGB, compared against the closed-form inverse.
    y, cb, cr = np.meshgrid(
        np.linspace(16, 235, 16), np.linspace(16, 240, 16), indexing="ij"
    )[0], np.full((16, 16), 128.0), np.full((16, 16), 128.0)
    rgb = ycbcr_to_rgb_bt601(y, cb, cr)
    # Closed-form: with neutral chroma, R=G=B=(Y-16)/219*255.
    expected = np.clip(np.rint((y - 16.0) / 219.0 * 255.0), 0, 255)
    assert np.abs(rgb.astype(int) - expected[..., None].astype(int)).max() <= 1


def test_preprocess_constant_frame():
    frame = np.full((64, 64, 3), 128, np.uint8)
    tensor = preprocess(frame)
    expected = (128 / 255.0 - 0.5) / 0.5
    assert tensor.data.shape == (3, INPUT_SIZE, INPUT_SIZE)
    assert np.allclose(tensor.data, expected, atol=1e-6)


def test_preprocess_output_shape_512():
    frame = np.random.default_rng(3).integers(0, 256, (512, 512, 3), dtype=np.uint8)
    assert preprocess(frame).data.shape == (3, 224, 224)


def test_resize_matches_bilinear_oracle():
    rng = np.random.default_rng(4)
    # Checkerboard plus noise, downscaled 512 -> 224.
    base = np.indices((512, 512)).sum(axis=0) % 2 * 255.0
    img = np.stack([base, 255 - base, rng.uniform(0, 255, (512, 512))], axis=-1)
    ours = resize_bilinear(img, 224, 224)
    ref = bilinear_oracle(img, 224, 224)
    assert np.abs(ours - ref).max() < 1e-6


def test_resize_upscale_matches_oracle():
    rng = np.random.default_rng(5)
    img = rng.uniform(0, 255, (13, 9))
    assert np.abs(resize_bilinear(img, 30, 41) - bilinear_oracle(img, 30, 41)).max() < 1e-9


def test_preprocess_idempotent_on_constant_224():
    frame = np.full((224, 224, 3), 200, np.uint8)
    once = preprocess(frame)
    assert np.allclose(once.data, (200 / 255.0 - 0.5) / 0.5, atol=1e-6)


def test_preprocess_center_crop_non_square():
    frame = np.zeros((64, 128, 3), np.uint8)
    frame[:, 32:96] = 255  # center band survives the crop
    cropped = center_crop_square(frame)
    assert cropped.shape == (64, 64, 3)
    assert cropped.min() == 255
    tensor = preprocess(frame)
    assert np.allclose(tensor.data, (255 / 255.0 - 0.5) / 0.5, atol=1e-6)


def test_preprocess_rejects_degenerate():
    with pytest.raises(DegenerateFrame):
        preprocess(np.zeros((16, 64, 3), np.uint8))
    with pytest.raises(DegenerateFrame):
        preprocess(np.zeros((64, 64), np.uint8))


def test_frame_sequence_invariants():
    with pytest.raises(EmptySequence):
        FrameSequence(np.zeros((0, 4, 4, 3), np.uint8))
    with pytest.raises(ValueError):
        FrameSequence(np.zeros((1, 4, 4, 3), np.float32))
