import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from favor.backend import FeaturePyramid
from favor.errors import PyramidMismatch, ShapeMismatch
from favor.quality import (
    DEFAULT_TAU,
    SimilarityWeights,
    channel_covariance,
    channel_stats,
    frame_quality,
    structure_similarity,
    texture_similarity,
)

from conftest import CHANNELS, SMALL_GRIDS, random_pyramid
from oracles import covariance_oracle, frame_quality_oracle


def _pyramid(stages):
    return FeaturePyramid(stages)


def test_channel_stats_constant_map():
    stages = [np.full((c, h, w), 2.0) for c, (h, w) in zip(CHANNELS, SMALL_GRIDS)]
    stats = channel_stats(_pyramid(stages))
    assert all(np.allclose(m, 2.0) for m in stats.mu)
    assert all(np.allclose(s, 0.0) for s in stats.sigma)


def test_channel_stats_known_values():
    stages = [np.zeros((c, 2, 2)) for c in CHANNELS]
    stages[0][0] = np.array([[1.0, 2.0], [3.0, 4.0]])
    stats = channel_stats(_pyramid(stages))
    assert stats.mu[0][0] == pytest.approx(2.5, abs=1e-12)
    assert stats.sigma[0][0] == pytest.approx(math.sqrt(1.25), abs=1e-12)


def test_channel_stats_singleton_final_stage():
    stages = [np.zeros((c, h, w)) for c, (h, w) in zip(CHANNELS, SMALL_GRIDS)]
    stages[4][:, 0, 0] = 7.5
    stats = channel_stats(_pyramid(stages))
    assert np.allclose(stats.mu[4], 7.5)
    assert np.allclose(stats.sigma[4], 0.0)


def test_covariance_self_and_negation():
    rng = np.random.default_rng(0)
    x = rng.normal(0, 1, (8, 8))
    var = float(x.var())
    assert channel_covariance(x, x) == pytest.approx(var, abs=1e-12)
    assert channel_covariance(x, -x) == pytest.approx(-var, abs=1e-12)


def test_covariance_matches_double_loop_oracle():
    rng = np.random.default_rng(1)
    a = rng.normal(0, 2, (8, 8))
    b = rng.normal(1, 3, (8, 8))
    assert channel_covariance(a, b) == pytest.approx(covariance_oracle(a, b), abs=1e-10)


def test_covariance_shape_mismatch():
    with pytest.raises(ShapeMismatch):
        channel_covariance(np.zeros((2, 2)), np.zeros((3, 3)))


def test_texture_similarity_values():
    assert texture_similarity(5.0, 5.0) == pytest.approx(1.0, abs=1e-15)
    assert texture_similarity(0.0, 0.0) == pytest.approx(1.0, abs=1e-15)
    t = texture_similarity(1.0, 0.0, tau=1e-6)
    assert t == pytest.approx(1e-6 / (1.0 + 1e-6), rel=1e-12)


def test_structure_similarity_values():
    v = 0.35
    assert structure_similarity(math.sqrt(v), math.sqrt(v), v) == pytest.approx(1.0, abs=1e-12)
    assert structure_similarity(0.0, 0.0, 0.0) == pytest.approx(1.0, abs=1e-15)
    s = structure_similarity(1.0, 1.0, -1.0, tau=1e-6)
    assert s == pytest.approx((-2.0 + 1e-6) / (2.0 + 1e-6), rel=1e-12)
    assert s == pytest.approx(-1.0, abs=1e-5)


def test_frame_quality_identity(uniform_weights):
    rng = np.random.default_rng(2)
    pyr = _pyramid(random_pyramid(rng))
    assert frame_quality(pyr, pyr, uniform_weights) == pytest.approx(1.0, abs=1e-12)


def test_frame_quality_zero_weights():
    rng = np.random.default_rng(3)
    pyr = _pyramid(random_pyramid(rng))
    zero = SimilarityWeights(
        [np.zeros(c) for c in CHANNELS], [np.zeros(c) for c in CHANNELS]
    )
    assert frame_quality(pyr, pyr, zero) == 0.0


def test_frame_quality_matches_channel_loop_oracle(uniform_weights):
    rng = np.random.default_rng(4)
    for _ in range(5):
        ref = random_pyramid(rng)
        dist = [s + rng.normal(0, 0.3, s.shape) for s in ref]
        got = frame_quality(_pyramid(ref), _pyramid(dist), uniform_weights)
        want = frame_quality_oracle(
            ref, dist, uniform_weights.alpha, uniform_weights.beta, uniform_weights.tau
        )
        assert got == pytest.approx(want, abs=1e-9)


def test_frame_quality_symmetric(uniform_weights):
    rng = np.random.default_rng(5)
    a = _pyramid(random_pyramid(rng))
    b = _pyramid(random_pyramid(rng))
    assert frame_quality(a, b, uniform_weights) == frame_quality(b, a, uniform_weights)


def test_frame_quality_bounded(uniform_weights):
    rng = np.random.default_rng(6)
    for _ in range(10):
        a = _pyramid(random_pyramid(rng, scale=3.0))
        b = _pyramid(random_pyramid(rng, scale=0.2))
        q = frame_quality(a, b, uniform_weights)
        assert -1.0 <= q <= 1.0


def test_frame_quality_tau_stability(uniform_weights):
    rng = np.random.default_rng(7)
    ref = random_pyramid(rng)
    dist = [s + rng.normal(0, 0.2, s.shape) for s in ref]
    base = frame_quality(_pyramid(ref), _pyramid(dist), uniform_weights)
    nudged = [s + 1e-8 for s in dist]
    moved = frame_quality(_pyramid(ref), _pyramid(nudged), uniform_weights)
    assert abs(moved - base) < 1e-4


def test_frame_quality_pyramid_mismatch(uniform_weights):
    rng = np.random.default_rng(8)
    a = random_pyramid(rng)
    b = random_pyramid(rng)
    b[2] = np.concatenate([b[2], b[2][:1]], axis=0)  # 257 channels
    with pytest.raises(PyramidMismatch):
        frame_quality(_pyramid(a), _pyramid(b), uniform_weights)
    c = random_pyramid(rng, grids=((6, 6), (5, 5), (4, 4), (2, 2), (2, 1)))
    with pytest.raises(PyramidMismatch):
        frame_quality(_pyramid(a), _pyramid(c), uniform_weights)


def test_uniform_weights_sum_to_one(uniform_weights):
    assert uniform_weights.total() == pytest.approx(1.0, abs=1e-12)
    uniform_weights.validate()


def test_weight_file_roundtrip(tmp_path):
    import json

    alpha = [np.full(c, 0.25 / sum(CHANNELS)) for c in CHANNELS]
    beta = [np.full(c, 0.75 / sum(CHANNELS)) for c in CHANNELS]
    path = tmp_path / "w.json"
    path.write_text(
        json.dumps({"alpha": [a.tolist() for a in alpha], "beta": [b.tolist() for b in beta]})
    )
    weights = SimilarityWeights.from_file(path, CHANNELS)
    weights.validate()
    assert weights.total() == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError):
        SimilarityWeights.from_file(path, (64, 128, 256, 512, 511))


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000), scale=st.floats(0.05, 2.0))
def test_symmetry_and_bounds_property(seed, scale):
    rng = np.random.default_rng(seed)
    grids = ((3, 3), (2, 2), (2, 2), (1, 2), (1, 1))
    weights = SimilarityWeights.uniform(CHANNELS)
    a = _pyramid(random_pyramid(rng, grids=grids, scale=scale))
    b = _pyramid(random_pyramid(rng, grids=grids, scale=scale))
    q_ab = frame_quality(a, b, weights)
    q_ba = frame_quality(b, a, weights)
    assert q_ab == q_ba
    assert -1.0 <= q_ab <= 1.0
