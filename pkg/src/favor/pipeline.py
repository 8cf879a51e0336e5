"""End-to-end scoring: frames in, per-frame scores, pooled video score out.

Frame scoring fans out across worker threads (one backend handle per
worker); refinement and pooling are a sequential ordered reduce, so results
do not depend on the degree of parallelism. Emitted JSON is byte-stable:
insertion-ordered keys and floats fixed at 6 decimals.
"""

from __future__ import annotations

import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .backend import extract_features
from .baselines import SsimParams, msssim_frame, psnr_frame, ssim_frame
from .errors import FrameCountMismatch, ShapeMismatch, UnknownStrategy
from .ingest import FrameSequence, preprocess
from .pooling import (
    FrameScoreSeries,
    MemoryParams,
    memory_refine,
    pool,
    sanitize_scores,
    video_quality,
)
from .quality import SimilarityWeights, frame_quality

METRICS = ("favor", "psnr", "ssim", "msssim")
MEMORY_POOL = "memory"


@dataclass
class ScoreRecord:
    video_id: str
    per_frame_scores: list
    refined_scores: list
    video_score: float

    def as_dict(self) -> dict:
        return {
            "video_id": self.video_id,
            "per_frame_scores": self.per_frame_scores,
            "refined_scores": self.refined_scores,
            "video_score": self.video_score,
        }


def dumps_fixed(obj, indent: int = 0) -> str:
    """Deterministic JSON: insertion-ordered keys, floats at 6 decimals.

    Non-finite floats become the strings "inf", "-inf", "nan"; JSON itself
    has no spelling for them.
    """
    pad = " " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [
            f'{pad}  "{key}": {dumps_fixed(value, indent + 2)}'
            for key, value in obj.items()
        ]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [f"{pad}  {dumps_fixed(value, indent + 2)}" for value in obj]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        if value != value:
            return '"nan"'
        if value == float("inf"):
            return '"inf"'
        if value == float("-inf"):
            return '"-inf"'
        return f"{value:.6f}"
    if obj is None:
        return "null"
    text = str(obj).replace("\\", "\\\\").replace('"', '\\"')
    return f'"{text}"'


def _check_aligned(ref: FrameSequence, dist: FrameSequence) -> None:
    if ref.frame_count != dist.frame_count:
        raise FrameCountMismatch(
            f"{ref.frame_count} reference frames vs {dist.frame_count} distorted"
        )
    if (ref.height, ref.width) != (dist.height, dist.width):
        raise ShapeMismatch(
            f"{ref.width}x{ref.height} reference vs {dist.width}x{dist.height} distorted"
        )


def favor_frame_scores(
    ref: FrameSequence,
    dist: FrameSequence,
    backend_factory,
    weights: SimilarityWeights | None = None,
    jobs: int = 1,
) -> np.ndarray:
    """Per-frame deep-feature quality; one backend handle per worker thread."""
    _check_aligned(ref, dist)
    local = threading.local()

    def handle():
        if not hasattr(local, "backend"):
            local.backend = backend_factory()
        return local.backend

    probe = backend_factory()
    w = weights or SimilarityWeights.uniform(probe.channel_counts)
    mean, std = probe.input_mean, probe.input_std

    def score_one(k: int) -> float:
        b = handle()
        pyr_ref = extract_features(b, preprocess(ref.frames[k], mean, std, k))
        pyr_dist = extract_features(b, preprocess(dist.frames[k], mean, std, k))
        return frame_quality(pyr_ref, pyr_dist, w)

    if jobs <= 1:
        local.backend = probe
        return np.asarray([score_one(k) for k in range(ref.frame_count)])
    with ThreadPoolExecutor(max_workers=jobs) as pool_:
        return np.asarray(list(pool_.map(score_one, range(ref.frame_count))))


def baseline_frame_scores(
    ref: FrameSequence, dist: FrameSequence, metric: str, jobs: int = 1
) -> np.ndarray:
    _check_aligned(ref, dist)
    params = SsimParams()
    if metric == "psnr":
        fn = lambda k: psnr_frame(ref.frames[k], dist.frames[k])
    elif metric == "ssim":
        fn = lambda k: ssim_frame(ref.frames[k], dist.frames[k], params)
    elif metric == "msssim":
        fn = lambda k: msssim_frame(ref.frames[k], dist.frames[k], params)
    else:
        raise UnknownStrategy(f"unknown metric {metric!r}")
    if jobs <= 1:
        return np.asarray([fn(k) for k in range(ref.frame_count)])
    with ThreadPoolExecutor(max_workers=jobs) as pool_:
        return np.asarray(list(pool_.map(fn, range(ref.frame_count))))


def pool_series(
    raw: np.ndarray,
    pool_name: str = MEMORY_POOL,
    mem_params: MemoryParams | None = None,
    pool_params: dict | None = None,
) -> tuple[FrameScoreSeries, float]:
    """Aggregate raw frame scores; returns (series with refined scores, score)."""
    raw = sanitize_scores(raw)
    if np.isinf(raw).all():
        # no finite score anywhere (identical-video PSNR): pass through
        return FrameScoreSeries(raw, raw.copy()), float(raw[0])
    if pool_name == MEMORY_POOL:
        refined = memory_refine(raw, mem_params or MemoryParams())
        return FrameScoreSeries(raw, refined), video_quality(refined)
    score = pool(raw, pool_name, **(pool_params or {}))
    return FrameScoreSeries(raw, raw.copy()), score


def score_pair(
    ref: FrameSequence,
    dist: FrameSequence,
    metric: str = "favor",
    backend_factory=None,
    weights: SimilarityWeights | None = None,
    pool_name: str = MEMORY_POOL,
    mem_params: MemoryParams | None = None,
    pool_params: dict | None = None,
    jobs: int = 1,
    video_id: str = "",
) -> ScoreRecord:
    if metric == "favor":
        if backend_factory is None:
            raise ValueError("favor metric requires a backend")
        raw = favor_frame_scores(ref, dist, backend_factory, weights, jobs)
    else:
        raw = baseline_frame_scores(ref, dist, metric, jobs)
    series, score = pool_series(raw, pool_name, mem_params, pool_params)
    return ScoreRecord(
        video_id=video_id or dist.source_id or ref.source_id,
        per_frame_scores=[float(v) for v in raw],
        refined_scores=[float(v) for v in series.refined],
        video_score=float(score),
    )
