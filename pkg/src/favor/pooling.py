"""Temporal aggregation of per-frame quality scores.

The primary aggregator refines each frame score with the memory effect of
the worst recent frame: a direct term (the windowed minimum itself) and an
indirect term (attention-weighted scores of the frames after that minimum),
mixed by gamma. Refined scores are then averaged into the video score.

Alternative poolers used in isolation studies (average, percentile, recency,
primacy, variation, hysteresis, vqpooling) are provided behind one `pool`
entry point. Their exact parameterizations follow the cited constructions
loosely and are reimplementation choices; all knobs are exposed as params.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BadStrategyParam, EmptySeries, UnknownStrategy

DEFAULT_WINDOW = 4
DEFAULT_GAMMA = 0.1


@dataclass
class MemoryParams:
    """Window length l, direct/indirect mix gamma, Gaussian rank width.

    sigma_w None selects the adaptive width max(1, count/2) per window.
    """

    l: int = DEFAULT_WINDOW
    gamma: float = DEFAULT_GAMMA
    sigma_w: float | None = None

    def __post_init__(self):
        if self.l < 1:
            raise ValueError("window length l must be >= 1")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError("gamma must lie in [0, 1]")
        if self.sigma_w is not None and self.sigma_w <= 0:
            raise ValueError("sigma_w must be positive")


@dataclass
class FrameScoreSeries:
    """Raw per-frame scores plus their memory-refined counterparts."""

    raw: np.ndarray
    refined: np.ndarray | None = None

    def __post_init__(self):
        self.raw = np.asarray(self.raw, dtype=np.float64)
        if self.raw.ndim != 1 or self.raw.size < 1:
            raise EmptySeries("score series must be a non-empty 1-D sequence")
        if self.refined is not None:
            self.refined = np.asarray(self.refined, dtype=np.float64)

    @property
    def length(self) -> int:
        return self.raw.size

    @classmethod
    def from_raw(cls, raw, params: MemoryParams | None = None) -> "FrameScoreSeries":
        params = params or MemoryParams()
        series = cls(np.asarray(raw, dtype=np.float64))
        series.refined = memory_refine(series.raw, params)
        return series


def gaussian_rank_weights(count: int, sigma_w: float | None = None) -> np.ndarray:
    """Normalized, strictly decreasing weights over quality ranks 1..count.

    Rank 1 (the lowest score) gets the largest weight; the profile is the
    descending half of a Gaussian, w(r) ~ exp(-(r-1)^2 / (2 sigma_w^2)).
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    if sigma_w is None:
        sigma_w = max(1.0, count / 2.0)
    ranks = np.arange(count, dtype=np.float64)
    w = np.exp(-(ranks**2) / (2.0 * sigma_w * sigma_w))
    return w / w.sum()


def memory_refine(raw, params: MemoryParams | None = None) -> np.ndarray:
    """Apply the worst-recent-frame memory effect to a score series.

    Frames before the window fills (k < l, 1-based) pass through. For k >= l
    the window is the last l scores: the direct term is the window minimum
    (earliest on ties), the indirect term is the rank-weighted sum over the
    frames after that minimum, and the two mix as gamma*direct +
    (1-gamma)*indirect. An empty successor set collapses the indirect term
    to the direct one.
    """
    params = params or MemoryParams()
    raw = np.asarray(raw, dtype=np.float64)
    if raw.ndim != 1 or raw.size < 1:
        raise EmptySeries("score series must be a non-empty 1-D sequence")
    length = raw.size
    win = params.l
    refined = raw.copy()
    for k in range(win - 1, length):  # 0-based; 1-based k >= l
        window = raw[k - win + 1 : k + 1]
        p = int(np.argmin(window))  # earliest minimum
        direct = window[p]
        successors = window[p + 1 :]
        if successors.size == 0:
            indirect = direct
        else:
            order = np.lexsort((np.arange(successors.size), successors))
            ranks = np.empty(successors.size, dtype=np.int64)
            ranks[order] = np.arange(successors.size)
            weights = gaussian_rank_weights(successors.size, params.sigma_w)
            indirect = float(np.dot(weights[ranks], successors))
        refined[k] = params.gamma * direct + (1.0 - params.gamma) * indirect
    return refined


def video_quality(refined) -> float:
    """Mean of the refined frame scores."""
    refined = np.asarray(refined, dtype=np.float64)
    if refined.ndim != 1 or refined.size < 1:
        raise EmptySeries("refined series must be a non-empty 1-D sequence")
    return float(refined.mean())


def sanitize_scores(raw) -> np.ndarray:
    """Map +inf entries (identical-frame PSNR) to the max finite score."""
    raw = np.asarray(raw, dtype=np.float64)
    if not np.isinf(raw).any():
        return raw
    finite = raw[np.isfinite(raw)]
    if finite.size == 0:
        return raw
    out = raw.copy()
    out[np.isposinf(out)] = finite.max()
    out[np.isneginf(out)] = finite.min()
    return out


# ---------------------------------------------------------------------------
# alternative poolers
# ---------------------------------------------------------------------------

def _pool_average(raw):
    return float(raw.mean())


def _pool_percentile(raw, q: float = 10.0):
    if not 0.0 < q <= 100.0:
        raise BadStrategyParam(f"percentile q must be in (0, 100], got {q}")
    count = max(1, math.ceil(raw.size * q / 100.0))
    return float(np.sort(raw)[:count].mean())


def _exp_weighted(raw, sign: float, lam: float | None):
    if lam is None:
        lam = raw.size / 5.0
    if lam <= 0:
        raise BadStrategyParam(f"lambda must be positive, got {lam}")
    k = np.arange(raw.size, dtype=np.float64)
    w = np.exp(sign * k / lam)
    return float(np.dot(w, raw) / w.sum())


def _pool_recency(raw, lam: float | None = None):
    return _exp_weighted(raw, +1.0, lam)


def _pool_primacy(raw, lam: float | None = None):
    return _exp_weighted(raw, -1.0, lam)


def _pool_variation(raw, penalty: float = 0.5):
    return float(raw.mean() - penalty * raw.std())


def _pool_hysteresis(raw, window: int = 50, mix: float = 0.8):
    """Min-over-recent-past memory blended with a sorted Gaussian-weighted
    outlook over the near future, averaged over frames."""
    if window < 1:
        raise BadStrategyParam(f"hysteresis window must be >= 1, got {window}")
    if not 0.0 <= mix <= 1.0:
        raise BadStrategyParam(f"hysteresis mix must be in [0, 1], got {mix}")
    length = raw.size
    pooled = np.empty(length)
    for t in range(length):
        past = raw[max(0, t - window) : t]
        memory = float(past.min()) if past.size else float(raw[t])
        future = np.sort(raw[t : min(length, t + window)])[::-1]
        w = np.exp(-np.arange(future.size, dtype=np.float64) ** 2 / (2.0 * max(1.0, future.size / 2.0) ** 2))
        current = float(np.dot(w, future) / w.sum())
        pooled[t] = mix * memory + (1.0 - mix) * current
    return float(pooled.mean())


def _pool_vqpooling(raw, low_weight: float = 2.0):
    """Split at the series mean; the low-quality cluster weighs heavier."""
    if low_weight <= 0:
        raise BadStrategyParam(f"low_weight must be positive, got {low_weight}")
    mean = raw.mean()
    low = raw[raw <= mean]
    high = raw[raw > mean]
    num = low_weight * low.sum() + high.sum()
    den = low_weight * low.size + high.size
    return float(num / den)


_POOLERS = {
    "average": _pool_average,
    "percentile": _pool_percentile,
    "recency": _pool_recency,
    "primacy": _pool_primacy,
    "variation": _pool_variation,
    "hysteresis": _pool_hysteresis,
    "vqpooling": _pool_vqpooling,
}

POOL_STRATEGIES = tuple(sorted(_POOLERS))


def pool(raw, strategy: str, **params) -> float:
    """Collapse a raw frame-score series to one scalar with the named pooler."""
    raw = np.asarray(raw, dtype=np.float64)
    if raw.ndim != 1 or raw.size < 1:
        raise EmptySeries("score series must be a non-empty 1-D sequence")
    fn = _POOLERS.get(strategy)
    if fn is None:
        raise UnknownStrategy(
            f"{strategy!r} (choose from {', '.join(POOL_STRATEGIES)})"
        )
    try:
        return fn(raw, **params)
    except TypeError as exc:
        raise BadStrategyParam(str(exc)) from exc
