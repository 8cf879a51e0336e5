"""Frame-level quality from feature-pyramid statistics.

Each channel of each stage contributes a texture term, comparing spatial
means, and a structure term, comparing spatial spread via std/covariance:

    t = (2*mu_r*mu_d + tau) / (mu_r^2 + mu_d^2 + tau)
    s = (2*cov_rd  + tau) / (sd_r^2 + sd_d^2 + tau)

The frame score is the weighted sum of all t and s terms. With the default
uniform weights (summing to 1 across both term families) identical pyramids
score exactly 1. Statistics are population (divide-by-n) moments.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .backend import FeaturePyramid
from .errors import PyramidMismatch, ShapeMismatch

DEFAULT_TAU = 1e-6


@dataclass
class ChannelStats:
    """Per-channel spatial mean and population std, one vector per stage."""

    mu: list
    sigma: list


def channel_stats(pyramid: FeaturePyramid) -> ChannelStats:
    mu, sigma = [], []
    for stage in pyramid.stages:
        flat = stage.reshape(stage.shape[0], -1).astype(np.float64)
        mu.append(flat.mean(axis=1))
        sigma.append(flat.std(axis=1))
    return ChannelStats(mu, sigma)


def channel_covariance(ref_channel: np.ndarray, dist_channel: np.ndarray) -> float:
    """Population covariance of two aligned spatial maps."""
    r = np.asarray(ref_channel, dtype=np.float64)
    d = np.asarray(dist_channel, dtype=np.float64)
    if r.shape != d.shape:
        raise ShapeMismatch(f"channel shapes differ: {r.shape} vs {d.shape}")
    return float((r * d).mean() - r.mean() * d.mean())


def texture_similarity(mu_r: float, mu_d: float, tau: float = DEFAULT_TAU) -> float:
    return (2.0 * mu_r * mu_d + tau) / (mu_r * mu_r + mu_d * mu_d + tau)


def structure_similarity(
    sigma_r: float, sigma_d: float, cov: float, tau: float = DEFAULT_TAU
) -> float:
    return (2.0 * cov + tau) / (sigma_r * sigma_r + sigma_d * sigma_d + tau)


@dataclass
class SimilarityWeights:
    """Per-channel texture/structure weights plus the stability offset tau."""

    alpha: list
    beta: list
    tau: float = DEFAULT_TAU

    @classmethod
    def uniform(cls, channel_counts, tau: float = DEFAULT_TAU) -> "SimilarityWeights":
        total = 2 * sum(channel_counts)
        alpha = [np.full(c, 1.0 / total) for c in channel_counts]
        beta = [np.full(c, 1.0 / total) for c in channel_counts]
        return cls(alpha, beta, tau)

    @classmethod
    def from_file(cls, path, channel_counts, tau: float = DEFAULT_TAU) -> "SimilarityWeights":
        with open(path) as fh:
            doc = json.load(fh)
        alpha = [np.asarray(a, dtype=np.float64) for a in doc["alpha"]]
        beta = [np.asarray(b, dtype=np.float64) for b in doc["beta"]]
        got = tuple(a.shape[0] for a in alpha)
        if got != tuple(channel_counts) or tuple(b.shape[0] for b in beta) != tuple(
            channel_counts
        ):
            raise ValueError(
                f"weight file shape {got} does not match channels {tuple(channel_counts)}"
            )
        return cls(alpha, beta, float(doc.get("tau", tau)))

    def total(self) -> float:
        return float(
            sum(a.sum() for a in self.alpha) + sum(b.sum() for b in self.beta)
        )

    def validate(self) -> None:
        if self.tau <= 0:
            raise ValueError("tau must be positive")
        if any((np.asarray(a) < 0).any() for a in self.alpha + self.beta):
            raise ValueError("weights must be nonnegative")
        if abs(self.total() - 1.0) > 1e-9:
            raise ValueError(f"weights must sum to 1, got {self.total()!r}")


def frame_quality(
    ref: FeaturePyramid, dist: FeaturePyramid, weights: SimilarityWeights
) -> float:
    """Weighted texture+structure similarity over every stage and channel."""
    if ref.channel_counts != dist.channel_counts:
        raise PyramidMismatch(
            f"pyramids disagree: {ref.channel_counts} vs {dist.channel_counts}"
        )
    tau = weights.tau
    total = 0.0
    for stage_idx in range(len(ref.stages)):
        r = ref.stages[stage_idx]
        d = dist.stages[stage_idx]
        if r.shape != d.shape:
            raise PyramidMismatch(
                f"stage {stage_idx + 1} shapes differ: {r.shape} vs {d.shape}"
            )
        rf = r.reshape(r.shape[0], -1).astype(np.float64)
        df = d.reshape(d.shape[0], -1).astype(np.float64)
        mu_r = rf.mean(axis=1)
        mu_d = df.mean(axis=1)
        rc = rf - mu_r[:, None]
        dc = df - mu_d[:, None]
        var_r = (rc * rc).mean(axis=1)
        var_d = (dc * dc).mean(axis=1)
        cov = (rc * dc).mean(axis=1)
        t = (2.0 * mu_r * mu_d + tau) / (mu_r * mu_r + mu_d * mu_d + tau)
        s = (2.0 * cov + tau) / (var_r + var_d + tau)
        total += float(
            np.dot(weights.alpha[stage_idx], t) + np.dot(weights.beta[stage_idx], s)
        )
    return total
