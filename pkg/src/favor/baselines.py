"""Classic full-reference frame metrics: PSNR, SSIM, MS-SSIM.

PSNR is computed over all RGB channels; SSIM and MS-SSIM operate on BT.601
luma with the standard constants (k1=0.01, k2=0.03, 11x11 Gaussian window
with sigma 1.5, dynamic range 255) and valid-region window placement.
Identical frames yield +inf PSNR (a sentinel later mapped by the poolers)
and exactly 1.0 for SSIM/MS-SSIM.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import correlate1d

from .errors import ShapeMismatch, TooSmall

MSSSIM_WEIGHTS = (0.0448, 0.2856, 0.3001, 0.2363, 0.1333)
MSSSIM_MIN_DIM = 176  # 11-tap window must survive 4 dyadic downsamples

_LUMA = np.array([0.299, 0.587, 0.114])


def _gaussian_window(size: int, sigma: float) -> np.ndarray:
    half = (size - 1) / 2.0
    x = np.arange(size, dtype=np.float64) - half
    g = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return g / g.sum()


@dataclass
class SsimParams:
    k1: float = 0.01
    k2: float = 0.03
    window_size: int = 11
    window_sigma: float = 1.5
    dynamic_range: float = 255.0

    def window(self) -> np.ndarray:
        return _gaussian_window(self.window_size, self.window_sigma)


def luma(frame: np.ndarray) -> np.ndarray:
    """BT.601 luma from an RGB frame, float64."""
    return np.asarray(frame, dtype=np.float64) @ _LUMA


def psnr_frame(ref: np.ndarray, dist: np.ndarray) -> float:
    """10*log10(255^2 / MSE) over all pixels and channels; inf when equal."""
    ref = np.asarray(ref, dtype=np.float64)
    dist = np.asarray(dist, dtype=np.float64)
    if ref.shape != dist.shape:
        raise ShapeMismatch(f"frame shapes differ: {ref.shape} vs {dist.shape}")
    mse = float(np.mean((ref - dist) ** 2))
    if mse == 0.0:
        return float("inf")
    return float(10.0 * np.log10(255.0 * 255.0 / mse))


def _local_means(img: np.ndarray, win: np.ndarray) -> np.ndarray:
    """Separable windowed mean, valid region only."""
    half = win.size // 2
    tmp = correlate1d(img, win, axis=0, mode="constant")
    tmp = correlate1d(tmp, win, axis=1, mode="constant")
    return tmp[half:-half, half:-half]


def _ssim_cs_maps(y_ref, y_dist, params: SsimParams):
    win = params.window()
    c1 = (params.k1 * params.dynamic_range) ** 2
    c2 = (params.k2 * params.dynamic_range) ** 2
    mu1 = _local_means(y_ref, win)
    mu2 = _local_means(y_dist, win)
    s11 = _local_means(y_ref * y_ref, win) - mu1 * mu1
    s22 = _local_means(y_dist * y_dist, win) - mu2 * mu2
    s12 = _local_means(y_ref * y_dist, win) - mu1 * mu2
    lum = (2.0 * mu1 * mu2 + c1) / (mu1 * mu1 + mu2 * mu2 + c1)
    cs = (2.0 * s12 + c2) / (s11 + s22 + c2)
    return lum * cs, cs


def ssim_frame(ref: np.ndarray, dist: np.ndarray, params: SsimParams | None = None) -> float:
    params = params or SsimParams()
    ref = np.asarray(ref)
    dist = np.asarray(dist)
    if ref.shape != dist.shape:
        raise ShapeMismatch(f"frame shapes differ: {ref.shape} vs {dist.shape}")
    if min(ref.shape[0], ref.shape[1]) < params.window_size:
        raise TooSmall(
            f"frame must be at least {params.window_size}x{params.window_size}"
        )
    y_ref = luma(ref) if ref.ndim == 3 else np.asarray(ref, dtype=np.float64)
    y_dist = luma(dist) if dist.ndim == 3 else np.asarray(dist, dtype=np.float64)
    ssim_map, _ = _ssim_cs_maps(y_ref, y_dist, params)
    return float(ssim_map.mean())


def _halve(img: np.ndarray) -> np.ndarray:
    """2x2 block average; odd trailing row/column dropped."""
    h, w = img.shape[0] & ~1, img.shape[1] & ~1
    return img[:h, :w].reshape(h // 2, 2, w // 2, 2).mean(axis=(1, 3))


def msssim_frame(
    ref: np.ndarray, dist: np.ndarray, params: SsimParams | None = None
) -> float:
    """Five-scale product: mean contrast-structure terms at scales 1..4 and
    the full SSIM at the coarsest, raised to the standard exponents."""
    params = params or SsimParams()
    ref = np.asarray(ref)
    dist = np.asarray(dist)
    if ref.shape != dist.shape:
        raise ShapeMismatch(f"frame shapes differ: {ref.shape} vs {dist.shape}")
    if min(ref.shape[0], ref.shape[1]) < MSSSIM_MIN_DIM:
        raise TooSmall(f"frame must be at least {MSSSIM_MIN_DIM} on each side")
    y_ref = luma(ref) if ref.ndim == 3 else np.asarray(ref, dtype=np.float64)
    y_dist = luma(dist) if dist.ndim == 3 else np.asarray(dist, dtype=np.float64)

    score = 1.0
    for scale, weight in enumerate(MSSSIM_WEIGHTS):
        ssim_map, cs_map = _ssim_cs_maps(y_ref, y_dist, params)
        if scale < len(MSSSIM_WEIGHTS) - 1:
            term = max(float(cs_map.mean()), 0.0)
            score *= term**weight
            y_ref = _halve(y_ref)
            y_dist = _halve(y_dist)
        else:
            term = max(float(ssim_map.mean()), 0.0)
            score *= term**weight
    return float(score)
