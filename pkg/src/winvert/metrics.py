"""Image quality metrics over the [-1, 1] value convention.

PSNR uses the full nominal peak-to-peak range (2.0). SSIM follows the
standard Gaussian-window formulation (11x11, sigma 1.5, K1=0.01, K2=0.03)
on Rec. 601 luminance remapped to [0, 1], with valid-mode windows.
"""

from __future__ import annotations

import math
import warnings
from typing import Callable

import numpy as np
from scipy.signal import convolve2d

from .errors import ValidationError
from .images import LUMA_WEIGHTS
from .types import ImageTensor

PEAK = 2.0


def _pixels(x) -> np.ndarray:
    if isinstance(x, ImageTensor):
        return np.asarray(x.pixels, dtype=np.float64)
    return np.asarray(x, dtype=np.float64)


def _pair(x, y) -> tuple[np.ndarray, np.ndarray]:
    a, b = _pixels(x), _pixels(y)
    if a.shape != b.shape:
        raise ValidationError(f"shape mismatch: {a.shape} vs {b.shape}")
    return a, b


def psnr(x, y) -> float:
    """Peak signal-to-noise ratio in dB; +inf when the images are identical."""
    a, b = _pair(x, y)
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(PEAK**2 / mse)


def _gaussian_kernel(size: int, sigma: float) -> np.ndarray:
    r = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    g = np.exp(-(r**2) / (2.0 * sigma**2))
    k = np.outer(g, g)
    return k / k.sum()


def _luminance01(a: np.ndarray) -> np.ndarray:
    lum = a @ LUMA_WEIGHTS.astype(np.float64)
    return (lum + 1.0) / 2.0


def ssim(x, y, window: int = 11, sigma: float = 1.5) -> float:
    """Mean local structural similarity over luminance; in [-1, 1]."""
    a, b = _pair(x, y)
    if a.ndim != 3 or a.shape[2] != 3:
        raise ValidationError(f"expected (H, W, 3) images, got {a.shape}")
    if window < 1 or window > min(a.shape[0], a.shape[1]):
        raise ValidationError(
            f"window {window} must be in [1, {min(a.shape[0], a.shape[1])}]"
        )
    la, lb = _luminance01(a), _luminance01(b)
    k = _gaussian_kernel(window, sigma)
    c1 = (0.01 * 1.0) ** 2
    c2 = (0.03 * 1.0) ** 2

    mu_a = convolve2d(la, k, mode="valid")
    mu_b = convolve2d(lb, k, mode="valid")
    var_a = convolve2d(la * la, k, mode="valid") - mu_a**2
    var_b = convolve2d(lb * lb, k, mode="valid") - mu_b**2
    cov = convolve2d(la * lb, k, mode="valid") - mu_a * mu_b
    num = (2 * mu_a * mu_b + c1) * (2 * cov + c2)
    den = (mu_a**2 + mu_b**2 + c1) * (var_a + var_b + c2)
    return float(np.mean(num / den))


def identity_similarity(x, y, embedder: Callable[[ImageTensor], np.ndarray]) -> float:
    """Cosine similarity of the embedder's vectors for the two images."""
    ex = np.asarray(embedder(x), dtype=np.float64).ravel()
    ey = np.asarray(embedder(y), dtype=np.float64).ravel()
    nx, ny = np.linalg.norm(ex), np.linalg.norm(ey)
    if nx == 0.0 or ny == 0.0:
        warnings.warn("zero-norm embedding; similarity defined as 0", RuntimeWarning)
        return 0.0
    return float(np.dot(ex, ey) / (nx * ny))


def luminance_embedder(side: int = 8) -> Callable[[ImageTensor], np.ndarray]:
    """Deterministic toy embedder: downsampled luminance, flattened."""
    from .images import resize_image

    def embed(img: ImageTensor) -> np.ndarray:
        small = resize_image(img, side, side)
        return _luminance01(np.asarray(small.pixels, dtype=np.float64)).ravel()

    return embed
