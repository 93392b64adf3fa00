import math

import numpy as np
import pytest

from winvert.errors import ValidationError
from winvert.images import LUMA_WEIGHTS
from winvert.metrics import identity_similarity, luminance_embedder, psnr, ssim
from winvert.types import ImageTensor

from conftest import random_image


def brute_force_psnr(a, b):
    a = np.asarray(a.pixels, dtype=np.float64)
    b = np.asarray(b.pixels, dtype=np.float64)
    acc = 0.0
    for v1, v2 in zip(a.ravel(), b.ravel()):
        acc += (v1 - v2) ** 2
    mse = acc / a.size
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(4.0 / mse)


def brute_force_ssim(a, b, window=11, sigma=1.5):
    """Direct per-window loops; independent of the filter-based implementation."""
    a = np.asarray(a.pixels, dtype=np.float64)
    b = np.asarray(b.pixels, dtype=np.float64)
    la = ((a @ LUMA_WEIGHTS.astype(np.float64)) + 1.0) / 2.0
    lb = ((b @ LUMA_WEIGHTS.astype(np.float64)) + 1.0) / 2.0
    r = np.arange(window, dtype=np.float64) - (window - 1) / 2.0
    g1 = np.exp(-(r**2) / (2 * sigma**2))
    k = np.outer(g1, g1)
    k /= k.sum()
    c1, c2 = 0.01**2, 0.03**2
    h, w = la.shape
    vals = []
    for i in range(h - window + 1):
        for j in range(w - window + 1):
            wa = la[i : i + window, j : j + window]
            wb = lb[i : i + window, j : j + window]
            mu_a = float((wa * k).sum())
            mu_b = float((wb * k).sum())
            var_a = float((wa * wa * k).sum()) - mu_a**2
            var_b = float((wb * wb * k).sum()) - mu_b**2
            cov = float((wa * wb * k).sum()) - mu_a * mu_b
            vals.append(
                ((2 * mu_a * mu_b + c1) * (2 * cov + c2))
                / ((mu_a**2 + mu_b**2 + c1) * (var_a + var_b + c2))
            )
    return float(np.mean(vals))


class TestPsnr:
    def test_identical_images_are_inf(self):
        rng = np.random.default_rng(0)
        x = random_image(rng)
        assert psnr(x, x) == math.inf

    def test_constant_offset_is_20db(self):
        rng = np.random.default_rng(1)
        px = rng.uniform(-1.0, 0.8, (16, 16, 3)).astype(np.float32)
        x, y = ImageTensor(px), ImageTensor(px + 0.2)
        assert psnr(x, y) == pytest.approx(20.0, abs=1e-4)
        assert psnr(x, y) == pytest.approx(brute_force_psnr(x, y), abs=1e-9)

    def test_symmetry(self):
        rng = np.random.default_rng(2)
        x, y = random_image(rng), random_image(rng)
        assert psnr(x, y) == psnr(y, x)

    def test_shape_mismatch(self):
        rng = np.random.default_rng(3)
        with pytest.raises(ValidationError):
            psnr(random_image(rng, 8), random_image(rng, 16))


class TestSsim:
    def test_identical_images_are_one(self):
        rng = np.random.default_rng(4)
        x = random_image(rng, 16)
        assert ssim(x, x) == pytest.approx(1.0, abs=1e-12)

    def test_identical_constants_are_one(self):
        x = ImageTensor(np.zeros((16, 16, 3), dtype=np.float32))
        y = ImageTensor(np.zeros((16, 16, 3), dtype=np.float32))
        assert ssim(x, y) == pytest.approx(1.0, abs=1e-12)

    def test_matches_brute_force_oracle(self):
        rng = np.random.default_rng(5)
        for _ in range(5):
            x, y = random_image(rng, 24), random_image(rng, 24)
            assert ssim(x, y) == pytest.approx(brute_force_ssim(x, y), abs=1e-6)

    def test_window_validation(self):
        rng = np.random.default_rng(6)
        with pytest.raises(ValidationError):
            ssim(random_image(rng, 8), random_image(rng, 8), window=9)

    def test_range(self):
        rng = np.random.default_rng(7)
        for _ in range(5):
            x, y = random_image(rng, 16), random_image(rng, 16)
            assert -1.0 <= ssim(x, y) <= 1.0


class TestIdentitySimilarity:
    def test_identical_images_are_one(self):
        rng = np.random.default_rng(8)
        x = random_image(rng)
        assert identity_similarity(x, x, luminance_embedder()) == pytest.approx(1.0)

    def test_orthogonal_stub_is_zero(self):
        rng = np.random.default_rng(9)
        x, y = random_image(rng), random_image(rng)
        table = {id(x): np.array([1.0, 0.0]), id(y): np.array([0.0, 1.0])}
        sim = identity_similarity(x, y, lambda img: table[id(img)])
        assert sim == pytest.approx(0.0, abs=0)

    def test_zero_norm_embedding_warns(self):
        rng = np.random.default_rng(10)
        x, y = random_image(rng), random_image(rng)
        with pytest.warns(RuntimeWarning):
            sim = identity_similarity(x, y, lambda img: np.zeros(4))
        assert sim == 0.0
