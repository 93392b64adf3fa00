import numpy as np
import pytest
import torch

import winvert as wv
from winvert.errors import ValidationError
from winvert.extractors import (
    ExtractorSet,
    FeatureExtractor,
    identity_extractor,
    load_extractor,
    pyramid_extractor,
    randconv_extractor,
)
from winvert.losses import (
    multilayer_id_loss,
    multilayer_parsing_loss,
    perceptual_loss,
    pixel_loss,
    total_loss,
)
from winvert.types import ImageTensor, LossWeights

from conftest import random_image


def _pair_of_images(seed=0, side=8):
    rng = np.random.default_rng(seed)
    return random_image(rng, side), random_image(rng, side)


def _stub_vector_extractor(kind, vec_for):
    """5 levels, each returning a fixed vector chosen by input identity."""

    def level(_i):
        def fn(x):
            return vec_for(x)

        return fn

    return FeatureExtractor(name="stub", kind=kind, levels=tuple(level(i) for i in range(5)))


class TestPixelLoss:
    def test_zero_on_identical(self):
        x, _ = _pair_of_images()
        assert float(pixel_loss(x, x)) == 0.0

    def test_constant_offset_is_rms(self):
        # brute-force oracle: sqrt(sum((x-y)^2)/N) for y = x + 0.2
        rng = np.random.default_rng(1)
        px = rng.uniform(-1.0, 0.7, (8, 8, 3)).astype(np.float32)
        x = ImageTensor(px)
        y = ImageTensor(px + 0.2)
        brute = np.sqrt(np.sum((px - (px + 0.2)) ** 2) / px.size)
        got = float(pixel_loss(x, y))
        assert got == pytest.approx(0.2, abs=1e-6)
        assert got == pytest.approx(brute, abs=1e-7)

    def test_symmetry(self):
        x, y = _pair_of_images(2)
        assert float(pixel_loss(x, y)) == pytest.approx(float(pixel_loss(y, x)), abs=0)

    def test_raw_mode_is_unnormalized_norm(self):
        x, y = _pair_of_images(3)
        raw = float(pixel_loss(x, y, mode="raw"))
        brute = np.linalg.norm(np.asarray(x.pixels) - np.asarray(y.pixels))
        assert raw == pytest.approx(brute, rel=1e-6)

    def test_shape_mismatch(self):
        rng = np.random.default_rng(4)
        with pytest.raises(ValidationError):
            pixel_loss(random_image(rng, 8), random_image(rng, 16))

    def test_identity_of_indiscernibles(self):
        x, y = _pair_of_images(5)
        assert float(pixel_loss(x, y)) > 0.0


class TestPerceptualLoss:
    def test_zero_on_identical(self):
        x, _ = _pair_of_images(6)
        f = identity_extractor()
        assert float(perceptual_loss(x, x, f)) == 0.0

    def test_identity_extractor_reduces_to_pixel_distance(self):
        rng = np.random.default_rng(7)
        px = rng.uniform(-1.0, 0.7, (8, 8, 3)).astype(np.float32)
        x, y = ImageTensor(px), ImageTensor(px + 0.2)
        f = identity_extractor()
        assert float(perceptual_loss(x, y, f)) == pytest.approx(
            float(pixel_loss(x, y)), abs=1e-7
        )

    def test_monotone_in_perturbation_scale(self):
        # 100 random (x, eps): distance grows when the offset doubles
        rng = np.random.default_rng(8)
        f = randconv_extractor("perceptual", seed=0, n_levels=3)
        for _ in range(100):
            px = rng.uniform(-0.5, 0.5, (8, 8, 3)).astype(np.float32)
            eps = rng.uniform(0.01, 0.2)
            x = ImageTensor(px)
            y1 = ImageTensor(px + eps)
            y2 = ImageTensor(px + 2 * eps)
            assert float(perceptual_loss(x, y1, f)) < float(perceptual_loss(x, y2, f))

    def test_wrong_kind_rejected(self):
        x, y = _pair_of_images(9)
        with pytest.raises(ValidationError):
            perceptual_loss(x, y, pyramid_extractor("identity", 5))


class TestMultilayerLosses:
    def test_zero_on_identical(self):
        x, _ = _pair_of_images(10)
        r = pyramid_extractor("identity", 5)
        assert float(multilayer_id_loss(x, x, r)) == pytest.approx(0.0, abs=1e-6)

    def test_orthogonal_features_give_five(self):
        x, y = _pair_of_images(11)
        e1 = torch.zeros(1, 4)
        e1[0, 0] = 1.0
        e2 = torch.zeros(1, 4)
        e2[0, 1] = 1.0
        xt = x.to_tensor().unsqueeze(0)

        def vec_for(t):
            return e1 if torch.equal(t, xt) else e2

        stub = _stub_vector_extractor("identity", vec_for)
        assert float(multilayer_id_loss(x, y, stub)) == pytest.approx(5.0, abs=1e-6)

    def test_antiparallel_features_give_ten(self):
        x, y = _pair_of_images(12)
        e1 = torch.ones(1, 4)
        xt = x.to_tensor().unsqueeze(0)

        def vec_for(t):
            return e1 if torch.equal(t, xt) else -e1

        stub = _stub_vector_extractor("identity", vec_for)
        assert float(multilayer_id_loss(x, y, stub)) == pytest.approx(10.0, abs=1e-6)

    def test_zero_norm_feature_warns_and_counts_one(self):
        x, y = _pair_of_images(13)
        xt = x.to_tensor().unsqueeze(0)

        def vec_for(t):
            return torch.zeros(1, 4) if torch.equal(t, xt) else torch.ones(1, 4)

        stub = _stub_vector_extractor("identity", vec_for)
        with pytest.warns(RuntimeWarning):
            val = float(multilayer_id_loss(x, y, stub))
        assert val == pytest.approx(5.0, abs=1e-6)  # deficit 1 per level

    def test_parsing_loss_equals_id_loss_on_same_stub(self):
        x, y = _pair_of_images(14)
        id_stub = pyramid_extractor("identity", 5)
        par_stub = pyramid_extractor("parsing", 5)
        assert float(multilayer_id_loss(x, y, id_stub)) == pytest.approx(
            float(multilayer_parsing_loss(x, y, par_stub)), abs=0
        )

    def test_level_count_enforced(self):
        x, y = _pair_of_images(15)
        with pytest.raises(ValidationError):
            multilayer_id_loss(x, y, pyramid_extractor("identity", 3))

    def test_range_bound(self):
        rng = np.random.default_rng(16)
        r = randconv_extractor("identity", seed=1, n_levels=5)
        for _ in range(10):
            x, y = random_image(rng, 8), random_image(rng, 8)
            v = float(multilayer_id_loss(x, y, r))
            assert 0.0 <= v <= 10.0


class TestTotalLoss:
    def test_zero_on_identical_with_all_terms(self):
        x, _ = _pair_of_images(17)
        total, breakdown = total_loss(x, x, LossWeights(), ExtractorSet.toy())
        assert float(total) == pytest.approx(0.0, abs=1e-6)
        assert all(v == pytest.approx(0.0, abs=1e-6) for v in breakdown.values())

    def test_unit_stub_terms_combine_to_3_3(self):
        # engineer inputs/extractors so all four unweighted terms equal 1
        rng = np.random.default_rng(18)
        px = rng.uniform(-0.5, 0.0, (8, 8, 3)).astype(np.float32)
        x = ImageTensor(px)
        y = ImageTensor(px + 1.0)  # pixel RMS = 1
        xt = x.to_tensor().unsqueeze(0)

        def vec_for(t):
            # cos = 0.8 -> per-level deficit 0.2, sum over 5 levels = 1
            e1 = torch.tensor([[1.0, 0.0]])
            e2 = torch.tensor([[0.8, 0.6]])
            return e1 if torch.equal(t, xt) else e2

        extractors = ExtractorSet(
            perceptual=identity_extractor(),  # term = pixel RMS = 1
            identity=_stub_vector_extractor("identity", vec_for),
            parsing=_stub_vector_extractor("parsing", vec_for),
        )
        total, breakdown = total_loss(x, y, LossWeights(), extractors)
        assert breakdown["pixel"] == pytest.approx(1.0, abs=1e-5)
        assert breakdown["perceptual"] == pytest.approx(1.0, abs=1e-5)
        assert breakdown["identity"] == pytest.approx(1.0, abs=1e-5)
        assert breakdown["parsing"] == pytest.approx(1.0, abs=1e-5)
        assert float(total) == pytest.approx(3.3, abs=1e-4)

    def test_pixel_only_projection(self):
        x, y = _pair_of_images(19)
        total, _ = total_loss(x, y, LossWeights(1, 0, 0, 0))
        assert float(total) == pytest.approx(float(pixel_loss(x, y)), abs=0)

    def test_negative_weights_rejected(self):
        with pytest.raises(ValidationError):
            LossWeights(-1.0, 0.8, 0.5, 1.0)

    def test_missing_extractor_with_nonzero_weight(self):
        x, y = _pair_of_images(20)
        with pytest.raises(ValidationError):
            total_loss(x, y, LossWeights(), ExtractorSet())

    def test_linearity_in_weights(self):
        x, y = _pair_of_images(21)
        ex = ExtractorSet.toy()
        a = LossWeights(0.3, 0.1, 0.4, 0.2)
        b = LossWeights(0.7, 0.7, 0.1, 0.8)
        ab = LossWeights(1.0, 0.8, 0.5, 1.0)
        ta, _ = total_loss(x, y, a, ex)
        tb, _ = total_loss(x, y, b, ex)
        tab, _ = total_loss(x, y, ab, ex)
        assert float(tab) == pytest.approx(float(ta) + float(tb), abs=1e-6)

    def test_gradient_matches_finite_differences_f64(self):
        # full-vector check: every coordinate of d(total)/dy against central
        # finite differences
        rng = np.random.default_rng(22)
        x = torch.from_numpy(rng.uniform(-0.5, 0.5, (3, 8, 8))).to(torch.float64)
        y = torch.from_numpy(rng.uniform(-0.5, 0.5, (3, 8, 8))).to(torch.float64)
        y.requires_grad_(True)
        ex = ExtractorSet.toy()
        total, _ = total_loss(x, y, LossWeights(), ex)
        total.backward()
        autograd = y.grad.detach().clone()

        h = 1e-6
        fd = torch.zeros_like(autograd)
        with torch.no_grad():
            flat = y.detach().clone().reshape(-1)
            for i in range(flat.numel()):
                yp = flat.clone()
                yp[i] += h
                ym = flat.clone()
                ym[i] -= h
                up, _ = total_loss(x, yp.reshape(3, 8, 8), LossWeights(), ex)
                dn, _ = total_loss(x, ym.reshape(3, 8, 8), LossWeights(), ex)
                fd.reshape(-1)[i] = (float(up) - float(dn)) / (2 * h)
        rel = (autograd - fd).norm() / fd.norm()
        assert float(rel) < 1e-4

    def test_nonnegative_on_random_inputs(self):
        rng = np.random.default_rng(23)
        ex = ExtractorSet.toy()
        for _ in range(10):
            x, y = random_image(rng, 8), random_image(rng, 8)
            total, breakdown = total_loss(x, y, LossWeights(), ex)
            assert float(total) >= 0.0
            assert all(v >= 0.0 for v in breakdown.values())


class TestManifests:
    def test_builtin_manifest_loading(self):
        f = load_extractor({"name": "pyramid", "kind": "identity", "n_levels": 5})
        assert f.kind == "identity" and len(f.levels) == 5

    def test_unknown_extractor_is_asset_error(self):
        from winvert.errors import AssetError

        with pytest.raises(AssetError):
            load_extractor({"name": "arcface-50", "kind": "identity"})
