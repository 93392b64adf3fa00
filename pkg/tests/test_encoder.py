import numpy as np
import pytest
import torch

import winvert as wv
from winvert.encoder import build_encoder, load_encoder_checkpoint, save_encoder_checkpoint
from winvert.errors import ConfigurationError, UsageError, ValidationError
from winvert.types import EncoderConfig, ImageTensor, LatentCode

from conftest import TOY_ENCODER_CONFIG, random_image, random_latent


@pytest.fixture(scope="module")
def toy_encoder():
    return build_encoder(TOY_ENCODER_CONFIG, stage_index=1, init_seed=0)


def test_toy_config_output_shape(toy_encoder):
    rng = np.random.default_rng(0)
    w = wv.encode(toy_encoder, random_image(rng))
    assert (w.n_codes, w.dim) == (6, 16)
    assert np.isfinite(np.asarray(w.codes)).all()


def test_encode_deterministic(toy_encoder):
    rng = np.random.default_rng(1)
    x = random_image(rng)
    assert wv.encode(toy_encoder, x) == wv.encode(toy_encoder, x)


def test_taps_at_half_quarter_eighth(toy_encoder):
    x = torch.zeros(1, 3, 32, 32)
    deep, mid, shallow = toy_encoder.net.forward_taps(x)
    assert deep.shape[-1] == 4 and mid.shape[-1] == 8 and shallow.shape[-1] == 16


def test_zero_init_final_layers_give_zero_latent():
    e = build_encoder(TOY_ENCODER_CONFIG, stage_index=1, init_seed=0)
    with torch.no_grad():
        for head in (e.net.head_deep, e.net.head_mid, e.net.head_shallow):
            head.weight.zero_()
            head.bias.zero_()
    rng = np.random.default_rng(2)
    w = wv.encode(e, random_image(rng))
    assert np.array_equal(np.asarray(w.codes), np.zeros((6, 16), dtype=np.float32))


def test_wrong_resolution_rejected(toy_encoder):
    rng = np.random.default_rng(3)
    with pytest.raises(ValidationError):
        wv.encode(toy_encoder, random_image(rng, side=64))


def test_stage_mismatch_is_usage_error(toy_encoder):
    rng = np.random.default_rng(4)
    x = random_image(rng)
    w = random_latent(rng)
    with pytest.raises(UsageError):
        wv.encode_refine(toy_encoder, x, x, w)
    e2 = build_encoder(TOY_ENCODER_CONFIG, stage_index=2, init_seed=0)
    with pytest.raises(UsageError):
        wv.encode(e2, x)


def test_pool_exceeding_feature_map_lists_smallest_resolution():
    cfg = EncoderConfig(
        n_codes=6, dim=16, input_resolution=32, split=(3, 2, 1),
        pool_sizes=(7, 5, 3), backbone_spec="tiny",
    )
    with pytest.raises(ConfigurationError) as err:
        build_encoder(cfg, 1, 0)
    assert "56" in str(err.value)  # 8 * p_deep, rounded to a multiple of 8


def test_head_partition_by_tap():
    # perturbing one tap's features only changes that head's code block
    e = build_encoder(TOY_ENCODER_CONFIG, stage_index=1, init_seed=5)
    x = torch.from_numpy(
        np.random.default_rng(5).uniform(-1, 1, (1, 3, 32, 32)).astype(np.float32)
    )
    deep, mid, shallow = e.net.forward_taps(x)
    base = e.net.codes_from_taps(deep, mid, shallow)
    n1, n2, n3 = TOY_ENCODER_CONFIG.split

    pert = e.net.codes_from_taps(deep + 1.0, mid, shallow)
    delta = (pert - base).abs().sum(dim=2).squeeze(0)
    assert (delta[:n1] > 0).all() and (delta[n1:] == 0).all()

    pert = e.net.codes_from_taps(deep, mid + 1.0, shallow)
    delta = (pert - base).abs().sum(dim=2).squeeze(0)
    assert (delta[n1 : n1 + n2] > 0).all()
    assert (delta[:n1] == 0).all() and (delta[n1 + n2 :] == 0).all()

    pert = e.net.codes_from_taps(deep, mid, shallow + 1.0)
    delta = (pert - base).abs().sum(dim=2).squeeze(0)
    assert (delta[n1 + n2 :] > 0).all() and (delta[: n1 + n2] == 0).all()


def test_refinement_identity_at_initialization():
    e2 = build_encoder(TOY_ENCODER_CONFIG, stage_index=2, init_seed=6)
    rng = np.random.default_rng(6)
    for _ in range(5):
        x, render = random_image(rng), random_image(rng)
        prev = random_latent(rng)
        out = wv.encode_refine(e2, x, render, prev)
        assert np.array_equal(np.asarray(out.codes), np.asarray(prev.codes))


def test_refinement_additive_contract():
    e2 = build_encoder(TOY_ENCODER_CONFIG, stage_index=2, init_seed=7)
    with torch.no_grad():
        for head in (e2.net.head_deep, e2.net.head_mid, e2.net.head_shallow):
            head.weight.zero_()
            head.bias.fill_(0.25)  # forward becomes the constant 0.25
    rng = np.random.default_rng(7)
    x, render = random_image(rng), random_image(rng)
    prev = random_latent(rng)
    out = wv.encode_refine(e2, x, render, prev)
    assert np.allclose(
        np.asarray(out.codes), np.asarray(prev.codes) + 0.25, atol=1e-6
    )


def test_refine_resolution_mismatch():
    e2 = build_encoder(TOY_ENCODER_CONFIG, stage_index=2, init_seed=8)
    rng = np.random.default_rng(8)
    with pytest.raises(ValidationError):
        wv.encode_refine(e2, random_image(rng), random_image(rng, side=16), random_latent(rng))


def test_param_count_single_linear_layer():
    lin = torch.nn.Linear(10, 5)
    fake = build_encoder(TOY_ENCODER_CONFIG, 1, 0)
    fake.net.head_deep = None
    fake.net.head_mid = None
    fake.net.head_shallow = None
    base = wv.param_count(fake)
    fake.net.head_deep = lin
    assert wv.param_count(fake) - base == 55


def test_param_count_additivity_across_stages():
    e1 = build_encoder(TOY_ENCODER_CONFIG, 1, 0)
    e2 = build_encoder(TOY_ENCODER_CONFIG, 2, 0)
    total = wv.param_count(e1) + wv.param_count(e2)
    assert total == sum(wv.param_count(e) for e in (e1, e2))
    # refinement stage has a 6-channel stem, hence slightly more parameters
    assert wv.param_count(e2) > wv.param_count(e1)


def test_default_param_count_near_85m():
    e = build_encoder(EncoderConfig(), 1, 0)
    pc = wv.param_count(e)
    assert 72_250_000 <= pc <= 97_750_000


def _fd_oracle_and_autodiffs() -> tuple[float, float, float]:
    """f64 central-difference gradient of one backbone weight, plus the f32
    and f64 autodiff gradients of the same weight over the same network."""
    import copy

    e = build_encoder(TOY_ENCODER_CONFIG, 1, 9)
    x32 = torch.from_numpy(
        np.random.default_rng(9).uniform(-1, 1, (1, 3, 32, 32))
    ).float()

    out = e.net(x32).sum()
    e.net.zero_grad()
    out.backward()
    autograd_f32 = float(e.net.layer1[0].conv2.weight.grad[0, 0, 1, 1])

    e64 = copy.deepcopy(e)
    e64.net.zero_grad()
    e64.net.double()
    x64 = x32.double()
    param = e64.net.layer1[0].conv2.weight
    h = 1e-6
    with torch.no_grad():
        param[0, 0, 1, 1] += h
        up = float(e64.net(x64).sum())
        param[0, 0, 1, 1] -= 2 * h
        down = float(e64.net(x64).sum())
        param[0, 0, 1, 1] += h
    fd = (up - down) / (2 * h)

    out64 = e64.net(x64).sum()
    out64.backward()
    autograd_f64 = float(param.grad[0, 0, 1, 1])
    return fd, autograd_f32, autograd_f64


def test_gradient_check_backbone_parameter():
    # the oracle is computed at f64 (central differences at f32 cannot
    # resolve below this network's curvature); the tolerances bound the
    # autodiff precision at each compute dtype
    fd, ag32, ag64 = _fd_oracle_and_autodiffs()
    assert abs(ag32 - fd) / max(abs(fd), 1e-12) < 1e-3
    assert abs(ag64 - fd) / max(abs(fd), 1e-12) < 1e-4


def test_checkpoint_roundtrip(tmp_path):
    e = build_encoder(TOY_ENCODER_CONFIG, stage_index=2, init_seed=10)
    with torch.no_grad():
        e.net.head_deep.bias.fill_(0.5)
    save_encoder_checkpoint(e, tmp_path / "ck", epoch=3, loss_weights=(1, 0, 0, 0))
    loaded = load_encoder_checkpoint(tmp_path / "ck")
    assert loaded.stage_index == 2
    assert loaded.config == e.config
    for a, b in zip(loaded.net.state_dict().values(), e.net.state_dict().values()):
        assert torch.equal(a, b)
