import os

import numpy as np
import pytest
import torch

# the suite is CPU-bound; use whatever cores the box exposes
torch.set_num_threads(os.cpu_count() or 1)

import winvert as wv
from winvert.types import EncoderConfig

TOY_ENCODER_CONFIG = EncoderConfig(
    n_codes=6,
    dim=16,
    input_resolution=32,
    split=(3, 2, 1),
    pool_sizes=(2, 2, 2),
    backbone_spec="tiny",
)


@pytest.fixture(scope="session")
def toy_generator():
    return wv.make_toy_generator(7, 6, 16, 32)


@pytest.fixture(scope="session")
def toy_encoder_config():
    return TOY_ENCODER_CONFIG


@pytest.fixture(scope="session")
def toy_images(toy_generator):
    from winvert.train import sample_generator_images

    return sample_generator_images(toy_generator, 8, seed=11)


def random_latent(rng: np.random.Generator, n_codes=6, dim=16) -> wv.LatentCode:
    return wv.LatentCode(rng.standard_normal((n_codes, dim)).astype(np.float32))


def random_image(rng: np.random.Generator, side=32) -> wv.ImageTensor:
    return wv.ImageTensor(
        rng.uniform(-1.0, 1.0, size=(side, side, 3)).astype(np.float32)
    )
