"""Feed-forward StyleGAN inversion toolkit.

Hierarchical encoder with staged residual refinement, multi-layer training
losses, latent-space editing applications, secure latent hiding, metrics
and baselines, plus a CLI and an interactive editing service.
"""

__version__ = "0.1.0"

from .types import EncoderConfig, ImageTensor, LatentCode, LossWeights
from .latent_io import latent_byte_size, read_latent, write_latent
from .generator import (
    GeneratorHandle,
    load_pretrained_generator,
    make_toy_generator,
    mean_latent,
    synthesize,
)
from .encoder import (
    Encoder,
    build_encoder,
    encode,
    encode_refine,
    load_encoder_checkpoint,
    param_count,
    save_encoder_checkpoint,
)
from .extractors import ExtractorSet, FeatureExtractor, load_extractor
from .losses import (
    multilayer_id_loss,
    multilayer_parsing_loss,
    perceptual_loss,
    pixel_loss,
    total_loss,
)
from .train import TrainConfig, augment, invert, train_stage
from .splitsearch import SplitResult, SplitSearchConfig, search_latent_split
from .metrics import identity_similarity, psnr, ssim
from .bench import BenchReport, BenchSample, invert_by_optimization, run_benchmark
from .editing import (
    SemanticDirection,
    interpolate,
    manipulate,
    paste_center,
    style_mix,
)
from .stego import StegoPayload, capacity_bits, hide, payload_bits, reveal
from .service import create_app

__all__ = [
    "BenchReport",
    "BenchSample",
    "Encoder",
    "EncoderConfig",
    "ExtractorSet",
    "FeatureExtractor",
    "GeneratorHandle",
    "ImageTensor",
    "LatentCode",
    "LossWeights",
    "SemanticDirection",
    "SplitResult",
    "SplitSearchConfig",
    "StegoPayload",
    "TrainConfig",
    "augment",
    "build_encoder",
    "capacity_bits",
    "create_app",
    "encode",
    "encode_refine",
    "hide",
    "identity_similarity",
    "interpolate",
    "invert",
    "invert_by_optimization",
    "latent_byte_size",
    "load_encoder_checkpoint",
    "load_extractor",
    "load_pretrained_generator",
    "make_toy_generator",
    "manipulate",
    "mean_latent",
    "multilayer_id_loss",
    "multilayer_parsing_loss",
    "param_count",
    "paste_center",
    "payload_bits",
    "perceptual_loss",
    "pixel_loss",
    "psnr",
    "read_latent",
    "reveal",
    "run_benchmark",
    "save_encoder_checkpoint",
    "search_latent_split",
    "ssim",
    "style_mix",
    "synthesize",
    "total_loss",
    "train_stage",
    "write_latent",
]
