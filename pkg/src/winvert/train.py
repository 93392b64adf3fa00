"""Staged encoder training, task augmentations, and the inversion recursion.

Stage 1 learns image -> latent directly; each refinement stage t > 1 sees
the concatenation of the input and the previous stage's render and learns a
residual on the previous latent, with every earlier stage frozen.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import torch

from .encoder import Encoder, build_encoder, save_encoder_checkpoint
from .errors import DataError, TrainingDivergedError, ValidationError
from .extractors import ExtractorSet
from .generator import GeneratorHandle
from .images import grayscale, hflip, load_image, resize_chw
from .losses import total_loss
from .optimizers import make_ranger
from .types import EncoderConfig, ImageTensor, LatentCode, LossWeights

TASKS = (
    "inversion",
    "colorization",
    "inpainting",
    "super_resolution",
    "sketch2image",
    "seg2image",
)
_TRANSLATION_TASKS = ("sketch2image", "seg2image")


@dataclass(frozen=True)
class TrainConfig:
    base_learning_rate: float = 1e-4
    epochs: int = 25
    batch_size: int = 8
    flip_probability: float = 0.5
    loss_weights: LossWeights = field(default_factory=LossWeights)
    task: str = "inversion"
    seed: int = 0
    max_steps: int | None = None

    def __post_init__(self):
        if self.base_learning_rate <= 0:
            raise ValidationError("learning rate must be > 0")
        if self.epochs < 1:
            raise ValidationError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValidationError("batch_size must be >= 1")
        if not 0.0 <= self.flip_probability <= 1.0:
            raise ValidationError("flip_probability must be in [0, 1]")
        if self.task not in TASKS:
            raise ValidationError(f"task must be one of {TASKS}, got {self.task!r}")
        if self.max_steps is not None and self.max_steps < 1:
            raise ValidationError("max_steps must be >= 1 when set")


def augment(
    x: ImageTensor,
    paired_aux: ImageTensor | None,
    task: str,
    rng: np.random.Generator | None = None,
) -> tuple[ImageTensor, ImageTensor]:
    """Build the (input, target) pair for a task from one source image."""
    if task not in TASKS:
        raise ValidationError(f"unknown task {task!r}")
    rng = rng if rng is not None else np.random.default_rng(0)
    if task == "inversion":
        return x, x
    if task == "colorization":
        return grayscale(x), x
    if task == "inpainting":
        h, w = x.height, x.width
        bh = int(round(rng.uniform(0.25, 0.5) * h))
        bw = int(round(rng.uniform(0.25, 0.5) * w))
        top = int(rng.integers(0, h - bh + 1))
        left = int(rng.integers(0, w - bw + 1))
        px = np.array(x.pixels)
        px[top : top + bh, left : left + bw, :] = 0.0
        return ImageTensor(px), x
    if task == "super_resolution":
        s = int(rng.choice([1, 2, 4, 8, 16]))
        if s == 1:
            return x, x
        if x.height % s or x.width % s:
            raise ValidationError(f"image {x.resolution} not divisible by scale {s}")
        t = x.to_tensor().unsqueeze(0)
        low = torch.nn.functional.avg_pool2d(t, s)
        up = torch.nn.functional.interpolate(
            low, size=(x.height, x.width), mode="bilinear", align_corners=False
        )
        return ImageTensor.from_tensor(up.squeeze(0)), x
    # translation tasks: the aux (sketch / segmentation map) becomes the input
    if paired_aux is None:
        raise DataError(f"task {task!r} needs a paired auxiliary image")
    if paired_aux.resolution != x.resolution:
        raise DataError(
            f"aux resolution {paired_aux.resolution} does not match target {x.resolution}"
        )
    return paired_aux, x


def load_dataset(
    directory: str | Path, paired_directory: str | Path | None = None
) -> list[tuple[ImageTensor, ImageTensor | None]]:
    """Directory of images; translation tasks pair by matching filename."""
    directory = Path(directory)
    exts = {".png", ".jpg", ".jpeg", ".bmp"}
    files = sorted(p for p in directory.iterdir() if p.suffix.lower() in exts)
    if not files:
        raise DataError(f"no images found in {directory}")
    pairs: list[tuple[ImageTensor, ImageTensor | None]] = []
    for p in files:
        aux = None
        if paired_directory is not None:
            ap = Path(paired_directory) / p.name
            if not ap.exists():
                raise DataError(f"missing paired file for {p.name} in {paired_directory}")
            aux = load_image(ap)
        pairs.append((load_image(p), aux))
    return pairs


def _normalize_dataset(dataset) -> list[tuple[ImageTensor, ImageTensor | None]]:
    if isinstance(dataset, (str, Path)):
        return load_dataset(dataset)
    items = list(dataset)
    if not items:
        raise ValidationError("dataset is empty")
    out = []
    for item in items:
        if isinstance(item, ImageTensor):
            out.append((item, None))
        else:
            x, aux = item
            out.append((x, aux))
    return out


def sample_generator_images(g: GeneratorHandle, n: int, seed: int) -> list[ImageTensor]:
    """Synthesize n images from unit-normal latents (toy dataset maker)."""
    rng = np.random.default_rng(seed)
    out = []
    with torch.no_grad():
        for _ in range(n):
            w = torch.from_numpy(
                rng.standard_normal((1, g.n_codes, g.dim)).astype(np.float32)
            )
            out.append(ImageTensor.from_tensor(g.synthesize_tensor(w).squeeze(0)))
    return out


def _pipeline_latents(
    prev_stages: Sequence[Encoder],
    g: GeneratorHandle,
    x: torch.Tensor,
    side: int,
) -> torch.Tensor:
    """Frozen forward through stages 1..k for a batch; returns W_k."""
    w = prev_stages[0].net(x)
    for enc in prev_stages[1:]:
        render = resize_chw(g.synthesize_tensor(w), side)
        w = enc.net(torch.cat([x, render], dim=1)) + w
    return w


@dataclass
class StageResult:
    encoder: Encoder
    history: list[dict]
    checkpoint_dir: Path | None = None


def train_stage(
    stage: int,
    dataset,
    generator: GeneratorHandle,
    prev_stages: Sequence[Encoder],
    cfg: TrainConfig,
    encoder_config: EncoderConfig | None = None,
    extractors: ExtractorSet | None = None,
    out_dir: str | Path | None = None,
) -> StageResult:
    """Train the encoder of one stage with all earlier stages frozen.

    Optimizes the full weighted loss between the target image and the
    synthesis of the stage's latent, over this stage's parameters only.
    """
    if stage != len(prev_stages) + 1:
        raise ValidationError(
            f"stage {stage} does not follow the {len(prev_stages)} given previous stages"
        )
    data = _normalize_dataset(dataset)
    if encoder_config is None:
        if prev_stages:
            encoder_config = prev_stages[0].config
        else:
            raise ValidationError("encoder_config is required for stage 1")
    for i, enc in enumerate(prev_stages):
        if enc.stage_index != i + 1:
            raise ValidationError("prev_stages must be stages 1..k in order")
        enc.freeze()

    side = encoder_config.input_resolution
    rng = np.random.default_rng(cfg.seed)
    encoder = build_encoder(encoder_config, stage_index=stage, init_seed=cfg.seed + stage)
    encoder.net.train()
    opt = make_ranger(encoder.trainable_parameters(), cfg.base_learning_rate)

    def build_pairs() -> list[tuple[torch.Tensor, torch.Tensor]]:
        # fresh augmentation/flip draws from the seeded stream each epoch
        pairs = []
        for x, aux in data:
            inp, tgt = augment(x, aux, cfg.task, rng)
            if rng.random() < cfg.flip_probability:
                inp, tgt = hflip(inp), hflip(tgt)
            if inp.resolution != (side, side) or tgt.resolution != (side, side):
                raise ValidationError(
                    f"dataset resolution {inp.resolution} does not match encoder "
                    f"input {side}x{side}"
                )
            pairs.append((inp.to_tensor(), tgt.to_tensor()))
        return pairs

    history: list[dict] = []
    step = 0
    done = False
    for epoch in range(cfg.epochs):
        pairs = build_pairs()
        order = rng.permutation(len(pairs))
        epoch_losses: list[float] = []
        breakdown_sums: dict[str, float] = {}
        for start in range(0, len(order), cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            xb = torch.stack([pairs[i][0] for i in idx])
            tb = torch.stack([pairs[i][1] for i in idx])
            if stage == 1:
                w = encoder.net(xb)
            else:
                with torch.no_grad():
                    w_prev = _pipeline_latents(prev_stages, generator, xb, side)
                    render = resize_chw(generator.synthesize_tensor(w_prev), side)
                w = encoder.net(torch.cat([xb, render], dim=1)) + w_prev
            recon = resize_chw(generator.synthesize_tensor(w), side)
            loss, breakdown = total_loss(tb, recon, cfg.loss_weights, extractors)
            if not torch.isfinite(loss):
                diagnostics = {
                    "stage": stage,
                    "epoch": epoch,
                    "step": step,
                    "breakdown": breakdown,
                    "history": history,
                }
                if out_dir is not None:
                    Path(out_dir).mkdir(parents=True, exist_ok=True)
                    (Path(out_dir) / "diagnostics.json").write_text(
                        json.dumps(diagnostics, indent=2, default=float)
                    )
                raise TrainingDivergedError(
                    f"non-finite loss at stage {stage} step {step}", diagnostics
                )
            opt.zero_grad()
            loss.backward()
            opt.step()
            epoch_losses.append(float(loss.detach()))
            for k, v in breakdown.items():
                breakdown_sums[k] = breakdown_sums.get(k, 0.0) + v
            step += 1
            if cfg.max_steps is not None and step >= cfg.max_steps:
                done = True
                break
        n_batches = len(epoch_losses)
        history.append(
            {
                "epoch": epoch,
                "steps": step,
                "loss": float(np.mean(epoch_losses)) if epoch_losses else float("nan"),
                **{f"term_{k}": v / max(n_batches, 1) for k, v in breakdown_sums.items()},
            }
        )
        if done:
            break

    encoder.freeze()
    ckpt_dir = None
    if out_dir is not None:
        ckpt_dir = save_encoder_checkpoint(
            encoder,
            Path(out_dir) / f"stage{stage}",
            epoch=len(history),
            loss_weights=cfg.loss_weights.as_tuple(),
        )
        (Path(out_dir) / f"stage{stage}" / "history.json").write_text(
            json.dumps(history, indent=2)
        )
    return StageResult(encoder=encoder, history=history, checkpoint_dir=ckpt_dir)


def invert(
    pipeline: Sequence[Encoder],
    g: GeneratorHandle,
    x: ImageTensor,
    n_stages: int | None = None,
) -> tuple[LatentCode, ImageTensor]:
    """Run the staged inversion recursion and return (latent, render)."""
    pipeline = list(pipeline)
    if not pipeline:
        raise ValidationError("pipeline is empty")
    n_stages = len(pipeline) if n_stages is None else n_stages
    if not 1 <= n_stages <= len(pipeline):
        raise ValidationError(
            f"n_stages={n_stages} outside [1, {len(pipeline)}] for this pipeline"
        )
    for i, enc in enumerate(pipeline[:n_stages]):
        if enc.stage_index != i + 1:
            raise ValidationError(
                f"pipeline position {i} holds stage {enc.stage_index}, expected {i + 1}"
            )
    side = pipeline[0].config.input_resolution
    if x.resolution != (side, side):
        raise ValidationError(
            f"input resolution {x.resolution} does not match encoder input {side}x{side}"
        )
    xt = x.to_tensor().unsqueeze(0)
    with torch.no_grad():
        w = pipeline[0].net(xt)
        for enc in pipeline[1:n_stages]:
            render = resize_chw(g.synthesize_tensor(w), side)
            w = enc.net(torch.cat([xt, render], dim=1)) + w
        final = g.synthesize_tensor(w)
    return LatentCode.from_tensor(w.squeeze(0)), ImageTensor.from_tensor(final.squeeze(0))
