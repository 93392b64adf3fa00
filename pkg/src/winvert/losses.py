"""Training losses: pixel distance, perceptual feature distance, multi-layer
identity and parsing cosine losses, and their weighted sum.

All functions accept ImageTensor values or torch tensors of shape (3, H, W)
or (B, 3, H, W) and return 0-dim torch tensors, so they can sit directly in
an autograd graph. The pixel norm defaults to root-mean-square over
elements so every term shares a resolution-independent scale; pass
``mode="raw"`` for the unnormalized vector norm.
"""

from __future__ import annotations

import warnings
from typing import Mapping

import torch

from .errors import ValidationError
from .extractors import ExtractorSet, FeatureExtractor
from .types import ImageTensor, LossWeights, as_chw_tensor


def _batched(x) -> torch.Tensor:
    t = as_chw_tensor(x)
    return t.unsqueeze(0) if t.dim() == 3 else t


def _pair(x, y) -> tuple[torch.Tensor, torch.Tensor]:
    tx, ty = _batched(x), _batched(y)
    if tx.shape != ty.shape:
        raise ValidationError(f"shape mismatch: {tuple(tx.shape)} vs {tuple(ty.shape)}")
    if tx.dtype != ty.dtype:
        common = torch.promote_types(tx.dtype, ty.dtype)
        tx, ty = tx.to(common), ty.to(common)
    return tx, ty


def _rms(diff: torch.Tensor) -> torch.Tensor:
    # per-sample RMS, averaged over the batch
    return diff.flatten(1).pow(2).mean(dim=1).sqrt().mean()


def pixel_loss(x, y, mode: str = "rms") -> torch.Tensor:
    """L2 pixel distance; RMS-normalized by default."""
    tx, ty = _pair(x, y)
    diff = tx - ty
    if mode == "rms":
        return _rms(diff)
    if mode == "raw":
        return diff.flatten(1).pow(2).sum(dim=1).sqrt().mean()
    raise ValidationError(f"mode must be 'rms' or 'raw', got {mode!r}")


def perceptual_loss(x, y, f: FeatureExtractor) -> torch.Tensor:
    """Sum over extractor levels of RMS feature distances."""
    if f.kind != "perceptual":
        raise ValidationError(f"extractor kind must be 'perceptual', got {f.kind!r}")
    tx, ty = _pair(x, y)
    total = None
    for level in f.levels:
        d = _rms(level(tx) - level(ty))
        total = d if total is None else total + d
    return total


def _cosine_deficit_sum(x, y, extractor: FeatureExtractor, expect_kind: str) -> torch.Tensor:
    if extractor.kind != expect_kind:
        raise ValidationError(
            f"extractor kind must be {expect_kind!r}, got {extractor.kind!r}"
        )
    if len(extractor.levels) != 5:
        raise ValidationError(
            f"multi-layer {expect_kind} loss expects exactly 5 levels, "
            f"got {len(extractor.levels)}"
        )
    tx, ty = _pair(x, y)
    total = None
    for i, level in enumerate(extractor.levels):
        fx = level(tx).flatten(1)
        fy = level(ty).flatten(1)
        nx = fx.norm(dim=1)
        ny = fy.norm(dim=1)
        ok = (nx > 0) & (ny > 0)
        if not bool(ok.all()):
            warnings.warn(
                f"zero-norm feature at {expect_kind} level {i}; cosine defined as 0",
                RuntimeWarning,
                stacklevel=3,
            )
        dot = (fx * fy).sum(dim=1)
        cos = torch.where(ok, dot / (nx * ny).clamp_min(torch.finfo(fx.dtype).tiny),
                          torch.zeros_like(dot))
        deficit = (1.0 - cos).mean()
        total = deficit if total is None else total + deficit
    return total


def multilayer_id_loss(x, y, r: FeatureExtractor) -> torch.Tensor:
    """Sum over 5 recognition-feature levels of (1 - cosine similarity)."""
    return _cosine_deficit_sum(x, y, r, "identity")


def multilayer_parsing_loss(x, y, p: FeatureExtractor) -> torch.Tensor:
    """Same construction as the identity loss, over parsing features."""
    return _cosine_deficit_sum(x, y, p, "parsing")


def total_loss(
    x,
    y,
    weights: LossWeights | None = None,
    extractors: ExtractorSet | Mapping | None = None,
    pixel_mode: str = "rms",
) -> tuple[torch.Tensor, dict[str, float]]:
    """Weighted sum of the four terms plus an unweighted per-term breakdown.

    Terms with zero weight are skipped (their extractor may be absent);
    a nonzero weight with a missing extractor is a validation error.
    """
    if weights is None:
        weights = LossWeights()
    if isinstance(extractors, Mapping):
        extractors = ExtractorSet(**dict(extractors))
    elif extractors is None:
        extractors = ExtractorSet()
    l1, l2, l3, l4 = weights.as_tuple()
    tx, ty = _pair(x, y)
    zero = tx.new_zeros(())

    def need(role: str, extractor):
        if extractor is None:
            raise ValidationError(
                f"loss weight for {role} is nonzero but no {role} extractor was given"
            )
        return extractor

    t_pixel = pixel_loss(tx, ty, mode=pixel_mode) if l1 > 0 else zero
    t_percep = (
        perceptual_loss(tx, ty, need("perceptual", extractors.perceptual)) if l2 > 0 else zero
    )
    t_id = (
        multilayer_id_loss(tx, ty, need("identity", extractors.identity)) if l3 > 0 else zero
    )
    t_par = (
        multilayer_parsing_loss(tx, ty, need("parsing", extractors.parsing)) if l4 > 0 else zero
    )
    total = l1 * t_pixel + l2 * t_percep + l3 * t_id + l4 * t_par
    breakdown = {
        "pixel": float(t_pixel.detach()),
        "perceptual": float(t_percep.detach()),
        "identity": float(t_id.detach()),
        "parsing": float(t_par.detach()),
    }
    return total, breakdown
