"""Shared data model: latent codes, images, and the small config records.

All values here are immutable: arrays are stored with the writeable flag
cleared, so instances can be shared freely between threads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch

from .errors import ValidationError

DEFAULT_N_CODES = 18
DEFAULT_DIM = 512


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float32)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class LatentCode:
    """A W+ style code: ``n_codes`` vectors of ``dim`` entries each.

    In-memory values are always float32; ``dtype`` records the storage
    precision intent ("f32" or "f16") used when the code is serialized.
    """

    codes: np.ndarray
    dtype: str = "f32"

    def __post_init__(self):
        codes = np.asarray(self.codes, dtype=np.float32)
        if codes.ndim != 2:
            raise ValidationError(f"codes must be 2-D (n_codes, dim), got shape {codes.shape}")
        if codes.shape[0] < 1 or codes.shape[1] < 1:
            raise ValidationError(f"n_codes and dim must be >= 1, got {codes.shape}")
        if not np.isfinite(codes).all():
            raise ValidationError("latent code contains non-finite values")
        if self.dtype not in ("f32", "f16"):
            raise ValidationError(f"dtype must be 'f32' or 'f16', got {self.dtype!r}")
        object.__setattr__(self, "codes", _frozen(codes))

    @property
    def n_codes(self) -> int:
        return self.codes.shape[0]

    @property
    def dim(self) -> int:
        return self.codes.shape[1]

    def __eq__(self, other) -> bool:
        if not isinstance(other, LatentCode):
            return NotImplemented
        return (
            self.dtype == other.dtype
            and self.codes.shape == other.codes.shape
            and np.array_equal(self.codes, other.codes)
        )

    def __repr__(self) -> str:
        return f"LatentCode(n_codes={self.n_codes}, dim={self.dim}, dtype={self.dtype})"

    def to_tensor(self, dtype: torch.dtype = torch.float32) -> torch.Tensor:
        return torch.from_numpy(np.array(self.codes)).to(dtype)

    @staticmethod
    def from_tensor(t: torch.Tensor, dtype: str = "f32") -> "LatentCode":
        return LatentCode(t.detach().cpu().numpy().astype(np.float32), dtype=dtype)

    def with_codes(self, codes: np.ndarray) -> "LatentCode":
        return LatentCode(codes, dtype=self.dtype)


@dataclass(frozen=True, eq=False)
class ImageTensor:
    """An H x W x 3 image with float values in [-1, 1]."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=np.float32)
        if px.ndim != 3 or px.shape[2] != 3:
            raise ValidationError(f"image must have shape (H, W, 3), got {px.shape}")
        if not np.isfinite(px).all():
            raise ValidationError("image contains non-finite values")
        if px.min() < -1.0 or px.max() > 1.0:
            raise ValidationError(
                f"image values outside [-1, 1]: [{px.min():.4f}, {px.max():.4f}]; "
                "use ImageTensor.from_array(..., clamp=True) for raw data"
            )
        object.__setattr__(self, "pixels", _frozen(px))

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def resolution(self) -> tuple[int, int]:
        return (self.height, self.width)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ImageTensor):
            return NotImplemented
        return self.pixels.shape == other.pixels.shape and np.array_equal(
            self.pixels, other.pixels
        )

    def __repr__(self) -> str:
        return f"ImageTensor({self.height}x{self.width}x3)"

    @staticmethod
    def from_array(a: np.ndarray, clamp: bool = False) -> "ImageTensor":
        a = np.asarray(a, dtype=np.float32)
        if clamp:
            a = np.clip(a, -1.0, 1.0)
        return ImageTensor(a)

    def to_tensor(self, dtype: torch.dtype = torch.float32) -> torch.Tensor:
        """Channels-first copy, shape (3, H, W)."""
        return torch.from_numpy(np.array(self.pixels)).permute(2, 0, 1).to(dtype)

    @staticmethod
    def from_tensor(t: torch.Tensor) -> "ImageTensor":
        """From a (3, H, W) tensor; values are clamped to [-1, 1]."""
        a = t.detach().cpu().clamp(-1.0, 1.0).permute(1, 2, 0).numpy()
        return ImageTensor.from_array(a)


def as_chw_tensor(x, dtype: torch.dtype | None = None) -> torch.Tensor:
    """Accept an ImageTensor or a (3,H,W)/(B,3,H,W) tensor; keep autograd graphs intact."""
    if isinstance(x, ImageTensor):
        t = x.to_tensor()
    elif isinstance(x, torch.Tensor):
        t = x
    else:
        raise ValidationError(f"expected ImageTensor or torch.Tensor, got {type(x).__name__}")
    if dtype is not None and t.dtype != dtype:
        t = t.to(dtype)
    return t


@dataclass(frozen=True)
class LossWeights:
    """Weights for the four training loss terms (pixel, perceptual, identity, parsing)."""

    lambda1: float = 1.0
    lambda2: float = 0.8
    lambda3: float = 0.5
    lambda4: float = 1.0

    def __post_init__(self):
        for name in ("lambda1", "lambda2", "lambda3", "lambda4"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0:
                raise ValidationError(f"{name} must be a nonnegative finite real, got {v}")

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.lambda1, self.lambda2, self.lambda3, self.lambda4)


@dataclass(frozen=True)
class EncoderConfig:
    """Architecture description for the hierarchical inversion encoder.

    ``split`` assigns latent codes to the deep (1/8), mid (1/4) and shallow
    (1/2) feature taps, in that order; ``pool_sizes`` are the adaptive
    average-pool targets of the three prediction heads.
    """

    n_codes: int = DEFAULT_N_CODES
    dim: int = DEFAULT_DIM
    input_resolution: int = 256
    split: tuple[int, int, int] = (9, 5, 4)
    pool_sizes: tuple[int, int, int] = (7, 5, 3)
    backbone_spec: str = "se50"

    def __post_init__(self):
        if self.n_codes < 1 or self.dim < 1:
            raise ValidationError("n_codes and dim must be >= 1")
        if len(self.split) != 3 or any(n < 0 for n in self.split):
            raise ValidationError(f"split must be three nonnegative counts, got {self.split}")
        if sum(self.split) != self.n_codes:
            raise ValidationError(
                f"split {self.split} must sum to n_codes={self.n_codes}"
            )
        if len(self.pool_sizes) != 3 or any(p < 1 for p in self.pool_sizes):
            raise ValidationError(f"pool sizes must be >= 1, got {self.pool_sizes}")
        if self.input_resolution % 8 != 0 or self.input_resolution < 8:
            raise ValidationError(
                f"input_resolution must be a positive multiple of 8, got {self.input_resolution}"
            )

    @property
    def tap_resolutions(self) -> tuple[int, int, int]:
        """Feature-map sides at the deep, mid and shallow taps."""
        r = self.input_resolution
        return (r // 8, r // 4, r // 2)
