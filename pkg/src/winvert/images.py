"""Image loading, saving and resampling helpers.

8-bit images map to [-1, 1] via v / 127.5 - 1 everywhere; the inverse uses
round((v + 1) * 127.5) so quantization round-trips exactly.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
import torch
import torch.nn.functional as F
from PIL import Image

from .errors import ValidationError
from .types import ImageTensor

# Rec. 601 luma weights, shared by grayscale conversion and SSIM.
LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114], dtype=np.float32)


def load_image(path: str | Path) -> ImageTensor:
    with Image.open(path) as im:
        rgb = im.convert("RGB")
        a = np.asarray(rgb, dtype=np.float32)
    return ImageTensor(a / 127.5 - 1.0)


def to_uint8(img: ImageTensor) -> np.ndarray:
    return np.round((np.asarray(img.pixels) + 1.0) * 127.5).astype(np.uint8)


def from_uint8(a: np.ndarray) -> ImageTensor:
    return ImageTensor(np.asarray(a, dtype=np.float32) / 127.5 - 1.0)


def save_image(img: ImageTensor, path: str | Path) -> None:
    Image.fromarray(to_uint8(img), mode="RGB").save(path)


def encode_png(img: ImageTensor) -> bytes:
    import io

    buf = io.BytesIO()
    Image.fromarray(to_uint8(img), mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


def decode_image_bytes(data: bytes) -> ImageTensor:
    import io

    try:
        with Image.open(io.BytesIO(data)) as im:
            rgb = im.convert("RGB")
            a = np.asarray(rgb, dtype=np.float32)
    except Exception as e:
        raise ValidationError(f"could not decode image: {e}") from e
    return ImageTensor(a / 127.5 - 1.0)


def resize_image(img: ImageTensor, height: int, width: int | None = None) -> ImageTensor:
    """Bilinear resize with antialiasing; no-op when the size already matches."""
    width = width if width is not None else height
    if (img.height, img.width) == (height, width):
        return img
    t = img.to_tensor().unsqueeze(0)
    out = F.interpolate(t, size=(height, width), mode="bilinear", align_corners=False, antialias=True)
    return ImageTensor.from_tensor(out.squeeze(0))


def resize_chw(t: torch.Tensor, side: int) -> torch.Tensor:
    """Differentiable bilinear resize of a (B,3,H,W) or (3,H,W) tensor."""
    squeeze = t.dim() == 3
    if squeeze:
        t = t.unsqueeze(0)
    if t.shape[-2:] != (side, side):
        t = F.interpolate(t, size=(side, side), mode="bilinear", align_corners=False, antialias=True)
    return t.squeeze(0) if squeeze else t


def grayscale(img: ImageTensor) -> ImageTensor:
    """Rec. 601 luminance, replicated back to 3 channels."""
    lum = np.asarray(img.pixels) @ LUMA_WEIGHTS
    return ImageTensor.from_array(np.repeat(lum[:, :, None], 3, axis=2), clamp=True)


def hflip(img: ImageTensor) -> ImageTensor:
    return ImageTensor(np.ascontiguousarray(np.asarray(img.pixels)[:, ::-1, :]))
