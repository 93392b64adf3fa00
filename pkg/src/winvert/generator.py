"""Uniform interface to a style-based synthesis network.

Ships a small deterministic generator (per-code modulated convolutions over
an upsampling stack) for desk-scale work, and an asset adapter for loading
serialized generator weights. Synthesis is differentiable with respect to
the latent code so both training through the generator and the
optimization-based inversion baseline work.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn

from .errors import AssetError, ValidationError
from .types import ImageTensor, LatentCode

SUPPORTED_FAMILY = "modconv-toy"


class _ModulatedConv2d(nn.Module):
    """3x3 convolution whose weights are scaled per input channel by a style vector.

    Gains are strictly positive (log-space modulation), which keeps the
    latent-to-image map free of sign-flip symmetries and therefore
    invertible by gradient descent at desk scale.
    """

    MOD_SCALE = 0.35

    def __init__(self, in_ch: int, out_ch: int, style_dim: int, gen: torch.Generator):
        super().__init__()
        k = 3
        fan_in = in_ch * k * k
        self.weight = nn.Parameter(
            torch.randn(out_ch, in_ch, k, k, generator=gen) / math.sqrt(fan_in)
        )
        self.affine = nn.Linear(style_dim, in_ch)
        with torch.no_grad():
            self.affine.weight.copy_(
                torch.randn(in_ch, style_dim, generator=gen) / math.sqrt(style_dim)
            )
            self.affine.bias.zero_()  # zero style -> unit modulation

    def forward(self, x: torch.Tensor, style: torch.Tensor) -> torch.Tensor:
        b, in_ch, h, w = x.shape
        s = torch.exp(self.MOD_SCALE * self.affine(style))  # (B, in_ch), positive
        weight = self.weight.unsqueeze(0) * s[:, None, :, None, None]
        demod = torch.rsqrt(weight.pow(2).sum(dim=(2, 3, 4)) + 1e-8)
        weight = weight * demod[:, :, None, None, None]
        out_ch = weight.shape[1]
        x = x.reshape(1, b * in_ch, h, w)
        weight = weight.reshape(b * out_ch, in_ch, 3, 3)
        out = F.conv2d(x, weight, padding=1, groups=b)
        return out.reshape(b, out_ch, h, w)


class _ToySynthesis(nn.Module):
    """Learned-constant input followed by one modulated conv per latent code."""

    def __init__(self, seed: int, n_codes: int, dim: int, resolution: int, channels: int = 16):
        super().__init__()
        gen = torch.Generator().manual_seed(seed)
        self.n_codes = n_codes
        self.dim = dim
        self.resolution = resolution
        base = 4
        doublings = int(math.log2(resolution // base))
        # Spread the required doublings evenly across the per-code layers.
        self.scales = [
            2 ** (((i + 1) * doublings) // n_codes - (i * doublings) // n_codes)
            for i in range(n_codes)
        ]
        self.const = nn.Parameter(torch.randn(channels, base, base, generator=gen))
        self.layers = nn.ModuleList(
            _ModulatedConv2d(channels, channels, dim, gen) for _ in range(n_codes)
        )
        self.to_rgb = nn.Conv2d(channels, 3, kernel_size=1)
        with torch.no_grad():
            self.to_rgb.weight.copy_(
                torch.randn(3, channels, 1, 1, generator=gen) / math.sqrt(channels)
            )
            self.to_rgb.bias.zero_()

    def forward(self, w: torch.Tensor) -> torch.Tensor:
        # w: (B, n_codes, dim) -> (B, 3, R, R) in (-1, 1)
        b = w.shape[0]
        x = self.const.unsqueeze(0).expand(b, -1, -1, -1)
        for i, layer in enumerate(self.layers):
            if self.scales[i] > 1:
                x = F.interpolate(x, scale_factor=self.scales[i], mode="bilinear",
                                  align_corners=False)
            # sqrt(2) gain keeps activation variance from decaying layer by layer
            x = F.leaky_relu(layer(x, w[:, i]), negative_slope=0.2) * 2**0.5
        return torch.tanh(self.to_rgb(x) * 1.2)


@dataclass(eq=False)
class GeneratorHandle:
    """Opaque handle to a synthesis network mapping LatentCode -> ImageTensor.

    Read-only after construction; concurrent synthesize calls are safe.
    """

    family: str
    n_codes: int
    dim: int
    output_resolution: int
    deterministic: bool
    _module: nn.Module = field(repr=False)
    _by_dtype: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self._module.eval()
        for p in self._module.parameters():
            p.requires_grad_(False)
        self._by_dtype[torch.float32] = self._module

    def module(self, dtype: torch.dtype = torch.float32) -> nn.Module:
        """Synthesis module in the requested precision (cached)."""
        if dtype not in self._by_dtype:
            import copy

            m = copy.deepcopy(self._module).to(dtype)
            for p in m.parameters():
                p.requires_grad_(False)
            self._by_dtype[dtype] = m
        return self._by_dtype[dtype]

    def synthesize_tensor(self, w: torch.Tensor) -> torch.Tensor:
        """Differentiable synthesis of a (B, n_codes, dim) batch to (B, 3, R, R)."""
        if w.dim() != 3 or w.shape[1] != self.n_codes or w.shape[2] != self.dim:
            raise ValidationError(
                f"latent batch shape {tuple(w.shape)} does not match generator "
                f"({self.n_codes}, {self.dim})"
            )
        return self.module(w.dtype)(w)


def make_toy_generator(
    seed: int, n_codes: int, dim: int, resolution: int, channels: int = 16
) -> GeneratorHandle:
    """Small deterministic style-modulated generator for desk-scale runs."""
    if n_codes < 1 or dim < 1:
        raise ValidationError("n_codes and dim must be >= 1")
    if resolution < 8 or (resolution & (resolution - 1)) != 0:
        raise ValidationError(f"resolution must be a power of two >= 8, got {resolution}")
    module = _ToySynthesis(seed, n_codes, dim, resolution, channels=channels)
    return GeneratorHandle(
        family=SUPPORTED_FAMILY,
        n_codes=n_codes,
        dim=dim,
        output_resolution=resolution,
        deterministic=True,
        _module=module,
    )


def synthesize(g: GeneratorHandle, w: LatentCode) -> ImageTensor:
    """Render a latent code to an image in [-1, 1]."""
    if w.n_codes != g.n_codes or w.dim != g.dim:
        raise ValidationError(
            f"latent shape ({w.n_codes}, {w.dim}) does not match generator "
            f"({g.n_codes}, {g.dim})"
        )
    with torch.no_grad():
        out = g.synthesize_tensor(w.to_tensor().unsqueeze(0))
    return ImageTensor.from_tensor(out.squeeze(0))


def mean_latent(
    g: GeneratorHandle,
    sampler: Callable[[], "LatentCode | np.ndarray"],
    n_samples: int,
) -> LatentCode:
    """Per-position mean over sampled codes, broadcast to all code positions.

    The sampler may return full (n_codes, dim) codes or single dim-vectors.
    """
    if n_samples < 1:
        raise ValidationError(f"n_samples must be >= 1, got {n_samples}")
    acc = None
    for _ in range(n_samples):
        s = sampler()
        a = np.asarray(s.codes if isinstance(s, LatentCode) else s, dtype=np.float64)
        if a.ndim == 1:
            a = np.tile(a, (g.n_codes, 1))
        if a.shape != (g.n_codes, g.dim):
            raise ValidationError(
                f"sampler returned shape {a.shape}, expected ({g.n_codes}, {g.dim})"
            )
        acc = a if acc is None else acc + a
    return LatentCode((acc / n_samples).astype(np.float32))


def gaussian_latent_sampler(
    g: GeneratorHandle, seed: int
) -> Callable[[], LatentCode]:
    """Sampler over the toy generator's native latent distribution (unit normal)."""
    rng = np.random.default_rng(seed)
    return lambda: LatentCode(rng.standard_normal((g.n_codes, g.dim)).astype(np.float32))


def generator_fingerprint(g: GeneratorHandle) -> dict:
    """Per-channel mean/std of the image synthesized from the zero (mean) latent."""
    img = synthesize(g, LatentCode(np.zeros((g.n_codes, g.dim), dtype=np.float32)))
    px = np.asarray(img.pixels, dtype=np.float64)
    return {
        "mean": [float(px[:, :, c].mean()) for c in range(3)],
        "std": [float(px[:, :, c].std()) for c in range(3)],
    }


def save_generator_asset(g: GeneratorHandle, path: str | Path) -> dict:
    """Persist a generator as a weight container; returns the matching manifest."""
    payload = {
        "family": g.family,
        "n_codes": g.n_codes,
        "dim": g.dim,
        "resolution": g.output_resolution,
        "state_dict": g._module.state_dict(),
        "arch": {"channels": g._module.const.shape[0]},
    }
    torch.save(payload, path)
    return {
        "family": g.family,
        "n_codes": g.n_codes,
        "dim": g.dim,
        "resolution": g.output_resolution,
        "fingerprint": generator_fingerprint(g),
    }


def load_pretrained_generator(asset_path: str | Path, manifest: dict | str | Path) -> GeneratorHandle:
    """Load a serialized generator and validate it against its manifest.

    Validates shape metadata and, when the manifest carries a fingerprint,
    the per-channel output statistics of the mean-latent synthesis (5%).
    """
    if not isinstance(manifest, dict):
        manifest_path = Path(manifest)
        if not manifest_path.exists():
            raise AssetError(f"manifest not found: {manifest_path}")
        manifest = json.loads(manifest_path.read_text())
    path = Path(asset_path)
    if not path.exists():
        raise AssetError(
            f"generator asset not found: {path}; point the manifest at a serialized "
            f"'{SUPPORTED_FAMILY}' weight container"
        )
    try:
        payload = torch.load(path, map_location="cpu", weights_only=False)
    except Exception as e:
        raise AssetError(f"could not read generator asset {path}: {e}") from e
    family = payload.get("family")
    if family != SUPPORTED_FAMILY:
        raise AssetError(
            f"unsupported generator family {family!r}; this build loads "
            f"'{SUPPORTED_FAMILY}' containers (convert external weights first)"
        )
    for key in ("n_codes", "dim", "resolution"):
        want = manifest.get(key)
        have = payload.get(key)
        if want is not None and want != have:
            raise AssetError(f"manifest {key}={want} does not match asset {key}={have}")
    module = _ToySynthesis(
        seed=0,
        n_codes=payload["n_codes"],
        dim=payload["dim"],
        resolution=payload["resolution"],
        channels=payload.get("arch", {}).get("channels", 16),
    )
    try:
        module.load_state_dict(payload["state_dict"])
    except Exception as e:
        raise AssetError(f"asset weights do not fit the declared architecture: {e}") from e
    handle = GeneratorHandle(
        family=family,
        n_codes=payload["n_codes"],
        dim=payload["dim"],
        output_resolution=payload["resolution"],
        deterministic=True,
        _module=module,
    )
    fp = manifest.get("fingerprint")
    if fp:
        actual = generator_fingerprint(handle)
        for key in ("mean", "std"):
            for want, have in zip(fp[key], actual[key]):
                tol = 0.05 * max(abs(want), 0.05)
                if abs(want - have) > tol:
                    raise AssetError(
                        f"fingerprint mismatch on channel {key}: manifest {want:.4f} "
                        f"vs synthesized {have:.4f}"
                    )
    return handle
