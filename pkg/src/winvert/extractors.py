"""Pluggable feature extractors feeding the perceptual and multi-layer losses.

An extractor is a named, ordered list of level functions mapping image
batches to feature arrays. Every level must be deterministic and
differentiable. Real perceptual/recognition/parsing backbones plug in as
external assets through the manifest loader; the builtins here are small
deterministic networks good enough for desk-scale training and tests.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import torch
import torch.nn.functional as F

from .errors import AssetError, ValidationError

KINDS = ("perceptual", "identity", "parsing")


@dataclass(frozen=True)
class FeatureExtractor:
    name: str
    kind: str
    levels: tuple[Callable[[torch.Tensor], torch.Tensor], ...]

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if not self.levels:
            raise ValidationError("extractor needs at least one level")


def identity_extractor(kind: str = "perceptual") -> FeatureExtractor:
    """Single level returning the image itself."""
    return FeatureExtractor(name="identity", kind=kind, levels=(lambda x: x,))


def pyramid_extractor(kind: str, n_levels: int = 5) -> FeatureExtractor:
    """Levels are successive 2x average-pool downsamples of the image."""

    def level(i: int):
        def fn(x: torch.Tensor) -> torch.Tensor:
            if i == 0:
                return x
            k = min(2**i, x.shape[-2], x.shape[-1])  # deep levels cap at global pooling
            return F.avg_pool2d(x, k)

        return fn

    return FeatureExtractor(
        name=f"pyramid{n_levels}", kind=kind, levels=tuple(level(i) for i in range(n_levels))
    )


class _RandConvStack(torch.nn.Module):
    """Frozen random conv features tapped after each 2x downsample."""

    def __init__(self, seed: int, n_levels: int, channels: int):
        super().__init__()
        gen = torch.Generator().manual_seed(seed)
        convs = []
        in_ch = 3
        for _ in range(n_levels):
            w = torch.randn(channels, in_ch, 3, 3, generator=gen) / math.sqrt(in_ch * 9)
            convs.append(torch.nn.Parameter(w, requires_grad=False))
            in_ch = channels
        self.weights = torch.nn.ParameterList(convs)

    def taps(self, x: torch.Tensor) -> list[torch.Tensor]:
        out = []
        for i, w in enumerate(self.weights):
            stride = 1 if i == 0 else 2
            x = F.leaky_relu(F.conv2d(x, w.to(x.dtype), stride=stride, padding=1), 0.2)
            out.append(x)
        return out


def randconv_extractor(
    kind: str, seed: int = 0, n_levels: int = 5, channels: int = 8
) -> FeatureExtractor:
    """Deterministic random-projection conv features (untrained-perceptual style)."""
    stack = _RandConvStack(seed, n_levels, channels)

    def level(i: int):
        return lambda x: stack.taps(x)[i]

    return FeatureExtractor(
        name=f"randconv{n_levels}", kind=kind, levels=tuple(level(i) for i in range(n_levels))
    )


_BUILTIN_FACTORIES: dict[str, Callable[..., FeatureExtractor]] = {
    "identity": lambda kind, **kw: identity_extractor(kind),
    "pyramid": lambda kind, n_levels=5, **kw: pyramid_extractor(kind, n_levels),
    "randconv": lambda kind, seed=0, n_levels=5, channels=8, **kw: randconv_extractor(
        kind, seed, n_levels, channels
    ),
}


def register_extractor(name: str, factory: Callable[..., FeatureExtractor]) -> None:
    """Register an adapter factory so manifests can reference it by name."""
    _BUILTIN_FACTORIES[name] = factory


def load_extractor(manifest: dict | str | Path) -> FeatureExtractor:
    """Instantiate an extractor from a manifest.

    Manifest fields: name, kind, plus factory-specific options (level_taps,
    input_resolution, normalization are adapter concerns and passed through).
    """
    if not isinstance(manifest, dict):
        path = Path(manifest)
        if not path.exists():
            raise AssetError(f"extractor manifest not found: {path}")
        manifest = json.loads(path.read_text())
    name = manifest.get("name")
    kind = manifest.get("kind")
    if kind not in KINDS:
        raise AssetError(f"manifest kind {kind!r} not one of {KINDS}")
    factory = _BUILTIN_FACTORIES.get(name)
    if factory is None:
        raise AssetError(
            f"no extractor adapter registered for {name!r}; register one with "
            f"register_extractor() or use a builtin ({sorted(_BUILTIN_FACTORIES)})"
        )
    opts = {k: v for k, v in manifest.items() if k not in ("name", "kind")}
    return factory(kind=kind, **opts)


@dataclass(frozen=True)
class ExtractorSet:
    """The three extractor roles used by the full training loss."""

    perceptual: FeatureExtractor | None = None
    identity: FeatureExtractor | None = None
    parsing: FeatureExtractor | None = None

    @staticmethod
    def toy(seed: int = 0) -> "ExtractorSet":
        """Small deterministic set covering all three roles."""
        return ExtractorSet(
            perceptual=randconv_extractor("perceptual", seed=seed, n_levels=3),
            identity=pyramid_extractor("identity", 5),
            parsing=randconv_extractor("parsing", seed=seed + 1, n_levels=5),
        )
