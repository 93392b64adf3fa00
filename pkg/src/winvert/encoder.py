"""Feed-forward inversion network.

A squeeze-excitation residual backbone truncated at 1/8 of the input
resolution feeds three prediction heads (deep 1/8, mid 1/4, shallow 1/2).
Each head is an adaptive average pool to a fixed grid followed by a single
fully connected layer emitting its block of style vectors; the deep head
owns the first codes. Refinement-stage encoders take the 6-channel
concatenation of the input and the previous render and predict residuals,
with output layers zero-initialized so stage t starts as the identity.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn

from .errors import ConfigurationError, UsageError, ValidationError
from .types import EncoderConfig, ImageTensor, LatentCode


@dataclass(frozen=True)
class BackbonePreset:
    base_width: int
    blocks: tuple[int, int]  # bottleneck counts for the 1/4 and 1/8 stages


# Block counts follow the standard 50-layer layout for the kept stages;
# the default width is sized so the default config lands at ~85M params.
BACKBONE_PRESETS: dict[str, BackbonePreset] = {
    "se50": BackbonePreset(base_width=40, blocks=(3, 4)),
    "se50-w64": BackbonePreset(base_width=64, blocks=(3, 4)),
    "tiny": BackbonePreset(base_width=16, blocks=(1, 1)),
}


def _norm(ch: int) -> nn.GroupNorm:
    # GroupNorm keeps the forward pass deterministic and batch-size independent.
    groups = 8 if ch % 8 == 0 else 1
    return nn.GroupNorm(groups, ch)


class _SqueezeExcite(nn.Module):
    def __init__(self, ch: int):
        super().__init__()
        mid = max(ch // 16, 4)
        self.fc1 = nn.Linear(ch, mid)
        self.fc2 = nn.Linear(mid, ch)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        s = x.mean(dim=(2, 3))
        s = torch.sigmoid(self.fc2(F.relu(self.fc1(s))))
        return x * s[:, :, None, None]


class _SEBottleneck(nn.Module):
    def __init__(self, in_ch: int, mid_ch: int, out_ch: int, stride: int = 1):
        super().__init__()
        self.conv1 = nn.Conv2d(in_ch, mid_ch, 1, bias=False)
        self.n1 = _norm(mid_ch)
        self.conv2 = nn.Conv2d(mid_ch, mid_ch, 3, stride=stride, padding=1, bias=False)
        self.n2 = _norm(mid_ch)
        self.conv3 = nn.Conv2d(mid_ch, out_ch, 1, bias=False)
        self.n3 = _norm(out_ch)
        self.se = _SqueezeExcite(out_ch)
        if stride != 1 or in_ch != out_ch:
            self.skip = nn.Sequential(
                nn.Conv2d(in_ch, out_ch, 1, stride=stride, bias=False), _norm(out_ch)
            )
        else:
            self.skip = nn.Identity()

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        out = F.relu(self.n1(self.conv1(x)))
        out = F.relu(self.n2(self.conv2(out)))
        out = self.se(self.n3(self.conv3(out)))
        return F.relu(out + self.skip(x))


class _EncoderNet(nn.Module):
    """Backbone + taps + heads; exposes the taps for tests and analysis."""

    def __init__(self, config: EncoderConfig, in_channels: int):
        super().__init__()
        preset = BACKBONE_PRESETS[config.backbone_spec]
        w = preset.base_width
        self.config = config
        self.stem = nn.Sequential(
            nn.Conv2d(in_channels, w, 7, stride=2, padding=3, bias=False),
            _norm(w),
            nn.ReLU(inplace=True),
        )
        self.pool = nn.MaxPool2d(3, stride=2, padding=1)

        def stage(in_ch, mid, out_ch, n_blocks, stride):
            blocks = [_SEBottleneck(in_ch, mid, out_ch, stride=stride)]
            blocks += [_SEBottleneck(out_ch, mid, out_ch) for _ in range(n_blocks - 1)]
            return nn.Sequential(*blocks)

        self.layer1 = stage(w, w, 4 * w, preset.blocks[0], stride=1)    # 1/4
        self.layer2 = stage(4 * w, 2 * w, 8 * w, preset.blocks[1], stride=2)  # 1/8

        n1, n2, n3 = config.split
        p_deep, p_mid, p_shallow = config.pool_sizes
        dim = config.dim
        self.head_deep = nn.Linear(8 * w * p_deep**2, n1 * dim) if n1 else None
        self.head_mid = nn.Linear(4 * w * p_mid**2, n2 * dim) if n2 else None
        self.head_shallow = nn.Linear(w * p_shallow**2, n3 * dim) if n3 else None

    def forward_taps(self, x: torch.Tensor):
        """Feature maps at the deep (1/8), mid (1/4) and shallow (1/2) taps."""
        shallow = self.stem(x)
        mid = self.layer1(self.pool(shallow))
        deep = self.layer2(mid)
        return deep, mid, shallow

    def codes_from_taps(self, deep, mid, shallow) -> torch.Tensor:
        cfg = self.config
        b = deep.shape[0]
        pieces = []
        for head, tap, p, n in (
            (self.head_deep, deep, cfg.pool_sizes[0], cfg.split[0]),
            (self.head_mid, mid, cfg.pool_sizes[1], cfg.split[1]),
            (self.head_shallow, shallow, cfg.pool_sizes[2], cfg.split[2]),
        ):
            if head is None:
                pieces.append(deep.new_zeros((b, 0, cfg.dim)))
                continue
            pooled = F.adaptive_avg_pool2d(tap, p).flatten(1)
            pieces.append(head(pooled).reshape(b, n, cfg.dim))
        return torch.cat(pieces, dim=1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.codes_from_taps(*self.forward_taps(x))


@dataclass(eq=False)
class Encoder:
    """A built inversion network for one refinement stage."""

    config: EncoderConfig
    stage_index: int
    net: _EncoderNet = field(repr=False)

    @property
    def input_channels(self) -> int:
        return 3 if self.stage_index == 1 else 6

    def freeze(self) -> "Encoder":
        self.net.eval()
        for p in self.net.parameters():
            p.requires_grad_(False)
        return self

    def trainable_parameters(self):
        return [p for p in self.net.parameters() if p.requires_grad]


def _validate_pools(config: EncoderConfig) -> None:
    taps = config.tap_resolutions  # deep, mid, shallow sides
    names = ("deep", "mid", "shallow")
    for name, side, p in zip(names, taps, config.pool_sizes):
        if p > side:
            min_res = max(
                8 * config.pool_sizes[0], 4 * config.pool_sizes[1], 2 * config.pool_sizes[2]
            )
            min_res = ((min_res + 7) // 8) * 8
            raise ConfigurationError(
                f"{name} pool {p} exceeds its {side}x{side} feature map at input "
                f"resolution {config.input_resolution}; smallest valid input "
                f"resolution for pools {config.pool_sizes} is {min_res}"
            )


def _init_parameters(net: nn.Module, seed: int) -> None:
    """Seeded fan-in uniform init written via numpy (the torch CPU RNG is slow
    enough on large FC heads to matter)."""
    rng = np.random.default_rng(np.random.PCG64(seed))
    with torch.no_grad():
        for m in net.modules():
            if isinstance(m, (nn.Conv2d, nn.Linear)):
                fan_in = int(np.prod(m.weight.shape[1:]))
                bound = 1.0 / fan_in**0.5
                for p in (m.weight, m.bias):
                    if p is None:
                        continue
                    a = p.detach().numpy()
                    rng.random(dtype=np.float32, out=a)
                    a *= 2.0 * bound
                    a -= bound
            elif isinstance(m, nn.GroupNorm):
                m.weight.fill_(1.0)
                m.bias.zero_()


def build_encoder(config: EncoderConfig, stage_index: int = 1, init_seed: int = 0) -> Encoder:
    """Construct an encoder for the given stage with a seeded initialization.

    Stage-1 encoders take 3-channel inputs; refinement stages take 6 channels
    and have their final fully connected layers zeroed so the predicted
    residual is exactly zero at initialization.
    """
    if stage_index < 1:
        raise ValidationError(f"stage_index must be >= 1, got {stage_index}")
    if config.backbone_spec not in BACKBONE_PRESETS:
        raise ConfigurationError(
            f"unknown backbone preset {config.backbone_spec!r}; "
            f"available: {sorted(BACKBONE_PRESETS)}"
        )
    _validate_pools(config)
    in_channels = 3 if stage_index == 1 else 6
    with torch.device("meta"):
        net = _EncoderNet(config, in_channels)
    net = net.to_empty(device="cpu")
    _init_parameters(net, init_seed)
    if stage_index > 1:
        with torch.no_grad():
            for head in (net.head_deep, net.head_mid, net.head_shallow):
                if head is not None:
                    head.weight.zero_()
                    head.bias.zero_()
    return Encoder(config=config, stage_index=stage_index, net=net)


def _check_resolution(e: Encoder, x: ImageTensor | torch.Tensor, name: str) -> None:
    r = e.config.input_resolution
    if isinstance(x, ImageTensor):
        shape = (x.height, x.width)
    else:
        shape = tuple(x.shape[-2:])
    if shape != (r, r):
        raise ValidationError(f"{name} resolution {shape} does not match encoder input {r}x{r}")


def encode(e: Encoder, x: ImageTensor) -> LatentCode:
    """Stage-1 forward pass: image to latent code."""
    if e.stage_index != 1:
        raise UsageError(f"encode requires a stage-1 encoder, got stage {e.stage_index}")
    _check_resolution(e, x, "input")
    with torch.no_grad():
        codes = e.net(x.to_tensor().unsqueeze(0)).squeeze(0)
    return LatentCode.from_tensor(codes)


def encode_refine(
    e: Encoder, x: ImageTensor, prev_render: ImageTensor, prev: LatentCode
) -> LatentCode:
    """Refinement forward pass: predicted residual added to the previous code."""
    if e.stage_index <= 1:
        raise UsageError("encode_refine requires a refinement-stage encoder (stage > 1)")
    _check_resolution(e, x, "input")
    if (x.height, x.width) != (prev_render.height, prev_render.width):
        raise ValidationError(
            f"input {x.resolution} and previous render {prev_render.resolution} differ"
        )
    if prev.n_codes != e.config.n_codes or prev.dim != e.config.dim:
        raise ValidationError("previous latent shape does not match encoder config")
    inp = torch.cat([x.to_tensor(), prev_render.to_tensor()], dim=0).unsqueeze(0)
    with torch.no_grad():
        residual = e.net(inp).squeeze(0)
    return LatentCode.from_tensor(residual + prev.to_tensor())


def param_count(e: Encoder) -> int:
    """Exact number of trainable scalar parameters."""
    return sum(p.numel() for p in e.net.parameters() if p.requires_grad)


CHECKPOINT_FORMAT_VERSION = 1


def save_encoder_checkpoint(
    e: Encoder,
    directory: str | Path,
    epoch: int = 0,
    loss_weights: tuple | None = None,
) -> Path:
    """Write weights plus a JSON manifest; returns the checkpoint directory."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    torch.save(e.net.state_dict(), directory / "weights.pt")
    manifest = {
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "stage_index": e.stage_index,
        "epoch": epoch,
        "loss_weights": list(loss_weights) if loss_weights is not None else None,
        "config": {
            "n_codes": e.config.n_codes,
            "dim": e.config.dim,
            "input_resolution": e.config.input_resolution,
            "split": list(e.config.split),
            "pool_sizes": list(e.config.pool_sizes),
            "backbone_spec": e.config.backbone_spec,
        },
    }
    (directory / "manifest.json").write_text(json.dumps(manifest, indent=2))
    return directory


def load_encoder_checkpoint(directory: str | Path) -> Encoder:
    directory = Path(directory)
    manifest_path = directory / "manifest.json"
    if not manifest_path.exists():
        raise ValidationError(f"no manifest.json in {directory}")
    manifest = json.loads(manifest_path.read_text())
    if manifest.get("format_version") != CHECKPOINT_FORMAT_VERSION:
        raise ValidationError(
            f"unsupported checkpoint format_version {manifest.get('format_version')}"
        )
    c = manifest["config"]
    config = EncoderConfig(
        n_codes=c["n_codes"],
        dim=c["dim"],
        input_resolution=c["input_resolution"],
        split=tuple(c["split"]),
        pool_sizes=tuple(c["pool_sizes"]),
        backbone_spec=c["backbone_spec"],
    )
    e = build_encoder(config, stage_index=manifest["stage_index"])
    state = torch.load(directory / "weights.pt", map_location="cpu", weights_only=True)
    e.net.load_state_dict(state)
    return e
