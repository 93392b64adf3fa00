"""Flat key-value config files for the CLI.

Format: one ``key = value`` per line, ``#`` comments, blank lines ignored.

Training/encoder keys (defaults in parentheses):

    task (inversion)            one of the augmentation tasks
    epochs (25)                 training epochs
    batch_size (8)
    base_learning_rate (1e-4)
    flip_probability (0.5)
    seed (0)
    max_steps                   optional global step cap
    lambda1..lambda4 (1, 0.8, 0.5, 1)   loss term weights
    extractors (none)           "toy" enables the builtin extractor set
    n_codes (18), dim (512), input_resolution (256)
    split (9,5,4), pool_sizes (7,5,3), backbone (se50)
    generator                   path to a generator weight container

Serve keys: generator, checkpoints (comma-separated stage dirs),
directions_dir, host (127.0.0.1), port (8000).
"""

from __future__ import annotations

from pathlib import Path

from .errors import ValidationError
from .types import EncoderConfig, LossWeights


def parse_flat_config(path: str | Path) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def _ints(value: str) -> tuple[int, ...]:
    return tuple(int(v) for v in value.replace("(", "").replace(")", "").split(","))


def encoder_config_from(d: dict[str, str]) -> EncoderConfig:
    return EncoderConfig(
        n_codes=int(d.get("n_codes", 18)),
        dim=int(d.get("dim", 512)),
        input_resolution=int(d.get("input_resolution", 256)),
        split=_ints(d.get("split", "9,5,4")),
        pool_sizes=_ints(d.get("pool_sizes", "7,5,3")),
        backbone_spec=d.get("backbone", "se50"),
    )


def loss_weights_from(d: dict[str, str]) -> LossWeights:
    return LossWeights(
        lambda1=float(d.get("lambda1", 1.0)),
        lambda2=float(d.get("lambda2", 0.8)),
        lambda3=float(d.get("lambda3", 0.5)),
        lambda4=float(d.get("lambda4", 1.0)),
    )


def train_config_from(d: dict[str, str]):
    from .train import TrainConfig

    max_steps = d.get("max_steps")
    return TrainConfig(
        base_learning_rate=float(d.get("base_learning_rate", 1e-4)),
        epochs=int(d.get("epochs", 25)),
        batch_size=int(d.get("batch_size", 8)),
        flip_probability=float(d.get("flip_probability", 0.5)),
        loss_weights=loss_weights_from(d),
        task=d.get("task", "inversion"),
        seed=int(d.get("seed", 0)),
        max_steps=int(max_steps) if max_steps else None,
    )
