"""Latent-space editing: semantic directions, interpolation, style mixing,
and the paste-then-invert face swap helper."""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import AssetError, ValidationError
from .types import ImageTensor, LatentCode

# Central square covering 60% of each side.
DEFAULT_PASTE_BOX = (0.2, 0.2, 0.8, 0.8)


@dataclass(frozen=True)
class SemanticDirection:
    """A direction in latent space moving one semantic attribute.

    ``values`` is either a single dim-vector applied to every code or a full
    (n_codes, dim) array of per-code vectors.
    """

    name: str
    values: np.ndarray
    alpha_range: tuple[float, float] = (-3.0, 3.0)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float32)
        if v.ndim not in (1, 2):
            raise ValidationError(f"direction values must be 1-D or 2-D, got {v.shape}")
        if not np.isfinite(v).all():
            raise ValidationError("direction contains non-finite values")
        if self.alpha_range[0] > self.alpha_range[1]:
            raise ValidationError(f"invalid alpha_range {self.alpha_range}")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def per_code(self) -> bool:
        return self.values.ndim == 2

    @property
    def dim(self) -> int:
        return self.values.shape[-1]


def load_direction(path: str | Path) -> SemanticDirection:
    """Direction asset: JSON {name, dim, per_code, values, alpha_range}."""
    path = Path(path)
    if not path.exists():
        raise AssetError(f"direction asset not found: {path}")
    d = json.loads(path.read_text())
    values = np.asarray(d["values"], dtype=np.float32)
    if d.get("per_code") and values.ndim != 2:
        raise AssetError(f"{path}: per_code direction must carry a 2-D values array")
    if values.shape[-1] != d.get("dim", values.shape[-1]):
        raise AssetError(f"{path}: declared dim {d['dim']} != values dim {values.shape[-1]}")
    return SemanticDirection(
        name=d["name"],
        values=values,
        alpha_range=tuple(d.get("alpha_range", (-3.0, 3.0))),
    )


def save_direction(d: SemanticDirection, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(
            {
                "name": d.name,
                "dim": d.dim,
                "per_code": d.per_code,
                "values": np.asarray(d.values).tolist(),
                "alpha_range": list(d.alpha_range),
            }
        )
    )


def manipulate(w: LatentCode, d: SemanticDirection, alpha: float) -> LatentCode:
    """Move the code along a semantic direction: w + alpha * d."""
    if d.dim != w.dim:
        raise ValidationError(f"direction dim {d.dim} does not match latent dim {w.dim}")
    if d.per_code and d.values.shape[0] != w.n_codes:
        raise ValidationError(
            f"per-code direction has {d.values.shape[0]} codes, latent has {w.n_codes}"
        )
    delta = np.asarray(d.values, dtype=np.float32)
    if not d.per_code:
        delta = delta[None, :]
    return w.with_codes(np.asarray(w.codes) + np.float32(alpha) * delta)


def interpolate(
    wa: LatentCode, wb: LatentCode, lam: float, permissive: bool = False
) -> LatentCode:
    """Convex combination lam * wb + (1 - lam) * wa."""
    if wa.codes.shape != wb.codes.shape:
        raise ValidationError(
            f"latent shapes differ: {wa.codes.shape} vs {wb.codes.shape}"
        )
    if not 0.0 <= lam <= 1.0:
        if not permissive:
            raise ValidationError(f"lambda {lam} outside [0, 1]")
        warnings.warn(f"lambda {lam} outside [0, 1]: extrapolating", UserWarning)
    lam32 = np.float32(lam)
    mixed = lam32 * np.asarray(wb.codes) + (np.float32(1.0) - lam32) * np.asarray(wa.codes)
    return wa.with_codes(mixed)


def style_mix(content: LatentCode, style: LatentCode, keep: int) -> LatentCode:
    """First ``keep`` codes from content, the rest from style."""
    if content.codes.shape != style.codes.shape:
        raise ValidationError(
            f"latent shapes differ: {content.codes.shape} vs {style.codes.shape}"
        )
    if not 0 <= keep <= content.n_codes:
        raise ValidationError(f"keep {keep} outside [0, {content.n_codes}]")
    mixed = np.concatenate(
        [np.asarray(content.codes)[:keep], np.asarray(style.codes)[keep:]], axis=0
    )
    return content.with_codes(mixed)


def default_style_mix_keep(n_codes: int) -> int:
    """Replace the last 11 codes by default (keep 7 of 18)."""
    return max(n_codes - 11, 0)


def paste_center(
    source: ImageTensor,
    target: ImageTensor,
    box: tuple[float, float, float, float] = DEFAULT_PASTE_BOX,
) -> ImageTensor:
    """Replace the box region of target with source's same region.

    ``box`` is fractional (left, top, right, bottom) within [0, 1]^2; pixels
    outside the box are bit-identical to the target.
    """
    if source.resolution != target.resolution:
        raise ValidationError(
            f"source {source.resolution} and target {target.resolution} differ"
        )
    left, top, right, bottom = box
    if not (0.0 <= left < right <= 1.0 and 0.0 <= top < bottom <= 1.0):
        raise ValidationError(f"degenerate or out-of-range box {box}")
    h, w = target.height, target.width
    x0, x1 = int(round(left * w)), int(round(right * w))
    y0, y1 = int(round(top * h)), int(round(bottom * h))
    if x1 <= x0 or y1 <= y0:
        raise ValidationError(f"box {box} selects an empty pixel region at {w}x{h}")
    px = np.array(target.pixels)
    px[y0:y1, x0:x1, :] = np.asarray(source.pixels)[y0:y1, x0:x1, :]
    return ImageTensor(px)
