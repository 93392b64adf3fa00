"""Inversion baselines and the benchmark harness.

The optimization baseline does gradient descent on the training loss over
the latent code itself (the classic projection approach); the hybrid mode
starts that descent from an encoder prediction. The harness evaluates
methods over a dataset and emits a report whose markdown table mirrors the
usual comparison layout: SSIM, PSNR, IDS, RunTime(s), Param(M).
"""

from __future__ import annotations

import json
import platform
import statistics
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
import torch

from .encoder import Encoder, param_count
from .errors import ValidationError
from .extractors import ExtractorSet
from .generator import GeneratorHandle, synthesize
from .images import resize_chw
from .losses import total_loss
from .metrics import identity_similarity, luminance_embedder, psnr, ssim
from .train import invert
from .types import ImageTensor, LatentCode, LossWeights

PIXEL_ONLY = LossWeights(1.0, 0.0, 0.0, 0.0)


def invert_by_optimization(
    g: GeneratorHandle,
    x: ImageTensor,
    iterations: int,
    init: LatentCode,
    weights: LossWeights = PIXEL_ONLY,
    extractors: ExtractorSet | None = None,
    lr: float = 0.05,
) -> LatentCode:
    """Gradient descent on the reconstruction loss over the latent code.

    Returns the best iterate seen (never worse than the initialization);
    aborts on a non-finite loss, returning the last finite best.
    """
    if iterations < 1:
        raise ValidationError(f"iterations must be >= 1, got {iterations}")
    if init.n_codes != g.n_codes or init.dim != g.dim:
        raise ValidationError("init latent shape does not match generator")
    target = x.to_tensor().unsqueeze(0)
    side = x.height
    w = init.to_tensor().unsqueeze(0).clone().requires_grad_(True)
    opt = torch.optim.Adam([w], lr=lr)

    def evaluate() -> torch.Tensor:
        recon = resize_chw(g.synthesize_tensor(w), side)
        loss, _ = total_loss(target, recon, weights, extractors)
        return loss

    best_loss = float("inf")
    best_w = init.to_tensor().clone()
    for _ in range(iterations):
        loss = evaluate()
        if not torch.isfinite(loss):
            break
        if float(loss.detach()) < best_loss:
            best_loss = float(loss.detach())
            best_w = w.detach().squeeze(0).clone()
        opt.zero_grad()
        loss.backward()
        opt.step()
    with torch.no_grad():
        final = evaluate()
    if torch.isfinite(final) and float(final) < best_loss:
        best_w = w.detach().squeeze(0).clone()
    return LatentCode.from_tensor(best_w)


@dataclass(frozen=True)
class BenchSample:
    image: ImageTensor
    latent: LatentCode | None = None
    name: str = ""


class BenchMethod:
    """A named inversion method: sample -> reconstructed image."""

    name: str = "method"
    param_millions: float | None = None

    def run(self, sample: BenchSample, g: GeneratorHandle) -> ImageTensor:
        raise NotImplementedError


class EncoderPipelineMethod(BenchMethod):
    def __init__(self, name: str, pipeline: Sequence[Encoder], stages: int | None = None):
        self.name = name
        self.pipeline = list(pipeline)
        self.stages = stages if stages is not None else len(self.pipeline)
        self.param_millions = (
            sum(param_count(e) for e in self.pipeline[: self.stages]) / 1e6
        )

    def run(self, sample: BenchSample, g: GeneratorHandle) -> ImageTensor:
        _, recon = invert(self.pipeline, g, sample.image, self.stages)
        return recon


class OptimizationMethod(BenchMethod):
    def __init__(
        self,
        name: str,
        iterations: int,
        init: LatentCode | Callable[[GeneratorHandle], LatentCode],
        weights: LossWeights = PIXEL_ONLY,
        lr: float = 0.05,
    ):
        self.name = name
        self.iterations = iterations
        self.init = init
        self.weights = weights
        self.lr = lr
        self.param_millions = None

    def _initial(self, g: GeneratorHandle) -> LatentCode:
        return self.init(g) if callable(self.init) else self.init

    def run(self, sample: BenchSample, g: GeneratorHandle) -> ImageTensor:
        w = invert_by_optimization(
            g, sample.image, self.iterations, self._initial(g), self.weights, lr=self.lr
        )
        return _render(g, w, sample.image.height)


class HybridMethod(BenchMethod):
    """Encoder initialization refined by a short latent optimization."""

    def __init__(
        self,
        name: str,
        pipeline: Sequence[Encoder],
        iterations: int = 100,
        weights: LossWeights = PIXEL_ONLY,
        lr: float = 0.05,
    ):
        self.name = name
        self.pipeline = list(pipeline)
        self.iterations = iterations
        self.weights = weights
        self.lr = lr
        self.param_millions = sum(param_count(e) for e in self.pipeline) / 1e6

    def run(self, sample: BenchSample, g: GeneratorHandle) -> ImageTensor:
        w0, _ = invert(self.pipeline, g, sample.image)
        w = invert_by_optimization(
            g, sample.image, self.iterations, w0, self.weights, lr=self.lr
        )
        return _render(g, w, sample.image.height)


class GroundTruthReplayMethod(BenchMethod):
    """Re-synthesizes the stored true latent; perfect on generator-sampled data."""

    name = "replay"
    param_millions = None

    def run(self, sample: BenchSample, g: GeneratorHandle) -> ImageTensor:
        if sample.latent is None:
            raise ValidationError("replay method needs samples with stored latents")
        return _render(g, sample.latent, sample.image.height)


def _render(g: GeneratorHandle, w: LatentCode, side: int) -> ImageTensor:
    img = synthesize(g, w)
    if img.height != side:
        t = resize_chw(img.to_tensor(), side)
        return ImageTensor.from_tensor(t)
    return img


@dataclass
class BenchRow:
    name: str
    ssim: float | None = None
    psnr: float | None = None
    ids: float | None = None
    runtime_seconds: float | None = None
    param_millions: float | None = None
    error: str | None = None


@dataclass
class BenchReport:
    rows: list[BenchRow]
    dataset: dict
    environment: dict = field(default_factory=dict)

    def to_json(self) -> str:
        def fix(v):
            if isinstance(v, float) and (v != v or v in (float("inf"), float("-inf"))):
                return "inf" if v == float("inf") else ("-inf" if v == float("-inf") else "nan")
            return v

        payload = {
            "dataset": self.dataset,
            "environment": self.environment,
            "rows": [
                {k: fix(v) for k, v in row.__dict__.items()} for row in self.rows
            ],
        }
        return json.dumps(payload, indent=2)

    def to_markdown(self) -> str:
        def fmt(v, nd=3):
            if v is None:
                return "-"
            if isinstance(v, float) and v == float("inf"):
                return "inf"
            return f"{v:.{nd}f}"

        lines = [
            "| Methods | SSIM | PSNR | IDS | RunTime(s) | Param(M) |",
            "|---|---|---|---|---|---|",
        ]
        for r in self.rows:
            if r.error is not None:
                lines.append(f"| {r.name} | failed: {r.error} | | | | |")
                continue
            lines.append(
                f"| {r.name} | {fmt(r.ssim)} | {fmt(r.psnr, 2)} | {fmt(r.ids)} "
                f"| {fmt(r.runtime_seconds, 4)} | {fmt(r.param_millions, 1)} |"
            )
        return "\n".join(lines) + "\n"


def run_benchmark(
    dataset: Sequence[BenchSample],
    methods: Sequence[BenchMethod],
    g: GeneratorHandle,
    embedder: Callable | None = None,
) -> BenchReport:
    """Evaluate each method over the dataset; failures become failed rows.

    Runtime is the median per-image wall time after one discarded warmup
    pass; metric means are order-independent.
    """
    samples = list(dataset)
    if not samples:
        raise ValidationError("benchmark dataset is empty")
    embedder = embedder or luminance_embedder()
    rows = []
    for method in methods:
        try:
            method.run(samples[0], g)  # warmup, excluded from timing
            ssims, psnrs, idss, times = [], [], [], []
            for sample in samples:
                t0 = time.perf_counter()
                recon = method.run(sample, g)
                times.append(time.perf_counter() - t0)
                ssims.append(ssim(sample.image, recon))
                psnrs.append(psnr(sample.image, recon))
                idss.append(identity_similarity(sample.image, recon, embedder))
            rows.append(
                BenchRow(
                    name=method.name,
                    ssim=float(np.mean(ssims)),
                    psnr=float(np.mean(psnrs)),
                    ids=float(np.mean(idss)),
                    runtime_seconds=float(statistics.median(times)),
                    param_millions=method.param_millions,
                )
            )
        except Exception as e:  # a failing method is reported, not dropped
            rows.append(BenchRow(name=method.name, error=f"{type(e).__name__}: {e}"))
    res = samples[0].image.resolution
    return BenchReport(
        rows=rows,
        dataset={"size": len(samples), "resolution": list(res)},
        environment={
            "python": platform.python_version(),
            "torch": torch.__version__,
            "platform": platform.platform(),
        },
    )


def write_report(report: BenchReport, out_prefix: str | Path) -> tuple[Path, Path]:
    out_prefix = Path(out_prefix)
    out_prefix.parent.mkdir(parents=True, exist_ok=True)
    json_path = out_prefix.with_suffix(".json")
    md_path = out_prefix.with_suffix(".md")
    json_path.write_text(report.to_json())
    md_path.write_text(report.to_markdown())
    return json_path, md_path
