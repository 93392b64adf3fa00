"""Command line interface: training, inversion, editing, hiding, benchmarking."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .errors import WinvertError


def _load_pipeline(paths):
    from .encoder import load_encoder_checkpoint

    return [load_encoder_checkpoint(p) for p in paths]


def _load_generator_arg(path):
    from .generator import load_pretrained_generator

    p = Path(path)
    manifest = p.with_suffix(".json")
    return load_pretrained_generator(p, manifest if manifest.exists() else {})


def cmd_train(args) -> int:
    from .config import encoder_config_from, parse_flat_config, train_config_from
    from .extractors import ExtractorSet
    from .train import load_dataset, train_stage

    conf = parse_flat_config(args.config)
    cfg = train_config_from(conf)
    enc_cfg = encoder_config_from(conf)
    if "generator" not in conf:
        print("config must name a generator asset", file=sys.stderr)
        return 2
    g = _load_generator_arg(conf["generator"])
    extractors = ExtractorSet.toy(cfg.seed) if conf.get("extractors") == "toy" else None
    dataset = load_dataset(args.data, args.paired)
    prev = []
    for stage in range(1, args.stage):
        prev.append(_load_pipeline([Path(args.out) / f"stage{stage}"])[0])
    result = train_stage(
        args.stage, dataset, g, prev, cfg,
        encoder_config=enc_cfg, extractors=extractors, out_dir=args.out,
    )
    final = result.history[-1]["loss"] if result.history else float("nan")
    print(f"stage {args.stage}: {len(result.history)} epochs, final loss {final:.6f}")
    print(f"checkpoint: {result.checkpoint_dir}")
    return 0


def cmd_invert(args) -> int:
    from .images import load_image, resize_image, save_image
    from .latent_io import write_latent
    from .train import invert

    pipeline = _load_pipeline(args.pipeline)
    g = _load_generator_arg(args.generator)
    side = pipeline[0].config.input_resolution
    x = resize_image(load_image(args.image), side, side)
    w, render = invert(pipeline, g, x, args.stages)
    if args.out_latent:
        n = write_latent(w, args.out_latent)
        print(f"wrote {args.out_latent} ({n} bytes)")
    if args.out_image:
        save_image(render, args.out_image)
        print(f"wrote {args.out_image}")
    return 0


def _render_if_asked(args, w) -> None:
    if getattr(args, "render", None):
        from .generator import synthesize
        from .images import save_image

        g = _load_generator_arg(args.generator)
        save_image(synthesize(g, w), args.render)
        print(f"wrote {args.render}")


def cmd_edit(args) -> int:
    from .editing import load_direction, manipulate
    from .latent_io import read_latent, write_latent

    w = manipulate(read_latent(args.latent), load_direction(args.direction), args.alpha)
    write_latent(w, args.out)
    print(f"wrote {args.out}")
    _render_if_asked(args, w)
    return 0


def cmd_interp(args) -> int:
    from .editing import interpolate
    from .latent_io import read_latent, write_latent

    w = interpolate(read_latent(args.a), read_latent(args.b), args.lam)
    write_latent(w, args.out)
    print(f"wrote {args.out}")
    _render_if_asked(args, w)
    return 0


def cmd_mix(args) -> int:
    from .editing import style_mix
    from .latent_io import read_latent, write_latent

    w = style_mix(read_latent(args.content), read_latent(args.style), args.keep)
    write_latent(w, args.out)
    print(f"wrote {args.out}")
    _render_if_asked(args, w)
    return 0


def cmd_hide(args) -> int:
    from .images import load_image, save_image
    from .latent_io import read_latent
    from .stego import hide

    stego = hide(read_latent(args.secret), load_image(args.carrier), args.key)
    save_image(stego, args.out)
    print(f"wrote {args.out}")
    return 0


def cmd_reveal(args) -> int:
    from .images import load_image
    from .latent_io import write_latent
    from .stego import reveal

    w = reveal(load_image(args.stego), args.key)
    write_latent(w, args.out)
    print(f"recovered latent ({w.n_codes}x{w.dim}) -> {args.out}")
    return 0


def cmd_benchmark(args) -> int:
    from .bench import (
        EncoderPipelineMethod,
        HybridMethod,
        OptimizationMethod,
        BenchSample,
        run_benchmark,
        write_report,
    )
    from .generator import mean_latent, gaussian_latent_sampler
    from .images import load_image, resize_image
    from .train import load_dataset

    manifest = json.loads(Path(args.methods).read_text())
    g = _load_generator_arg(manifest["generator"])
    methods = []
    for m in manifest["methods"]:
        kind = m.get("kind", "encoder")
        if kind == "encoder":
            methods.append(
                EncoderPipelineMethod(m["name"], _load_pipeline(m["pipeline"]), m.get("stages"))
            )
        elif kind == "hybrid":
            methods.append(
                HybridMethod(
                    m["name"], _load_pipeline(m["pipeline"]), m.get("iterations", 100)
                )
            )
        elif kind == "optimization":
            init = mean_latent(g, gaussian_latent_sampler(g, seed=0), m.get("mean_samples", 256))
            methods.append(
                OptimizationMethod(m["name"], m.get("iterations", 1000), init)
            )
        else:
            print(f"unknown method kind {kind!r}", file=sys.stderr)
            return 2
    side = manifest.get("resolution")
    samples = []
    for img, _aux in load_dataset(args.data):
        if side:
            img = resize_image(img, side, side)
        samples.append(BenchSample(image=img))
    report = run_benchmark(samples, methods, g)
    json_path, md_path = write_report(report, args.out)
    print(md_path.read_text())
    print(f"wrote {json_path} and {md_path}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .config import parse_flat_config
    from .editing import load_direction
    from .service import create_app

    conf = parse_flat_config(args.config)
    g = _load_generator_arg(conf["generator"])
    pipeline = _load_pipeline(
        [p.strip() for p in conf.get("checkpoints", "").split(",") if p.strip()]
    )
    directions = []
    ddir = conf.get("directions_dir")
    if ddir:
        directions = [load_direction(p) for p in sorted(Path(ddir).glob("*.json"))]
    app = create_app(g, pipeline, directions)
    host = args.host or conf.get("host", "127.0.0.1")
    port = args.port or int(conf.get("port", 8000))
    uvicorn.run(app, host=host, port=port)
    return 0


def cmd_sample(args) -> int:
    from .generator import make_toy_generator, save_generator_asset
    from .images import save_image
    from .train import sample_generator_images

    g = make_toy_generator(args.generator_seed, args.n_codes, args.dim, args.resolution)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for i, img in enumerate(sample_generator_images(g, args.count, args.data_seed)):
        save_image(img, out / f"{i:05d}.png")
    print(f"wrote {args.count} images to {out}")
    if args.save_generator:
        manifest = save_generator_asset(g, args.save_generator)
        Path(args.save_generator).with_suffix(".json").write_text(json.dumps(manifest, indent=2))
        print(f"wrote generator asset {args.save_generator} (+ .json manifest)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="winvert", description=__doc__)
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="train one inversion stage")
    t.add_argument("--config", required=True)
    t.add_argument("--stage", type=int, default=1)
    t.add_argument("--data", required=True)
    t.add_argument("--paired", default=None, help="paired dir for translation tasks")
    t.add_argument("--out", required=True)
    t.set_defaults(fn=cmd_train)

    i = sub.add_parser("invert", help="invert an image through a trained pipeline")
    i.add_argument("--image", required=True)
    i.add_argument("--pipeline", nargs="+", required=True)
    i.add_argument("--generator", required=True)
    i.add_argument("--stages", type=int, default=None)
    i.add_argument("--out-latent", default=None)
    i.add_argument("--out-image", default=None)
    i.set_defaults(fn=cmd_invert)

    e = sub.add_parser("edit", help="move a latent along a semantic direction")
    e.add_argument("--latent", required=True)
    e.add_argument("--direction", required=True)
    e.add_argument("--alpha", type=float, required=True)
    e.add_argument("--out", required=True)
    e.add_argument("--render", default=None)
    e.add_argument("--generator", default=None)
    e.set_defaults(fn=cmd_edit)

    n = sub.add_parser("interp", help="interpolate two latents")
    n.add_argument("--a", required=True)
    n.add_argument("--b", required=True)
    n.add_argument("--lambda", dest="lam", type=float, required=True)
    n.add_argument("--out", required=True)
    n.add_argument("--render", default=None)
    n.add_argument("--generator", default=None)
    n.set_defaults(fn=cmd_interp)

    m = sub.add_parser("mix", help="style-mix two latents")
    m.add_argument("--content", required=True)
    m.add_argument("--style", required=True)
    m.add_argument("--keep", type=int, required=True)
    m.add_argument("--out", required=True)
    m.add_argument("--render", default=None)
    m.add_argument("--generator", default=None)
    m.set_defaults(fn=cmd_mix)

    h = sub.add_parser("hide", help="hide a latent inside a carrier image")
    h.add_argument("--secret", required=True)
    h.add_argument("--carrier", required=True)
    h.add_argument("--key", type=int, required=True)
    h.add_argument("--out", required=True)
    h.set_defaults(fn=cmd_hide)

    r = sub.add_parser("reveal", help="recover a hidden latent")
    r.add_argument("--stego", required=True)
    r.add_argument("--key", type=int, required=True)
    r.add_argument("--out", required=True)
    r.set_defaults(fn=cmd_reveal)

    b = sub.add_parser("benchmark", help="evaluate inversion methods on a dataset")
    b.add_argument("--data", required=True)
    b.add_argument("--methods", required=True)
    b.add_argument("--out", required=True, help="report path prefix (.json/.md)")
    b.set_defaults(fn=cmd_benchmark)

    s = sub.add_parser("serve", help="run the interactive editing service")
    s.add_argument("--config", required=True)
    s.add_argument("--host", default=None)
    s.add_argument("--port", type=int, default=None)
    s.set_defaults(fn=cmd_serve)

    d = sub.add_parser("sample", help="sample a toy generator into a dataset dir")
    d.add_argument("--generator-seed", type=int, default=7)
    d.add_argument("--n-codes", type=int, default=6)
    d.add_argument("--dim", type=int, default=16)
    d.add_argument("--resolution", type=int, default=32)
    d.add_argument("--count", type=int, default=64)
    d.add_argument("--data-seed", type=int, default=0)
    d.add_argument("--out", required=True)
    d.add_argument("--save-generator", default=None)
    d.set_defaults(fn=cmd_sample)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except WinvertError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
