"""Command-line entry point: prepare | train | upscale | evaluate | ablate | profile.

Every subcommand accepts --config <json file of dotted keys> plus repeatable
--set key=value overrides; the effective config is echoed to stderr before
work starts. Reports go to stdout as JSON unless --table is passed. Known
error classes exit with code 2 and a one-line message; unexpected failures
exit 1. ISB_THREADS caps any worker or thread count.
"""

from __future__ import annotations

import argparse
import json
import os
import shutil
import subprocess
import sys
import traceback
from dataclasses import replace
from pathlib import Path

from .config import RunConfig, apply_overrides, echo_config, load_config
from .data_pipeline import PreparedCorpus, ingest_clip, prepare_corpus, window_clip
from .discriminator import DiscriminatorConfig
from .errors import BadRatios, DimensionMismatch, UnreadableSource, VsrError
from .evaluation import (
    LATTICE,
    BicubicBaseline,
    FrameDirectoryModel,
    GeneratorModel,
    ablation_report,
    evaluate_clip,
)
from .frames import FRAME_NAME, load_clip, save_frame
from .generator import GeneratorConfig
from .metrics import temporal_profile
from .optical_flow import FlowStore, load_window_flows, precompute_flows
from .trainer import (
    AblationMode,
    discriminator_config_from_dict,
    fit,
    generator_config_from_dict,
    load_checkpoint,
    train_config_from_dict,
)

PROG = "vsrgan"


def thread_cap() -> int:
    """0 means uncapped."""
    raw = os.environ.get("ISB_THREADS", "")
    if not raw:
        return 0
    try:
        return max(1, int(raw))
    except ValueError:
        return 0


def cap_workers(n: int) -> int:
    cap = thread_cap()
    return min(n, cap) if cap else n


def _effective_config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    if args.set:
        cfg = apply_overrides(cfg, args.set)
    return cfg


def _profile_configs(cfg: RunConfig, profile: str | None, n_neighbors: int | None):
    """Model configs for a named size profile; None keeps the config file's."""
    if profile == "tiny":
        gen = GeneratorConfig.tiny(n_neighbors=n_neighbors or 2)
        disc = DiscriminatorConfig.tiny()
    elif profile == "full":
        gen = replace(cfg.generator, n_neighbors=n_neighbors or cfg.generator.n_neighbors)
        disc = cfg.discriminator
    else:
        gen = cfg.generator
        if n_neighbors:
            gen = replace(gen, n_neighbors=n_neighbors)
        disc = cfg.discriminator
    return gen, disc


def _emit(payload, table_text: str | None, as_table: bool) -> None:
    if as_table and table_text is not None:
        print(table_text)
    else:
        print(json.dumps(payload, sort_keys=True))


def _parse_ratios(text: str) -> tuple[float, float, float]:
    parts = text.split(",")
    if len(parts) != 3:
        raise BadRatios(f"--ratios wants three comma-separated numbers, got {text!r}")
    return tuple(float(p) for p in parts)


def cmd_prepare(args) -> int:
    cfg = _effective_config(args)
    data_root = args.data_root or cfg.paths.data_root
    out_root = args.out_root or cfg.paths.prepared_root
    if not data_root or not out_root:
        raise UnreadableSource("prepare needs --data-root and --out-root (or config paths)")
    split = prepare_corpus(
        data_root,
        out_root,
        scale=cfg.generator.scale,
        n_neighbors=args.neighbors or cfg.generator.n_neighbors,
        ratios=_parse_ratios(args.ratios),
        seed=cfg.train.seed,
        flow_params=cfg.flow,
        workers=cap_workers(args.workers),
    )
    _emit(
        {
            "out_root": str(out_root),
            "train": split.train,
            "val": split.val,
            "test": split.test,
        },
        None,
        False,
    )
    return 0


def cmd_train(args) -> int:
    cfg = _effective_config(args)
    prepared_root = args.prepared_root or cfg.paths.prepared_root
    checkpoint_dir = args.checkpoint_dir or cfg.paths.checkpoint_dir or "checkpoints"
    corpus = PreparedCorpus(prepared_root)
    resume_bundle = load_checkpoint(args.resume) if args.resume else None
    if resume_bundle is not None and args.profile is None:
        # continue with the checkpoint's own configs unless a profile overrides
        gen = generator_config_from_dict(resume_bundle.configs["generator"])
        disc = discriminator_config_from_dict(resume_bundle.configs["discriminator"])
        train_cfg = train_config_from_dict(resume_bundle.configs["train"])
    else:
        gen, disc = _profile_configs(cfg, args.profile, args.neighbors)
        train_cfg = cfg.train
    updates = {}
    if args.max_steps is not None:
        updates["max_steps"] = args.max_steps
    if args.batch_size is not None:
        updates["batch_size"] = args.batch_size
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.lr is not None:
        updates["learning_rate"] = args.lr
    if args.ablation is not None:
        updates["ablation_mode"] = AblationMode(args.ablation)
    if args.checkpoint_every is not None:
        updates["checkpoint_every"] = args.checkpoint_every
    if updates:
        train_cfg = replace(train_cfg, **updates)
    cap = thread_cap()
    if cap:
        train_cfg = replace(train_cfg, torch_threads=min(train_cfg.torch_threads, cap))

    log_stream = None
    if args.log_file:
        Path(args.log_file).parent.mkdir(parents=True, exist_ok=True)
        log_stream = open(args.log_file, "a" if args.resume else "w", encoding="utf-8")
    try:
        bundle = fit(
            corpus,
            train_cfg,
            gen,
            disc,
            checkpoint_dir,
            log_stream=log_stream,
            resume=resume_bundle,
        )
    finally:
        if log_stream is not None:
            log_stream.close()
    _emit(
        {
            "final_step": bundle.step,
            "checkpoint": str(Path(checkpoint_dir) / "final.ckpt"),
            "ablation_mode": train_cfg.ablation_mode.value,
        },
        None,
        False,
    )
    return 0


def cmd_upscale(args) -> int:
    cfg = _effective_config(args)
    bundle = load_checkpoint(args.checkpoint)
    model = GeneratorModel.from_bundle(bundle)
    n = int(bundle.configs["generator"]["n_neighbors"])
    clip = ingest_clip(args.input)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    store = FlowStore(out_dir / ".flows")
    precompute_flows(clip, n, cfg.flow, store, workers=cap_workers(args.workers))
    shape = (clip[0].height, clip[0].width)
    written = []
    for t in range(len(clip)):
        flows = load_window_flows(store, clip.clip_id, t, n, shape)
        window = window_clip(clip, t, n, flows, None)
        sr = model(window)
        if (sr.height, sr.width) != (4 * clip[0].height, 4 * clip[0].width):
            raise DimensionMismatch(
                f"model produced {sr.height}x{sr.width}, expected 4x of {shape}"
            )
        path = out_dir / FRAME_NAME.format(t)
        save_frame(sr, path)
        written.append(str(path))

    if args.video and not args.no_video:
        encoder = shutil.which("ffmpeg")
        if encoder is None:
            raise UnreadableSource("video assembly needs ffmpeg on PATH; rerun with --no-video")
        cmd = [
            encoder,
            "-v", "error", "-y",
            "-framerate", "24",
            "-i", str(out_dir / "%06d.png"),
            str(args.video),
        ]
        proc = subprocess.run(cmd, capture_output=True, text=True)
        if proc.returncode != 0:
            raise UnreadableSource(f"encoder failed: {proc.stderr.strip()}")
    _emit({"frames": len(written), "out_dir": str(out_dir)}, None, False)
    return 0


def _evaluate_model(args, cfg: RunConfig, n_fallback: int):
    if args.checkpoint:
        bundle = load_checkpoint(args.checkpoint)
        return GeneratorModel.from_bundle(bundle), int(bundle.configs["generator"]["n_neighbors"])
    if args.sr_dir:
        return FrameDirectoryModel(args.sr_dir), n_fallback
    if args.baseline == "bicubic":
        return BicubicBaseline(cfg.generator.scale), n_fallback
    raise UnreadableSource("evaluate needs --checkpoint, --sr-dir, or --baseline bicubic")


def cmd_evaluate(args) -> int:
    cfg = _effective_config(args)
    corpus = PreparedCorpus(args.prepared_root or cfg.paths.prepared_root)
    split = corpus.split
    clip_ids = [args.clip] if args.clip else (split.test or split.val or split.train)
    model, n = _evaluate_model(args, cfg, args.neighbors or cfg.generator.n_neighbors)
    reports = []
    for cid in clip_ids:
        report = evaluate_clip(
            model,
            corpus.lr_clip(cid),
            corpus.hr_clip(cid),
            corpus.flow_store,
            n,
            crop_border=args.crop_border,
        )
        reports.append(report)
    payload = [r.to_dict() for r in reports]
    lines = [f"{'clip':<12}{'frames':>7}{'mean_psnr_db':>14}{'mean_ssim':>11}"]
    for r in reports:
        p = "perfect" if r.mean_psnr_db is None else f"{r.mean_psnr_db:.4f}"
        lines.append(f"{r.clip_id:<12}{len(r.per_frame):>7}{p:>14}{r.mean_ssim:>11.4f}")
    _emit(payload if len(payload) > 1 else payload[0], "\n".join(lines), args.table)
    return 0


def _parse_modes(text: str) -> list[AblationMode]:
    if text == "all":
        return list(LATTICE)
    return [AblationMode(tok.strip()) for tok in text.split(",") if tok.strip()]


def cmd_ablate(args) -> int:
    cfg = _effective_config(args)
    corpus = PreparedCorpus(args.prepared_root or cfg.paths.prepared_root)
    gen, disc = _profile_configs(cfg, args.profile or "tiny", args.neighbors)
    train_cfg = cfg.train
    if args.seed is not None:
        train_cfg = replace(train_cfg, seed=args.seed)
    if args.batch_size is not None:
        train_cfg = replace(train_cfg, batch_size=args.batch_size)
    report = ablation_report(
        _parse_modes(args.modes), corpus, args.steps, gen, disc, train_cfg
    )
    _emit(report.to_dict(), report.to_table(), args.table)
    return 0


def cmd_profile(args) -> int:
    _effective_config(args)
    clip = load_clip(args.frames)
    image = temporal_profile(clip.frames, args.row)
    save_frame(image, args.out)
    _emit(
        {"out": str(args.out), "frames": image.height, "width": image.width},
        None,
        False,
    )
    return 0


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="JSON config file of dotted keys")
    sub.add_argument(
        "--set",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override one config key (repeatable)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog=PROG, description=__doc__)
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("prepare", help="extract frames, build LR/HR pairs, flows, split")
    _add_common(p)
    p.add_argument("--data-root", help="directory of clip sources")
    p.add_argument("--out-root", help="prepared corpus destination")
    p.add_argument("--neighbors", type=int, help="flow window size")
    p.add_argument("--ratios", default="0.8,0.1,0.1", help="train,val,test ratios")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_prepare)

    p = subs.add_parser("train", help="run the GAN training loop")
    _add_common(p)
    p.add_argument("--prepared-root")
    p.add_argument("--checkpoint-dir")
    p.add_argument("--log-file")
    p.add_argument("--profile", choices=["tiny", "full"])
    p.add_argument("--neighbors", type=int)
    p.add_argument("--max-steps", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--checkpoint-every", type=int)
    p.add_argument("--ablation", choices=[m.value for m in AblationMode])
    p.add_argument("--resume", help="checkpoint file to continue from")
    p.set_defaults(func=cmd_train)

    p = subs.add_parser("upscale", help="super-resolve a clip with a trained checkpoint")
    _add_common(p)
    p.add_argument("--input", required=True, help="frame directory or video file")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--video", help="also assemble an output video at this path")
    p.add_argument("--no-video", action="store_true", help="never invoke an encoder")
    p.set_defaults(func=cmd_upscale)

    p = subs.add_parser("evaluate", help="PSNR/SSIM report against HR ground truth")
    _add_common(p)
    p.add_argument("--prepared-root")
    p.add_argument("--clip", help="single clip id (default: test split)")
    p.add_argument("--checkpoint")
    p.add_argument("--sr-dir", help="directory of already-upscaled frames")
    p.add_argument("--baseline", choices=["bicubic"])
    p.add_argument("--neighbors", type=int)
    p.add_argument("--crop-border", type=int, default=0)
    p.add_argument("--table", action="store_true")
    p.set_defaults(func=cmd_evaluate)

    p = subs.add_parser("ablate", help="train and score each loss-component mode")
    _add_common(p)
    p.add_argument("--prepared-root")
    p.add_argument("--modes", default="all")
    p.add_argument("--steps", type=int, default=50)
    p.add_argument("--profile", choices=["tiny", "full"])
    p.add_argument("--neighbors", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--table", action="store_true")
    p.set_defaults(func=cmd_ablate)

    p = subs.add_parser("profile", help="temporal-profile image from a frame directory")
    _add_common(p)
    p.add_argument("--frames", required=True)
    p.add_argument("--row", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_profile)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _effective_config(args)
        sys.stderr.write(echo_config(cfg) + "\n")
        return args.func(args)
    except (VsrError, ValueError) as e:
        sys.stderr.write(f"{type(e).__name__}: {e}\n")
        return 2
    except Exception:
        traceback.print_exc()
        return 1


if __name__ == "__main__":
    sys.exit(main())
