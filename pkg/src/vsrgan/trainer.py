"""Alternating GAN training: discriminator step then generator step, once
each per batch, with deterministic seeding, JSON-lines loss logging, binary
checkpoints, and the six-mode loss-component ablation lattice.

Determinism contract: parameter init is driven by per-network seeded
generators, epoch shuffles are pure functions of (seed, epoch), training
runs in float32 on a fixed torch thread count, and checkpoints carry exact
float32 parameter and Adam-state bytes. Two runs with equal seed and config
produce identical loss streams, and resuming from a step-k checkpoint
reproduces the uninterrupted trajectory bit for bit.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np
import torch

from .checkpoint import CheckpointBundle, load_checkpoint, save_checkpoint
from .data_pipeline import ClipWindow, PreparedCorpus
from .discriminator import Discriminator, DiscriminatorConfig
from .errors import EmptyCorpus, NonFiniteLoss, ShapeMismatch
from .feature_extractor import make_extractor
from .generator import GeneratorConfig, RecurrentBackProjectionGenerator
from .losses import (
    LossBreakdown,
    LossWeights,
    discriminator_loss,
    generator_loss,
    mean_breakdown,
    sequence_loss,
)
from .tensors import stack_windows

LOG_FIELDS = ("step", "mse", "perceptual", "adversarial", "tv", "total", "d_loss", "wall_ms")


class AblationMode(Enum):
    """Loss-component lattice from the plain L1 baseline to the full objective."""

    L1_ONLY = "l1_only"
    MSE_ONLY = "mse_only"
    ADV = "adv"
    ADV_MSE = "adv_mse"
    ADV_MSE_PERC = "adv_mse_perc"
    FULL = "full"

    @property
    def pixel(self):
        """Pixel objective name, or None when no pixel term is active."""
        if self is AblationMode.L1_ONLY:
            return "l1"
        if self is AblationMode.ADV:
            return None
        return "mse"

    @property
    def adversarial(self) -> bool:
        return self is not AblationMode.L1_ONLY and self is not AblationMode.MSE_ONLY

    @property
    def perceptual(self) -> bool:
        return self in (AblationMode.ADV_MSE_PERC, AblationMode.FULL)

    @property
    def tv(self) -> bool:
        return self is AblationMode.FULL

    @property
    def updates_discriminator(self) -> bool:
        return self.adversarial


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-4
    adam_betas: tuple = (0.9, 0.999)
    batch_size: int = 4
    max_steps: int = 1000
    seed: int = 0
    loss_weights: LossWeights = field(default_factory=LossWeights)
    ablation_mode: AblationMode = AblationMode.FULL
    checkpoint_every: int = 100
    feature_extractor: str = "tiny"
    torch_threads: int = 1

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.max_steps < 0:
            raise ValueError("max_steps must be >= 0")
        if self.checkpoint_every < 1:
            raise ValueError("checkpoint_every must be >= 1")
        if self.torch_threads < 1:
            raise ValueError("torch_threads must be >= 1")


def train_config_to_dict(c: TrainConfig) -> dict:
    return {
        "learning_rate": c.learning_rate,
        "adam_betas": list(c.adam_betas),
        "batch_size": c.batch_size,
        "max_steps": c.max_steps,
        "seed": c.seed,
        "loss_weights": asdict(c.loss_weights),
        "ablation_mode": c.ablation_mode.value,
        "checkpoint_every": c.checkpoint_every,
        "feature_extractor": c.feature_extractor,
        "torch_threads": c.torch_threads,
    }


def train_config_from_dict(d: dict) -> TrainConfig:
    return TrainConfig(
        learning_rate=float(d["learning_rate"]),
        adam_betas=tuple(float(b) for b in d["adam_betas"]),
        batch_size=int(d["batch_size"]),
        max_steps=int(d["max_steps"]),
        seed=int(d["seed"]),
        loss_weights=LossWeights(**{k: float(v) for k, v in d["loss_weights"].items()}),
        ablation_mode=AblationMode(d["ablation_mode"]),
        checkpoint_every=int(d["checkpoint_every"]),
        feature_extractor=str(d["feature_extractor"]),
        torch_threads=int(d["torch_threads"]),
    )


def generator_config_to_dict(c: GeneratorConfig) -> dict:
    return asdict(c)


def generator_config_from_dict(d: dict) -> GeneratorConfig:
    return GeneratorConfig(**{k: int(v) if k != "prelu_init" else float(v) for k, v in d.items()})


def discriminator_config_to_dict(c: DiscriminatorConfig) -> dict:
    d = asdict(c)
    d["input_size"] = list(c.input_size)
    d["channel_schedule"] = list(c.channel_schedule)
    return d


def discriminator_config_from_dict(d: dict) -> DiscriminatorConfig:
    return DiscriminatorConfig(
        input_size=tuple(int(x) for x in d["input_size"]),
        channel_schedule=tuple(int(x) for x in d["channel_schedule"]),
        leaky_slope=float(d["leaky_slope"]),
        adaptive_pool=bool(d["adaptive_pool"]),
    )


@dataclass
class TrainState:
    generator: RecurrentBackProjectionGenerator
    discriminator: Discriminator
    fx: object
    g_opt: torch.optim.Adam
    d_opt: torch.optim.Adam
    step: int
    rng: np.random.Generator


def _make_optimizer(module, config: TrainConfig) -> torch.optim.Adam:
    # foreach=False keeps the single-tensor Adam path for stable state layout
    return torch.optim.Adam(
        module.parameters(), lr=config.learning_rate, betas=tuple(config.adam_betas), foreach=False
    )


def make_state(
    gen_config: GeneratorConfig, disc_config: DiscriminatorConfig, config: TrainConfig
) -> TrainState:
    torch.set_num_threads(config.torch_threads)
    generator = RecurrentBackProjectionGenerator(gen_config, seed=config.seed)
    discriminator = Discriminator(disc_config, seed=config.seed + 1)
    fx = make_extractor(config.feature_extractor) if config.ablation_mode.perceptual else None
    return TrainState(
        generator=generator,
        discriminator=discriminator,
        fx=fx,
        g_opt=_make_optimizer(generator, config),
        d_opt=_make_optimizer(discriminator, config),
        step=0,
        rng=np.random.default_rng(config.seed),
    )


def train_step(
    batch: list[ClipWindow], state: TrainState, config: TrainConfig
) -> tuple[TrainState, LossBreakdown, float]:
    """One alternation: update D on the detached batch, then update G.

    Returns the frame-averaged generator LossBreakdown (floats) and the
    frame-averaged discriminator loss (0.0 in modes that never train D).
    """
    mode = config.ablation_mode
    target, neighbors, flows, hr = stack_windows(batch, dtype=torch.float32)
    if hr is None:
        raise ValueError("training windows must carry HR ground truth")
    g, d = state.generator, state.discriminator
    ids = [(w.clip_id, w.t) for w in batch]

    sr = g(target, neighbors, flows)

    d_loss_value = 0.0
    if mode.updates_discriminator:
        d_hr = d(hr)
        d_sr = d(sr.detach())
        d_loss = sequence_loss([discriminator_loss(d_hr[i], d_sr[i]) for i in range(len(batch))])
        if not torch.isfinite(d_loss):
            raise NonFiniteLoss(f"non-finite discriminator loss at step {state.step + 1} on {ids}")
        state.d_opt.zero_grad()
        d_loss.backward()
        state.d_opt.step()
        d_loss_value = float(d_loss.detach())

    d_probs = None
    if mode.adversarial:
        for p in d.parameters():
            p.requires_grad_(False)
        d_probs = d(sr)
    parts = [
        generator_loss(
            sr[i],
            hr[i],
            d_prob=None if d_probs is None else d_probs[i],
            fx=state.fx if mode.perceptual else None,
            weights=config.loss_weights,
            pixel=mode.pixel,
            include_tv=mode.tv,
        )
        for i in range(len(batch))
    ]
    breakdown = mean_breakdown(parts)
    if not torch.isfinite(breakdown.total):
        raise NonFiniteLoss(f"non-finite generator loss at step {state.step + 1} on {ids}")
    state.g_opt.zero_grad()
    breakdown.total.backward()
    state.g_opt.step()
    if mode.adversarial:
        for p in d.parameters():
            p.requires_grad_(True)
    state.step += 1
    return state, breakdown.as_floats(), d_loss_value


def epoch_order(n_windows: int, seed: int, epoch: int) -> np.ndarray:
    """Shuffled window order for one epoch, a pure function of (seed, epoch)."""
    return np.random.default_rng([seed, epoch]).permutation(n_windows)


def _module_arrays(module) -> dict:
    return {
        name: tensor.detach().cpu().numpy().astype("<f4", copy=True)
        for name, tensor in module.state_dict().items()
    }


def _optimizer_arrays(prefix: str, module, opt) -> dict:
    out = {}
    for name, param in module.named_parameters():
        entry = opt.state.get(param)
        if not entry:
            continue
        for key in ("step", "exp_avg", "exp_avg_sq"):
            out[f"{prefix}.{name}.{key}"] = (
                entry[key].detach().cpu().numpy().astype("<f4", copy=True)
            )
    return out


def bundle_from_state(
    state: TrainState,
    gen_config: GeneratorConfig,
    disc_config: DiscriminatorConfig,
    config: TrainConfig,
) -> CheckpointBundle:
    rng_state = json.dumps(state.rng.bit_generator.state, sort_keys=True).encode("utf-8")
    return CheckpointBundle(
        generator_params=_module_arrays(state.generator),
        discriminator_params=_module_arrays(state.discriminator),
        optimizer_state=dict(
            **_optimizer_arrays("g", state.generator, state.g_opt),
            **_optimizer_arrays("d", state.discriminator, state.d_opt),
        ),
        step=state.step,
        configs={
            "generator": generator_config_to_dict(gen_config),
            "discriminator": discriminator_config_to_dict(disc_config),
            "train": train_config_to_dict(config),
        },
        rng_state=rng_state,
    )


def _load_module_arrays(module, arrays: dict, what: str) -> None:
    target = module.state_dict()
    if set(target) != set(arrays):
        missing = sorted(set(target) - set(arrays))
        extra = sorted(set(arrays) - set(target))
        raise ShapeMismatch(f"{what}: parameter names differ (missing {missing}, extra {extra})")
    with torch.no_grad():
        for name, tensor in target.items():
            arr = arrays[name]
            if tuple(arr.shape) != tuple(tensor.shape):
                raise ShapeMismatch(
                    f"{what}.{name}: checkpoint {tuple(arr.shape)} vs model {tuple(tensor.shape)}"
                )
            tensor.copy_(torch.from_numpy(arr))


def _restore_optimizer(opt, module, entries: dict) -> None:
    names = [name for name, _ in module.named_parameters()]
    sd = opt.state_dict()
    restored = {}
    for i, name in enumerate(names):
        keys = {k: entries.get(f"{name}.{k}") for k in ("step", "exp_avg", "exp_avg_sq")}
        if all(v is None for v in keys.values()):
            continue
        if any(v is None for v in keys.values()):
            raise ShapeMismatch(f"optimizer entry for {name} is incomplete")
        restored[i] = {
            "step": torch.from_numpy(keys["step"].copy()).reshape(()),
            "exp_avg": torch.from_numpy(keys["exp_avg"].copy()),
            "exp_avg_sq": torch.from_numpy(keys["exp_avg_sq"].copy()),
        }
    sd["state"] = restored
    opt.load_state_dict(sd)


def state_from_bundle(
    bundle: CheckpointBundle,
    gen_config: GeneratorConfig = None,
    disc_config: DiscriminatorConfig = None,
    config: TrainConfig = None,
) -> tuple[TrainState, GeneratorConfig, DiscriminatorConfig, TrainConfig]:
    """Rebuild live training state. Explicit configs override the stored ones;
    parameter shapes must then still match or ShapeMismatch is raised."""
    gen_config = gen_config or generator_config_from_dict(bundle.configs["generator"])
    disc_config = disc_config or discriminator_config_from_dict(bundle.configs["discriminator"])
    config = config or train_config_from_dict(bundle.configs["train"])
    state = make_state(gen_config, disc_config, config)
    _load_module_arrays(state.generator, bundle.generator_params, "generator")
    _load_module_arrays(state.discriminator, bundle.discriminator_params, "discriminator")
    g_entries = {k[2:]: v for k, v in bundle.optimizer_state.items() if k.startswith("g.")}
    d_entries = {k[2:]: v for k, v in bundle.optimizer_state.items() if k.startswith("d.")}
    _restore_optimizer(state.g_opt, state.generator, g_entries)
    _restore_optimizer(state.d_opt, state.discriminator, d_entries)
    state.step = bundle.step
    if bundle.rng_state:
        state.rng.bit_generator.state = json.loads(bundle.rng_state.decode("utf-8"))
    return state, gen_config, disc_config, config


def log_record(step: int, breakdown: LossBreakdown, d_loss: float, wall_ms: float) -> str:
    values = breakdown.to_dict()
    record = {
        "step": step,
        "mse": values["mse"],
        "perceptual": values["perceptual"],
        "adversarial": values["adversarial"],
        "tv": values["tv"],
        "total": values["total"],
        "d_loss": d_loss,
        "wall_ms": wall_ms,
    }
    return json.dumps(record)


def fit(
    corpus: PreparedCorpus,
    config: TrainConfig,
    gen_config: GeneratorConfig,
    disc_config: DiscriminatorConfig,
    checkpoint_dir,
    log_stream=None,
    resume=None,
) -> CheckpointBundle:
    """Train over shuffled epochs of the corpus's train-split windows.

    Saves a checkpoint every config.checkpoint_every steps and a final one at
    the end; checkpoint_dir=None trains in memory without saving. `resume`
    accepts a checkpoint path or bundle; continuation from step k matches the
    uninterrupted run exactly.
    """
    torch.set_num_threads(config.torch_threads)
    split = corpus.split
    if not split.train:
        raise EmptyCorpus("train split is empty")
    index = corpus.window_index(split.train)
    if not index:
        raise EmptyCorpus("train split contains no frames")
    batches_per_epoch = math.ceil(len(index) / config.batch_size)

    if resume is not None:
        bundle = resume if isinstance(resume, CheckpointBundle) else load_checkpoint(resume)
        state, gen_config, disc_config, config = state_from_bundle(
            bundle, gen_config, disc_config, config
        )
    else:
        state = make_state(gen_config, disc_config, config)

    if checkpoint_dir is not None:
        checkpoint_dir = Path(checkpoint_dir)
        checkpoint_dir.mkdir(parents=True, exist_ok=True)

    cached_epoch = -1
    order = None
    while state.step < config.max_steps:
        epoch = state.step // batches_per_epoch
        slot = state.step % batches_per_epoch
        if epoch != cached_epoch:
            order = epoch_order(len(index), config.seed, epoch)
            cached_epoch = epoch
        picks = order[slot * config.batch_size : (slot + 1) * config.batch_size]
        batch = [
            corpus.window(index[i][0], index[i][1], gen_config.n_neighbors, with_hr=True)
            for i in picks
        ]
        t0 = time.monotonic()
        state, breakdown, d_loss = train_step(batch, state, config)
        wall_ms = (time.monotonic() - t0) * 1000.0
        if log_stream is not None:
            log_stream.write(log_record(state.step, breakdown, d_loss, wall_ms) + "\n")
            log_stream.flush()
        if checkpoint_dir is not None and state.step % config.checkpoint_every == 0:
            bundle = bundle_from_state(state, gen_config, disc_config, config)
            save_checkpoint(bundle, checkpoint_dir / f"step_{state.step:06d}.ckpt")

    final = bundle_from_state(state, gen_config, disc_config, config)
    if checkpoint_dir is not None:
        save_checkpoint(final, checkpoint_dir / "final.ckpt")
    return final
