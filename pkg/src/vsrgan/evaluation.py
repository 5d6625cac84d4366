"""Clip-level evaluation, reference baseline models, and the ablation harness.

Metrics are computed on clamped, 8-bit-quantized model output so that an
in-memory evaluation and a recomputation from saved PNG frames agree. A
"model" here is any callable mapping a ClipWindow to an HR-sized Frame.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, replace

import torch

from .data_pipeline import ClipWindow, PreparedCorpus, window_clip
from .discriminator import DiscriminatorConfig
from .errors import DimensionMismatch, EmptyCorpus
from .frames import Clip, Frame, load_clip
from .generator import GeneratorConfig
from .metrics import MetricReport, score_pair
from .optical_flow import FlowStore, load_window_flows
from .resize import bicubic_resize
from .tensors import tensor_to_frame, window_to_tensors
from .trainer import AblationMode, TrainConfig, fit, state_from_bundle


def quantize_frame(frame: Frame) -> Frame:
    """Snap intensities to the 8-bit lattice: round(clamp(p)*255)/255."""
    return Frame.from_uint8(frame.to_uint8())


class BicubicBaseline:
    """Upscales the target frame alone; the reference point every model must beat."""

    def __init__(self, scale: int = 4):
        self.scale = scale

    def __call__(self, window: ClipWindow) -> Frame:
        return bicubic_resize(window.target_lr, float(self.scale))


class GroundTruthOracle:
    """Returns the window's own HR frame; used to validate the perfect-score path."""

    def __call__(self, window: ClipWindow) -> Frame:
        if window.target_hr is None:
            raise EmptyCorpus("oracle model needs windows with HR ground truth")
        return window.target_hr


class FrameDirectoryModel:
    """Replays already-upscaled frames saved as <dir>/<%06d>.png."""

    def __init__(self, directory):
        self.clip = load_clip(directory)

    def __call__(self, window: ClipWindow) -> Frame:
        return self.clip[window.t]


class GeneratorModel:
    """Wraps a trained generator for inference on single windows."""

    def __init__(self, generator):
        self.generator = generator.eval()

    @staticmethod
    def from_bundle(bundle) -> "GeneratorModel":
        state, _, _, _ = state_from_bundle(bundle)
        return GeneratorModel(state.generator)

    def __call__(self, window: ClipWindow) -> Frame:
        target, neighbors, flows, _ = window_to_tensors(window, torch.float32)
        with torch.no_grad():
            sr = self.generator(
                target.unsqueeze(0), neighbors.unsqueeze(0), flows.unsqueeze(0)
            )[0]
        return tensor_to_frame(sr)


def _crop(frame: Frame, border: int) -> Frame:
    if border <= 0:
        return frame
    if 2 * border >= min(frame.height, frame.width):
        raise DimensionMismatch(f"crop border {border} swallows a {frame.height}x{frame.width} frame")
    return Frame(frame.pixels[border:-border, border:-border])


def evaluate_clip(
    model,
    lr_clip: Clip,
    hr_clip: Clip,
    flows,
    n: int,
    crop_border: int = 0,
) -> MetricReport:
    """Windowed per-frame PSNR/SSIM of `model` against HR ground truth.

    `flows` is either a FlowStore or a t-indexed list of per-window flow
    lists. Model output is quantized to the 8-bit lattice before scoring.
    """
    if len(lr_clip) != len(hr_clip):
        raise DimensionMismatch(
            f"clip {lr_clip.clip_id!r}: {len(lr_clip)} LR vs {len(hr_clip)} HR frames"
        )
    shape = (lr_clip[0].height, lr_clip[0].width)
    scores = []
    for t in range(len(lr_clip)):
        if isinstance(flows, FlowStore):
            window_flows = load_window_flows(flows, lr_clip.clip_id, t, n, shape)
        else:
            window_flows = flows[t]
        window = window_clip(lr_clip, t, n, window_flows, hr_clip)
        sr = quantize_frame(model(window))
        hr = hr_clip[t]
        if (sr.height, sr.width) != (hr.height, hr.width):
            raise DimensionMismatch(
                f"model output {sr.height}x{sr.width} vs HR {hr.height}x{hr.width}"
            )
        scores.append(score_pair(_crop(sr, crop_border), _crop(hr, crop_border)))
    return MetricReport.from_scores(lr_clip.clip_id, scores)


LATTICE = (
    AblationMode.L1_ONLY,
    AblationMode.MSE_ONLY,
    AblationMode.ADV,
    AblationMode.ADV_MSE,
    AblationMode.ADV_MSE_PERC,
    AblationMode.FULL,
)


@dataclass(frozen=True)
class AblationRow:
    mode: str
    psnr_db: float | None
    ssim: float


@dataclass
class AblationReport:
    rows: list[AblationRow]
    eval_clip_id: str
    budget_steps: int
    seed: int
    logs: dict

    def to_dict(self) -> dict:
        """Deterministic report payload; raw logs stay out (they carry timings)."""
        return {
            "eval_clip_id": self.eval_clip_id,
            "budget_steps": self.budget_steps,
            "seed": self.seed,
            "rows": [
                {"mode": r.mode, "psnr_db": r.psnr_db, "ssim": r.ssim} for r in self.rows
            ],
        }

    def to_table(self) -> str:
        lines = [f"{'mode':<14}{'psnr_db':>10}{'ssim':>8}"]
        for r in self.rows:
            p = "perfect" if r.psnr_db is None else f"{r.psnr_db:.4f}"
            lines.append(f"{r.mode:<14}{p:>10}{r.ssim:>8.4f}")
        return "\n".join(lines)


def pick_eval_clip(corpus: PreparedCorpus) -> str:
    """Held-out clip for ablation scoring: validation first, then test, then train."""
    split = corpus.split
    for ids in (split.val, split.test, split.train):
        if ids:
            return ids[0]
    raise EmptyCorpus("prepared corpus has no clips")


def ablation_report(
    modes,
    corpus: PreparedCorpus,
    budget_steps: int,
    gen_config: GeneratorConfig,
    disc_config: DiscriminatorConfig,
    base_config: TrainConfig,
) -> AblationReport:
    """Train each mode for budget_steps from the same seed and score it on
    one held-out clip. Reruns with equal inputs produce identical reports."""
    eval_id = pick_eval_clip(corpus)
    lr, hr = corpus.lr_clip(eval_id), corpus.hr_clip(eval_id)
    rows, logs = [], {}
    for mode in modes:
        config = replace(base_config, ablation_mode=mode, max_steps=budget_steps)
        stream = io.StringIO()
        bundle = fit(corpus, config, gen_config, disc_config, None, log_stream=stream)
        model = GeneratorModel.from_bundle(bundle)
        report = evaluate_clip(model, lr, hr, corpus.flow_store, gen_config.n_neighbors)
        rows.append(AblationRow(mode.value, report.mean_psnr_db, report.mean_ssim))
        logs[mode.value] = stream.getvalue().splitlines()
    return AblationReport(
        rows=rows,
        eval_clip_id=eval_id,
        budget_steps=budget_steps,
        seed=base_config.seed,
        logs=logs,
    )
