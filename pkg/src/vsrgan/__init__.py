"""Video super-resolution toolkit: a recurrent back-projection GAN with a
self-supervised bicubic data pipeline, dense optical-flow alignment, an
alternating training loop, and PSNR/SSIM evaluation tooling."""

from .checkpoint import CheckpointBundle, load_checkpoint, save_checkpoint
from .data_pipeline import (
    ClipWindow,
    DatasetSplit,
    PreparedCorpus,
    extract_frames,
    ingest_clip,
    make_pair,
    prepare_corpus,
    split_dataset,
    window_clip,
)
from .discriminator import Discriminator, DiscriminatorConfig
from .errors import VsrError
from .evaluation import (
    AblationReport,
    BicubicBaseline,
    GeneratorModel,
    ablation_report,
    evaluate_clip,
)
from .frames import Clip, Frame, load_clip, save_clip
from .generator import GeneratorConfig, HiddenState, RecurrentBackProjectionGenerator
from .losses import (
    LossBreakdown,
    LossWeights,
    adversarial_loss,
    discriminator_loss,
    generator_loss,
    mse_loss,
    perceptual_loss,
    sequence_loss,
    tv_loss,
)
from .metrics import MetricReport, psnr, ssim, temporal_profile
from .optical_flow import FlowMap, FlowParams, FlowStore, estimate_flow, precompute_flows, warp
from .resize import bicubic_resize
from .toy import toy_clip, write_toy_corpus
from .trainer import AblationMode, TrainConfig, fit, train_step

__version__ = "0.1.0"

__all__ = [
    "AblationMode",
    "AblationReport",
    "BicubicBaseline",
    "CheckpointBundle",
    "Clip",
    "ClipWindow",
    "DatasetSplit",
    "Discriminator",
    "DiscriminatorConfig",
    "FlowMap",
    "FlowParams",
    "FlowStore",
    "Frame",
    "GeneratorConfig",
    "GeneratorModel",
    "HiddenState",
    "LossBreakdown",
    "LossWeights",
    "MetricReport",
    "PreparedCorpus",
    "RecurrentBackProjectionGenerator",
    "TrainConfig",
    "VsrError",
    "ablation_report",
    "adversarial_loss",
    "bicubic_resize",
    "discriminator_loss",
    "estimate_flow",
    "evaluate_clip",
    "extract_frames",
    "fit",
    "generator_loss",
    "ingest_clip",
    "load_checkpoint",
    "load_clip",
    "make_pair",
    "mse_loss",
    "perceptual_loss",
    "precompute_flows",
    "prepare_corpus",
    "psnr",
    "save_checkpoint",
    "save_clip",
    "sequence_loss",
    "split_dataset",
    "ssim",
    "temporal_profile",
    "toy_clip",
    "train_step",
    "tv_loss",
    "warp",
    "window_clip",
    "write_toy_corpus",
]
