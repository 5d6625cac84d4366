"""Shared fixtures: tiny model configs, random frames, and a prepared corpus.

The prepared corpus is session-scoped because flow precomputation, while
cheap, is not free; tests must treat it as read-only.
"""

import numpy as np
import pytest

from vsrgan.data_pipeline import ClipWindow, PreparedCorpus, prepare_corpus
from vsrgan.discriminator import DiscriminatorConfig
from vsrgan.frames import Frame
from vsrgan.generator import GeneratorConfig
from vsrgan.optical_flow import FlowMap
from vsrgan.toy import write_toy_corpus

TOY_CLIPS = 4
TOY_FRAMES = 6
TOY_SIZE = (48, 48)


def random_frame(rng: np.random.Generator, h: int, w: int) -> Frame:
    return Frame(rng.random((h, w, 3)))


def random_flow(rng: np.random.Generator, h: int, w: int, amplitude: float = 1.0) -> FlowMap:
    return FlowMap(
        amplitude * (rng.random((h, w)) - 0.5),
        amplitude * (rng.random((h, w)) - 0.5),
    )


def random_window(
    rng: np.random.Generator, h: int, w: int, n: int, scale: int = 4, with_hr: bool = True
) -> ClipWindow:
    return ClipWindow(
        target_lr=random_frame(rng, h, w),
        neighbors_lr=[random_frame(rng, h, w) for _ in range(n)],
        flows=[random_flow(rng, h, w) for _ in range(n)],
        target_hr=random_frame(rng, scale * h, scale * w) if with_hr else None,
        clip_id="synthetic",
        t=0,
    )


@pytest.fixture(scope="session")
def tiny_gen_config() -> GeneratorConfig:
    return GeneratorConfig.tiny()


@pytest.fixture(scope="session")
def tiny_disc_config() -> DiscriminatorConfig:
    return DiscriminatorConfig.tiny()


@pytest.fixture(scope="session")
def toy_root(tmp_path_factory) -> str:
    root = tmp_path_factory.mktemp("toy_corpus")
    write_toy_corpus(root, n_clips=TOY_CLIPS, n_frames=TOY_FRAMES, size=TOY_SIZE, seed=0)
    return str(root)


@pytest.fixture(scope="session")
def prepared_corpus(toy_root, tmp_path_factory) -> PreparedCorpus:
    out = tmp_path_factory.mktemp("prepared")
    prepare_corpus(toy_root, out, n_neighbors=2, ratios=(0.5, 0.25, 0.25), seed=0)
    return PreparedCorpus(out)
