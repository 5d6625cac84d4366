"""Procedurally generated toy corpus: a textured square gliding over a
textured background, written as directories of PNG frames.

Everything derives from (seed, clip_index) through a counter-based RNG, so
regeneration is reproducible across runs and machines. Motion is a constant
1-2 px/frame translation with wraparound, which the flow solver can recover
and which exercises the temporal path of the model.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from scipy.ndimage import gaussian_filter

from .frames import Clip, Frame, save_clip


def _texture(rng: np.random.Generator, h: int, w: int, sigma: float) -> np.ndarray:
    """Smoothed noise stretched to span [0, 1]."""
    tex = gaussian_filter(rng.random((h, w, 3)), sigma=(sigma, sigma, 0.0))
    lo, hi = tex.min(), tex.max()
    return (tex - lo) / (hi - lo + 1e-12)


def toy_clip(
    clip_index: int,
    n_frames: int = 6,
    size: tuple[int, int] = (48, 48),
    seed: int = 0,
) -> Clip:
    h, w = size
    rng = np.random.default_rng([seed, clip_index])
    background = 0.15 + 0.7 * _texture(rng, h, w, sigma=2.5)
    square_tex = _texture(rng, h, w, sigma=0.8)
    side = max(4, min(h, w) // 3)
    y0 = int(rng.integers(0, h))
    x0 = int(rng.integers(0, w))
    dy = int(rng.integers(-2, 3))
    dx = int(rng.integers(1, 3))
    mask = np.zeros((h, w, 1), dtype=bool)
    mask[:side, :side] = True
    frames = []
    for t in range(n_frames):
        oy, ox = (y0 + t * dy) % h, (x0 + t * dx) % w
        m = np.roll(mask, (oy, ox), axis=(0, 1))
        tex = np.roll(square_tex, (oy, ox), axis=(0, 1))
        frames.append(Frame.from_array(np.where(m, tex, background)))
    return Clip(frames, clip_id=f"clip_{clip_index:02d}")


def write_toy_corpus(
    data_root,
    n_clips: int = 4,
    n_frames: int = 6,
    size: tuple[int, int] = (48, 48),
    seed: int = 0,
) -> list[Path]:
    """Materialize the corpus as <data_root>/clip_XX/<%06d>.png directories."""
    root = Path(data_root)
    dirs = []
    for i in range(n_clips):
        clip = toy_clip(i, n_frames, size, seed)
        save_clip(clip, root / clip.clip_id)
        dirs.append(root / clip.clip_id)
    return dirs
