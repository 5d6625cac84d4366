"""Luminance PSNR and SSIM kernels plus the temporal-profile visualizer.

Both metrics run on the luminance plane of [0,1]-range frames. PSNR is
10*log10(1/MSE); exact matches raise IdenticalInputs instead of returning
infinity so report arithmetic stays total-order safe. SSIM uses the
standard 11x11 Gaussian window (sigma 1.5) with C1=0.01^2, C2=0.03^2 and
averages local scores over valid window positions only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import correlate2d

from .errors import BadIndex, DimensionMismatch, IdenticalInputs, TooSmall
from .frames import Frame, luminance

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_C1 = 0.01**2
SSIM_C2 = 0.03**2


def _luma_pair(a: Frame, b: Frame) -> tuple[np.ndarray, np.ndarray]:
    if (a.height, a.width) != (b.height, b.width):
        raise DimensionMismatch(f"{(a.height, a.width)} vs {(b.height, b.width)}")
    return luminance(a), luminance(b)


def psnr(a: Frame, b: Frame) -> float:
    """Peak signal-to-noise ratio in dB over luminance, peak value 1.0."""
    la, lb = _luma_pair(a, b)
    mse = float(np.mean((la - lb) ** 2))
    if mse == 0.0:
        raise IdenticalInputs("PSNR undefined for identical images (perfect match)")
    return 10.0 * math.log10(1.0 / mse)


def _gaussian_window(size: int = SSIM_WINDOW, sigma: float = SSIM_SIGMA) -> np.ndarray:
    half = (size - 1) / 2.0
    x = np.arange(size, dtype=np.float64) - half
    g = np.exp(-(x * x) / (2.0 * sigma * sigma))
    win = np.outer(g, g)
    return win / win.sum()


def ssim(a: Frame, b: Frame) -> float:
    """Mean local structural similarity over luminance; 1.0 iff identical."""
    la, lb = _luma_pair(a, b)
    if min(la.shape) < SSIM_WINDOW:
        raise TooSmall(f"SSIM needs at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {la.shape}")
    win = _gaussian_window()
    mu_a = correlate2d(la, win, mode="valid")
    mu_b = correlate2d(lb, win, mode="valid")
    var_a = correlate2d(la * la, win, mode="valid") - mu_a * mu_a
    var_b = correlate2d(lb * lb, win, mode="valid") - mu_b * mu_b
    cov = correlate2d(la * lb, win, mode="valid") - mu_a * mu_b
    num = (2.0 * mu_a * mu_b + SSIM_C1) * (2.0 * cov + SSIM_C2)
    den = (mu_a * mu_a + mu_b * mu_b + SSIM_C1) * (var_a + var_b + SSIM_C2)
    return float(np.mean(num / den))


@dataclass(frozen=True)
class FrameScore:
    """Per-frame metric pair; psnr_db is None for an exact pixel match."""

    psnr_db: float | None
    ssim: float

    @property
    def perfect(self) -> bool:
        return self.psnr_db is None


@dataclass
class MetricReport:
    clip_id: str
    per_frame: list[FrameScore]
    mean_psnr_db: float | None
    mean_ssim: float

    @staticmethod
    def from_scores(clip_id: str, scores: list[FrameScore]) -> "MetricReport":
        finite = [s.psnr_db for s in scores if s.psnr_db is not None]
        mean_psnr = math.fsum(finite) / len(finite) if finite else None
        mean_ssim = math.fsum(s.ssim for s in scores) / len(scores) if scores else 0.0
        return MetricReport(clip_id, scores, mean_psnr, mean_ssim)

    def to_dict(self) -> dict:
        return {
            "clip_id": self.clip_id,
            "per_frame": [{"psnr_db": s.psnr_db, "ssim": s.ssim} for s in self.per_frame],
            "mean_psnr_db": self.mean_psnr_db,
            "mean_ssim": self.mean_ssim,
        }


def score_pair(sr: Frame, hr: Frame) -> FrameScore:
    """PSNR/SSIM of one frame pair, mapping exact matches to a perfect score."""
    try:
        value = psnr(sr, hr)
    except IdenticalInputs:
        return FrameScore(psnr_db=None, ssim=1.0)
    return FrameScore(psnr_db=value, ssim=ssim(sr, hr))


def temporal_profile(frames: list[Frame], row: int) -> Frame:
    """Stack one pixel row from each frame into a (num_frames) x W image.

    Vertical streaks in the result indicate temporal coherence.
    """
    if not frames:
        raise BadIndex("temporal profile of an empty frame list")
    h, w = frames[0].height, frames[0].width
    for f in frames:
        if (f.height, f.width) != (h, w):
            raise DimensionMismatch("temporal profile requires equal-sized frames")
    if not 0 <= row < h:
        raise BadIndex(f"row {row} outside [0, {h})")
    return Frame.from_array(np.stack([f.pixels[row] for f in frames]))
