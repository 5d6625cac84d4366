"""The composite generator objective and the discriminator objective.

Per-frame components, all on (C, H, W) tensors with intensities in [0, 1]:

  pixel      mean squared (or absolute, for the ablation baseline) error,
             normalized by 1/(W*H*C)
  perceptual mean squared distance between frozen feature maps, normalized
             over the feature map's width, height and channels
  adversarial -log D(SR), with D's probability epsilon-clamped upstream
  tv         isotropic total variation: per pixel sqrt(dv^2 + dh^2) with
             one-sided forward differences (zero past the last row/column),
             summed over channels, normalized by 1/(W*H)

The generator total is alpha*pixel + beta*perceptual + gamma*adversarial +
delta*tv; the discriminator minimizes 1 - D(HR) + D(SR). Sequence losses
are plain arithmetic means over frames.

Functions return 0-d torch tensors when given tensors (so training can
backpropagate through them) and accept numpy arrays for convenience.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import torch
import torch.nn.functional as F

from .errors import DimensionMismatch, EmptySequence

PROB_EPS = 1e-7


@dataclass(frozen=True)
class LossWeights:
    alpha: float = 1.0
    beta: float = 6e-3
    gamma: float = 1e-3
    delta: float = 2e-8

    def __post_init__(self):
        if min(self.alpha, self.beta, self.gamma, self.delta) < 0:
            raise ValueError("loss weights must be non-negative")


@dataclass
class LossBreakdown:
    """Weighted components of one generator loss evaluation.

    Fields hold 0-d tensors while a graph is alive; as_floats() detaches
    for logging. In the L1 ablation mode the mse slot carries the L1
    pixel objective.
    """

    mse: float
    perceptual: float
    adversarial: float
    tv: float
    total: float

    def as_floats(self) -> "LossBreakdown":
        return LossBreakdown(*(_scalar(getattr(self, f)) for f in ("mse", "perceptual", "adversarial", "tv", "total")))

    def to_dict(self) -> dict:
        return {f: _scalar(getattr(self, f)) for f in ("mse", "perceptual", "adversarial", "tv", "total")}


def _scalar(x) -> float:
    if isinstance(x, torch.Tensor):
        return float(x.detach())
    return float(x)


def _as_tensor(x) -> torch.Tensor:
    if isinstance(x, torch.Tensor):
        return x
    return torch.as_tensor(np.asarray(x, dtype=np.float64))


def _check_dims(sr: torch.Tensor, hr: torch.Tensor) -> None:
    if sr.shape != hr.shape:
        raise DimensionMismatch(f"sr {tuple(sr.shape)} vs hr {tuple(hr.shape)}")


def mse_loss(sr, hr) -> torch.Tensor:
    sr, hr = _as_tensor(sr), _as_tensor(hr)
    _check_dims(sr, hr)
    return torch.mean((sr - hr) ** 2)


def l1_loss(sr, hr) -> torch.Tensor:
    """Ablation baseline pixel objective."""
    sr, hr = _as_tensor(sr), _as_tensor(hr)
    _check_dims(sr, hr)
    return torch.mean(torch.abs(sr - hr))


def perceptual_loss(sr, hr, fx) -> torch.Tensor:
    sr, hr = _as_tensor(sr), _as_tensor(hr)
    _check_dims(sr, hr)
    return torch.mean((fx(sr) - fx(hr)) ** 2)


def adversarial_loss(d_prob) -> torch.Tensor:
    prob = _as_tensor(d_prob)
    return -torch.log(prob)


def tv_loss(sr) -> torch.Tensor:
    x = _as_tensor(sr)
    if x.ndim == 2:
        x = x.unsqueeze(0)
    dv = F.pad(x[:, 1:, :] - x[:, :-1, :], (0, 0, 0, 1))
    dh = F.pad(x[:, :, 1:] - x[:, :, :-1], (0, 1, 0, 0))
    sq = dv * dv + dh * dh
    zero = sq == 0
    # masked sqrt keeps the value exact and the gradient finite at flat pixels
    mag = torch.sqrt(torch.where(zero, torch.ones_like(sq), sq))
    mag = torch.where(zero, torch.zeros_like(sq), mag)
    h, w = x.shape[-2], x.shape[-1]
    return mag.sum() / (h * w)


def generator_loss(
    sr,
    hr,
    d_prob=None,
    fx=None,
    weights: LossWeights = LossWeights(),
    pixel: str = "mse",
    include_tv: bool = True,
) -> LossBreakdown:
    """All active components and their weighted total for one frame.

    Dropped terms report exactly zero: d_prob=None zeroes the adversarial
    component, fx=None the perceptual one, pixel=None the pixel one, and
    include_tv=False the smoothness one. That is how the ablation modes
    remove terms without changing the weights' meaning.
    """
    sr, hr = _as_tensor(sr), _as_tensor(hr)
    zero = sr.new_zeros(())
    pixel_term = {"mse": mse_loss, "l1": l1_loss}[pixel](sr, hr) if pixel is not None else zero
    perc = perceptual_loss(sr, hr, fx) if fx is not None else zero
    adv = adversarial_loss(d_prob) if d_prob is not None else zero
    tv = tv_loss(sr) if include_tv else zero
    total = weights.alpha * pixel_term + weights.beta * perc + weights.gamma * adv + weights.delta * tv
    return LossBreakdown(mse=pixel_term, perceptual=perc, adversarial=adv, tv=tv, total=total)


def discriminator_loss(d_hr, d_sr) -> torch.Tensor:
    return 1.0 - _as_tensor(d_hr) + _as_tensor(d_sr)


def sequence_loss(per_frame: list) -> float:
    if len(per_frame) == 0:
        raise EmptySequence("sequence loss of an empty frame list")
    if isinstance(per_frame[0], torch.Tensor):
        return torch.stack(list(per_frame)).mean()
    return math.fsum(float(x) for x in per_frame) / len(per_frame)


def mean_breakdown(parts: list[LossBreakdown]) -> LossBreakdown:
    """Frame-averaged breakdown (the per-sequence total is the mean of frames)."""
    if not parts:
        raise EmptySequence("no per-frame breakdowns to average")
    fields = ("mse", "perceptual", "adversarial", "tv", "total")
    return LossBreakdown(**{f: sequence_loss([getattr(p, f) for p in parts]) for f in fields})
