"""Adversarial discriminator mapping an HR-sized frame to a real-image probability.

Eight-ish convolutional stages (width schedule in the config) with stride-2
halving every other stage and Leaky ReLU activations, a global-average-pooled
two-layer dense head, and a terminal sigmoid. Outputs are clamped to
[PROB_EPS, 1 - PROB_EPS] so downstream log terms stay finite.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
from torch import nn

from .errors import DimensionMismatch
from .generator import init_parameters
from .losses import PROB_EPS

FULL_SCHEDULE = (64, 64, 128, 128, 256, 256, 512, 512)
TINY_SCHEDULE = (8, 16)


@dataclass(frozen=True)
class DiscriminatorConfig:
    input_size: tuple = (256, 256)
    channel_schedule: tuple = FULL_SCHEDULE
    leaky_slope: float = 0.2
    adaptive_pool: bool = True

    def __post_init__(self):
        if len(self.channel_schedule) == 0 or min(self.channel_schedule) < 1:
            raise ValueError("channel_schedule must be non-empty with positive widths")
        if not 0.0 < self.leaky_slope < 1.0:
            raise ValueError("leaky_slope must lie in (0, 1)")

    @staticmethod
    def tiny(input_size: tuple = (32, 32)) -> "DiscriminatorConfig":
        return DiscriminatorConfig(input_size=input_size, channel_schedule=TINY_SCHEDULE)


class Discriminator(nn.Module):
    def __init__(self, config: DiscriminatorConfig, seed: int = 1):
        super().__init__()
        self.config = config
        layers = []
        cin = 3
        for i, cout in enumerate(config.channel_schedule):
            stride = 2 if i % 2 == 1 else 1
            layers.append(nn.Conv2d(cin, cout, 3, stride, 1))
            layers.append(nn.LeakyReLU(config.leaky_slope))
            cin = cout
        self.stages = nn.Sequential(*layers)
        self.head = nn.Sequential(
            nn.Linear(cin, cin),
            nn.LeakyReLU(config.leaky_slope),
            nn.Linear(cin, 1),
        )
        init_parameters(self, a=config.leaky_slope, seed=seed)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        """Probability per input: (B,3,H,W) -> (B,), (3,H,W) -> 0-d tensor."""
        single = x.dim() == 3
        if single:
            x = x.unsqueeze(0)
        if not self.config.adaptive_pool and tuple(x.shape[-2:]) != tuple(self.config.input_size):
            raise DimensionMismatch(
                f"input {tuple(x.shape[-2:])} does not match configured {self.config.input_size}"
            )
        feats = self.stages(x)
        pooled = feats.mean(dim=(2, 3))
        logit = self.head(pooled).squeeze(1)
        prob = torch.clamp(torch.sigmoid(logit), PROB_EPS, 1.0 - PROB_EPS)
        return prob.squeeze(0) if single else prob

    def discriminate(self, x: torch.Tensor) -> torch.Tensor:
        return self.forward(x)
