"""Recurrent back-projection generator.

Per window the network runs one projection step per neighbor: a SISR
branch enlarges the carried LR-scale features through an up-down-up
chain, a MISR branch computes residual HR features from (carried
features, one neighbor frame, its flow map), and the projection module
back-projects their difference and fuses it into an HR feature map. The
n fused maps are concatenated and reduced to the RGB output by a final
3x3 convolution. All activations are Parametric ReLUs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import torch
from torch import nn

from .errors import ConfigMismatch, DimensionMismatch


@dataclass(frozen=True)
class GeneratorConfig:
    scale: int = 4
    n_neighbors: int = 6
    feat_channels: int = 64
    base_channels: int = 64
    sisr_kernel: int = 8
    sisr_stride: int = 4
    sisr_pad: int = 2
    misr_tiles: int = 3
    misr_blocks_per_tile: int = 5
    prelu_init: float = 0.25

    def __post_init__(self):
        if self.scale != 4 or self.sisr_stride != self.scale:
            raise ValueError("only scale 4 with matching up/down stride is supported")
        if self.sisr_kernel - self.sisr_stride != 2 * self.sisr_pad:
            raise ValueError("kernel - stride must equal 2 * padding so up/down invert dims")
        if self.n_neighbors < 1:
            raise ValueError("n_neighbors must be >= 1")
        if min(self.feat_channels, self.base_channels) < 1:
            raise ValueError("channel counts must be >= 1")

    @staticmethod
    def tiny(n_neighbors: int = 2) -> "GeneratorConfig":
        return GeneratorConfig(n_neighbors=n_neighbors, feat_channels=4, base_channels=4)


@dataclass
class HiddenState:
    """Recurrent state: LR-scale carry features plus fused HR maps so far."""

    carry: torch.Tensor
    hr_features: list


def _init_conv(conv: nn.Module, fan_in: int, a: float, gen: torch.Generator) -> None:
    """Kaiming-uniform fan-in init (slope a), zero bias, drawn from `gen`."""
    bound = math.sqrt(6.0 / ((1.0 + a * a) * fan_in))
    with torch.no_grad():
        conv.weight.uniform_(-bound, bound, generator=gen)
        if conv.bias is not None:
            conv.bias.zero_()


def init_parameters(module: nn.Module, a: float, seed: int) -> None:
    """Deterministic re-initialization of every conv/linear in `module`."""
    gen = torch.Generator().manual_seed(seed)
    for m in module.modules():
        if isinstance(m, nn.Conv2d):
            _init_conv(m, m.in_channels * m.kernel_size[0] * m.kernel_size[1], a, gen)
        elif isinstance(m, nn.ConvTranspose2d):
            _init_conv(m, m.in_channels * m.kernel_size[0] * m.kernel_size[1], a, gen)
        elif isinstance(m, nn.Linear):
            _init_conv(m, m.in_features, a, gen)


class ResidualBlock(nn.Module):
    """Two 3x3 stride-1 pad-1 convolutions with a PReLU and an additive skip."""

    def __init__(self, channels: int, prelu_init: float):
        super().__init__()
        self.conv1 = nn.Conv2d(channels, channels, 3, 1, 1)
        self.act = nn.PReLU(init=prelu_init)
        self.conv2 = nn.Conv2d(channels, channels, 3, 1, 1)

    def forward(self, x):
        return x + self.conv2(self.act(self.conv1(x)))


def _up(cin, cout, cfg):
    return nn.ConvTranspose2d(cin, cout, cfg.sisr_kernel, cfg.sisr_stride, cfg.sisr_pad)


def _down(cin, cout, cfg):
    return nn.Conv2d(cin, cout, cfg.sisr_kernel, cfg.sisr_stride, cfg.sisr_pad)


class RecurrentBackProjectionGenerator(nn.Module):
    def __init__(self, config: GeneratorConfig, seed: int = 0):
        super().__init__()
        self.config = config
        c = config
        f, b, p = c.feat_channels, c.base_channels, c.prelu_init

        self.target_extract = nn.Sequential(nn.Conv2d(3, f, 3, 1, 1), nn.PReLU(init=p))
        self.neighbor_extract = nn.Sequential(nn.Conv2d(3, f, 3, 1, 1), nn.PReLU(init=p))

        self.sisr = nn.Sequential(
            _up(f, b, c), nn.PReLU(init=p),
            _down(b, b, c), nn.PReLU(init=p),
            _up(b, b, c), nn.PReLU(init=p),
        )

        blocks = [ResidualBlock(b, p) for _ in range(c.misr_tiles * c.misr_blocks_per_tile)]
        self.misr_head = nn.Sequential(nn.Conv2d(2 * f + 2, b, 3, 1, 1), nn.PReLU(init=p))
        self.misr_blocks = nn.Sequential(*blocks)
        self.misr_up = nn.Sequential(_up(b, b, c), nn.PReLU(init=p))

        self.res_down = nn.Sequential(_down(b, b, c), nn.PReLU(init=p))
        self.res_refine = nn.Sequential(nn.Conv2d(b, b, 3, 1, 1), nn.PReLU(init=p))
        self.res_up = nn.Sequential(_up(b, b, c), nn.PReLU(init=p))
        self.decode = nn.Sequential(_down(b, f, c), nn.PReLU(init=p))

        self.reconstruct = nn.Conv2d(c.n_neighbors * b, 3, 3, 1, 1)

        init_parameters(self, a=c.prelu_init, seed=seed)
        # residual blocks start as identities: without this the variance of
        # the initial output grows exponentially with block count
        with torch.no_grad():
            for block in self.misr_blocks:
                block.conv2.weight.zero_()

    def extract_features(self, lr: torch.Tensor) -> torch.Tensor:
        """Initial LR-scale feature map of the target frame."""
        return self.target_extract(lr)

    def initial_state(self, target_lr: torch.Tensor) -> HiddenState:
        return HiddenState(carry=self.extract_features(target_lr), hr_features=[])

    def sisr_path(self, features: torch.Tensor) -> torch.Tensor:
        """Up-down-up enlargement of the carried features to HR scale."""
        return self.sisr(features)

    def misr_path(
        self, target_feat: torch.Tensor, neighbor_lr: torch.Tensor, flow: torch.Tensor
    ) -> torch.Tensor:
        """HR residual features from one neighbor frame and its flow map."""
        if neighbor_lr.shape[-2:] != target_feat.shape[-2:] or flow.shape[-2:] != target_feat.shape[-2:]:
            raise DimensionMismatch(
                f"neighbor {tuple(neighbor_lr.shape[-2:])} / flow {tuple(flow.shape[-2:])} "
                f"vs features {tuple(target_feat.shape[-2:])}"
            )
        x = torch.cat([target_feat, self.neighbor_extract(neighbor_lr), flow], dim=1)
        return self.misr_up(self.misr_blocks(self.misr_head(x)))

    def projection_step(
        self, state: HiddenState, sisr_out: torch.Tensor, misr_out: torch.Tensor
    ) -> HiddenState:
        """Back-project the SISR/MISR residual and fuse one HR feature map."""
        residual = misr_out - sisr_out
        fused = sisr_out + self.res_up(self.res_refine(self.res_down(residual)))
        return HiddenState(carry=self.decode(fused), hr_features=state.hr_features + [fused])

    def forward(
        self, target_lr: torch.Tensor, neighbors_lr: torch.Tensor, flows: torch.Tensor
    ) -> torch.Tensor:
        """SR frames (B,3,4H,4W) from target (B,3,H,W), neighbors (B,n,3,H,W),
        flows (B,n,2,H,W). Output is unclamped; clamp when materializing images."""
        if neighbors_lr.shape[1] != self.config.n_neighbors or flows.shape[1] != self.config.n_neighbors:
            raise ConfigMismatch(
                f"window has {neighbors_lr.shape[1]} neighbors, config wants {self.config.n_neighbors}"
            )
        state = self.initial_state(target_lr)
        for k in range(self.config.n_neighbors):
            sisr_out = self.sisr_path(state.carry)
            misr_out = self.misr_path(state.carry, neighbors_lr[:, k], flows[:, k])
            state = self.projection_step(state, sisr_out, misr_out)
        return self.reconstruct(torch.cat(state.hr_features, dim=1))
