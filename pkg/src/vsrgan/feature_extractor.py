"""Frozen convolutional feature extractors for the perceptual distance.

The perceptual term is well defined for any frozen feature network, so a
small fixed-seed random stack stands in at desk scale; a VGG-19-shaped
geometry can be populated from an .npz weight file (never downloaded).
layer_selector (i, j) picks the j-th post-ReLU convolution inside the
i-th block, i.e. before the i-th maxpool.
"""

from __future__ import annotations

import math

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn

VGG19_BLOCKS = ((64, 64), (128, 128), (256, 256, 256, 256), (512, 512, 512, 512), (512, 512, 512, 512))


class IdentityExtractor(nn.Module):
    """Pass-through features; reduces the perceptual distance to pixel MSE."""

    layer_selector = (0, 0)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return x


class ConvFeatureExtractor(nn.Module):
    """Stack of 3x3 conv + ReLU blocks with 2x2 maxpools between blocks.

    Weights are registered as buffers: they are never returned by
    .parameters() and no optimizer can touch them.
    """

    def __init__(
        self,
        blocks: tuple[tuple[int, ...], ...],
        layer_selector: tuple[int, int],
        weights: dict[str, np.ndarray],
        in_channels: int = 3,
    ):
        super().__init__()
        i, j = layer_selector
        if not (1 <= i <= len(blocks)) or not (1 <= j <= len(blocks[i - 1])):
            raise ValueError(f"layer_selector {layer_selector} outside geometry {blocks}")
        self.blocks = blocks
        self.layer_selector = layer_selector
        cin = in_channels
        for bi, widths in enumerate(blocks, start=1):
            for ci, cout in enumerate(widths, start=1):
                if (bi, ci) > (i, j):
                    continue  # layers past the selector are never evaluated
                w = weights[f"conv{bi}_{ci}.weight"]
                b = weights[f"conv{bi}_{ci}.bias"]
                if w.shape != (cout, cin, 3, 3) or b.shape != (cout,):
                    raise ValueError(f"conv{bi}_{ci} weights have shape {w.shape}, want {(cout, cin, 3, 3)}")
                self.register_buffer(f"w{bi}_{ci}", torch.as_tensor(np.asarray(w, dtype=np.float64)))
                self.register_buffer(f"b{bi}_{ci}", torch.as_tensor(np.asarray(b, dtype=np.float64)))
                cin = cout

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        """Features of a (C,H,W) or (B,C,H,W) tensor at the selected layer."""
        squeeze = x.ndim == 3
        if squeeze:
            x = x.unsqueeze(0)
        sel_i, sel_j = self.layer_selector
        for bi, widths in enumerate(self.blocks, start=1):
            if bi > 1:
                x = F.max_pool2d(x, kernel_size=2, stride=2)
            for ci in range(1, len(widths) + 1):
                w = getattr(self, f"w{bi}_{ci}").to(x.dtype)
                b = getattr(self, f"b{bi}_{ci}").to(x.dtype)
                x = F.relu(F.conv2d(x, w, b, padding=1))
                if (bi, ci) == (sel_i, sel_j):
                    return x.squeeze(0) if squeeze else x
        raise AssertionError("unreachable: selector validated in __init__")


def tiny_extractor(seed: int = 0, channels: tuple[int, ...] = (8, 8)) -> ConvFeatureExtractor:
    """Fixed-seed random single-block extractor used at desk scale."""
    rng = np.random.Generator(np.random.PCG64(seed))
    weights = {}
    cin = 3
    for ci, cout in enumerate(channels, start=1):
        bound = math.sqrt(6.0 / (cin * 9))
        weights[f"conv1_{ci}.weight"] = rng.uniform(-bound, bound, size=(cout, cin, 3, 3))
        weights[f"conv1_{ci}.bias"] = rng.uniform(-0.1, 0.1, size=(cout,))
        cin = cout
    return ConvFeatureExtractor((tuple(channels),), (1, len(channels)), weights)


def load_extractor(
    path: str,
    layer_selector: tuple[int, int] = (5, 4),
    blocks: tuple[tuple[int, ...], ...] = VGG19_BLOCKS,
) -> ConvFeatureExtractor:
    """Build an extractor from an .npz of conv{i}_{j}.weight / .bias arrays."""
    data = np.load(path)
    return ConvFeatureExtractor(blocks, layer_selector, {k: data[k] for k in data.files})


def make_extractor(spec: str, layer_selector: tuple[int, int] = (5, 4), seed: int = 0):
    """Resolve a config string: "tiny", "identity", or a weight-file path."""
    if spec == "tiny":
        return tiny_extractor(seed)
    if spec == "identity":
        return IdentityExtractor()
    return load_extractor(spec, layer_selector)
