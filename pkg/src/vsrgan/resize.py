"""Bicubic resampling with the Keys a=-0.5 cubic convolution kernel.

Sampling uses the half-pixel-centered grid: output pixel i reads source
coordinate (i + 0.5) * (n_in / n_out) - 0.5 along each axis, with edge
taps clamped (border replication). The kernel reproduces linear ramps
exactly away from clamped borders, which the tests exploit as an oracle.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DegenerateOutput
from .frames import Frame

KEYS_A = -0.5


def keys_kernel(x: np.ndarray) -> np.ndarray:
    """Cubic convolution weight at distance x, a = -0.5."""
    ax = np.abs(np.asarray(x, dtype=np.float64))
    a = KEYS_A
    near = (a + 2.0) * ax**3 - (a + 3.0) * ax**2 + 1.0
    far = a * ax**3 - 5.0 * a * ax**2 + 8.0 * a * ax - 4.0 * a
    return np.where(ax <= 1.0, near, np.where(ax < 2.0, far, 0.0))


def _axis_taps(n_in: int, n_out: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-output-pixel source indices (clamped) and kernel weights."""
    ratio = n_in / n_out
    x = (np.arange(n_out, dtype=np.float64) + 0.5) * ratio - 0.5
    base = np.floor(x).astype(np.int64)
    taps = base[:, None] + np.arange(-1, 3)[None, :]
    weights = keys_kernel(x[:, None] - taps)
    taps = np.clip(taps, 0, n_in - 1)
    return taps, weights


def _resample_axis(arr: np.ndarray, n_out: int, axis: int) -> np.ndarray:
    taps, weights = _axis_taps(arr.shape[axis], n_out)
    moved = np.moveaxis(arr, axis, 0)
    gathered = moved[taps]  # (n_out, 4, ...)
    out = np.einsum("ot,ot...->o...", weights, gathered)
    return np.moveaxis(out, 0, axis)


def resize_array(arr: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Separable Keys resample of an HxW or HxWxC array. No clamping."""
    a = np.asarray(arr, dtype=np.float64)
    if out_h < 1 or out_w < 1:
        raise DegenerateOutput(f"target size {out_h}x{out_w}")
    if a.shape[0] != out_h:
        a = _resample_axis(a, out_h, axis=0)
    if a.shape[1] != out_w:
        a = _resample_axis(a, out_w, axis=1)
    return a


def scaled_size(n: int, scale: float) -> int:
    # floor with an epsilon so exact products are not lost to float rounding
    return math.floor(n * scale + 1e-9)


def bicubic_resize(frame: Frame, scale: float) -> Frame:
    """Resample a frame by `scale`; output dims floor(H*scale) x floor(W*scale)."""
    if scale <= 0:
        raise DegenerateOutput(f"scale must be positive, got {scale}")
    out_h = scaled_size(frame.height, scale)
    out_w = scaled_size(frame.width, scale)
    if out_h < 1 or out_w < 1:
        raise DegenerateOutput(
            f"{frame.height}x{frame.width} at scale {scale} collapses to {out_h}x{out_w}"
        )
    out = resize_array(frame.pixels, out_h, out_w)
    return Frame(np.clip(out, 0.0, 1.0))
