"""Conversions between numpy frame data (HxWxC) and torch tensors (CxHxW)."""

from __future__ import annotations

import numpy as np
import torch

from .data_pipeline import ClipWindow
from .frames import Frame
from .optical_flow import FlowMap


def array_to_tensor(arr: np.ndarray, dtype=torch.float32) -> torch.Tensor:
    a = np.asarray(arr)
    if a.ndim == 2:
        a = a[:, :, None]
    return torch.from_numpy(np.ascontiguousarray(a.transpose(2, 0, 1))).to(dtype)


def tensor_to_array(t: torch.Tensor) -> np.ndarray:
    return t.detach().cpu().numpy().transpose(1, 2, 0)


def frame_to_tensor(frame: Frame, dtype=torch.float32) -> torch.Tensor:
    return array_to_tensor(frame.pixels, dtype)


def tensor_to_frame(t: torch.Tensor) -> Frame:
    """Clamp a (3,H,W) tensor to [0,1] and materialize it as a Frame."""
    return Frame(np.clip(tensor_to_array(t), 0.0, 1.0))


def flow_to_tensor(flow: FlowMap, dtype=torch.float32) -> torch.Tensor:
    return torch.from_numpy(np.ascontiguousarray(np.stack([flow.u, flow.v]))).to(dtype)


def window_to_tensors(
    window: ClipWindow, dtype=torch.float32
) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor, torch.Tensor | None]:
    """(target, neighbors, flows, hr) tensors for one window, unbatched."""
    target = frame_to_tensor(window.target_lr, dtype)
    neighbors = torch.stack([frame_to_tensor(f, dtype) for f in window.neighbors_lr])
    flows = torch.stack([flow_to_tensor(f, dtype) for f in window.flows])
    hr = frame_to_tensor(window.target_hr, dtype) if window.target_hr is not None else None
    return target, neighbors, flows, hr


def stack_windows(
    windows: list[ClipWindow], dtype=torch.float32
) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor, torch.Tensor | None]:
    """Batch windows of identical geometry into (B,...) tensors."""
    parts = [window_to_tensors(w, dtype) for w in windows]
    target = torch.stack([p[0] for p in parts])
    neighbors = torch.stack([p[1] for p in parts])
    flows = torch.stack([p[2] for p in parts])
    hr = torch.stack([p[3] for p in parts]) if parts[0][3] is not None else None
    return target, neighbors, flows, hr
