"""Frame and Clip containers plus lossless PNG I/O.

All pixel math in the pipeline happens on float arrays in [0, 1]; 8-bit
files are converted with v/255 on read and round(v*255) on write.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import InconsistentDimensions

# Rec. 601 luma coefficients, also used for the optical-flow grayscale input.
LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114])


@dataclass(frozen=True)
class Frame:
    """One image as an H x W x 3 float array with intensities in [0, 1]."""

    pixels: np.ndarray

    def __post_init__(self):
        p = self.pixels
        if p.ndim != 3 or p.shape[2] != 3:
            raise ValueError(f"Frame pixels must be HxWx3, got shape {p.shape}")
        if not np.isfinite(p).all():
            raise ValueError("Frame contains non-finite values")
        if p.min() < 0.0 or p.max() > 1.0:
            raise ValueError("Frame intensities must lie in [0, 1]")

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def channels(self) -> int:
        return self.pixels.shape[2]

    @staticmethod
    def from_array(arr: np.ndarray) -> "Frame":
        """Build a Frame from float data; grayscale is replicated to 3 channels."""
        a = np.asarray(arr, dtype=np.float64)
        if a.ndim == 2:
            a = a[:, :, None]
        if a.shape[2] == 1:
            a = np.repeat(a, 3, axis=2)
        return Frame(np.clip(a, 0.0, 1.0))

    @staticmethod
    def from_uint8(arr: np.ndarray) -> "Frame":
        return Frame.from_array(np.asarray(arr, dtype=np.float64) / 255.0)

    def to_uint8(self) -> np.ndarray:
        return np.round(np.clip(self.pixels, 0.0, 1.0) * 255.0).astype(np.uint8)


def luminance(frame: Frame | np.ndarray) -> np.ndarray:
    """0.299 R + 0.587 G + 0.114 B; identity for 2-D arrays."""
    p = frame.pixels if isinstance(frame, Frame) else np.asarray(frame)
    if p.ndim == 2:
        return p.astype(np.float64)
    return p.astype(np.float64) @ LUMA_WEIGHTS


def load_frame(path: str | Path) -> Frame:
    with Image.open(path) as im:
        rgb = im.convert("RGB")
        return Frame.from_uint8(np.asarray(rgb))


def save_frame(frame: Frame, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(frame.to_uint8(), mode="RGB").save(path, format="PNG")


FRAME_NAME = "{:06d}.png"


@dataclass
class Clip:
    """An ordered frame sequence from one source."""

    frames: list[Frame]
    clip_id: str
    source_path: str = ""

    def __post_init__(self):
        if self.frames:
            h, w = self.frames[0].height, self.frames[0].width
            for i, f in enumerate(self.frames):
                if (f.height, f.width) != (h, w):
                    raise InconsistentDimensions(
                        f"clip {self.clip_id!r}: frame {i} is {f.height}x{f.width}, "
                        f"expected {h}x{w}"
                    )

    def __len__(self) -> int:
        return len(self.frames)

    def __getitem__(self, t: int) -> Frame:
        return self.frames[t]


def _natural_key(name: str):
    return tuple(int(tok) if tok.isdigit() else tok for tok in re.split(r"(\d+)", name))


def list_image_files(directory: str | Path) -> list[Path]:
    """Image files in a directory, in natural numeric order."""
    exts = {".png", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff"}
    d = Path(directory)
    files = [p for p in d.iterdir() if p.is_file() and p.suffix.lower() in exts]
    return sorted(files, key=lambda p: _natural_key(p.name))


def load_clip(directory: str | Path, clip_id: str | None = None) -> Clip:
    """Read every frame PNG under `directory` as one clip."""
    d = Path(directory)
    frames = [load_frame(p) for p in list_image_files(d)]
    return Clip(frames, clip_id=clip_id or d.name, source_path=str(d))


def save_clip(clip: Clip, directory: str | Path, overwrite: bool = False) -> list[Path]:
    """Write clip frames as `<directory>/<%06d>.png`; skips existing files."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    paths = []
    for i, frame in enumerate(clip.frames):
        p = d / FRAME_NAME.format(i)
        if overwrite or not p.exists():
            save_frame(frame, p)
        paths.append(p)
    return paths
