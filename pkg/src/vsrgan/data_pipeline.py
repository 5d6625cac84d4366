"""Self-supervised LR/HR pair generation, corpus splitting and clip windowing.

A prepared corpus directory looks like:

    <root>/hr/<clip_id>/<%06d>.png      center-cropped ground truth
    <root>/lr/<clip_id>/<%06d>.png      bicubic 1/scale downsamples
    <root>/flows/<clip_id>/t*_k*.flo1   precomputed LR flow maps
    <root>/split.json                   {"seed", "train", "val", "test"}
"""

from __future__ import annotations

import json
import shutil
import subprocess
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import BadIndex, BadRatios, DimensionMismatch, EmptyCorpus, UnreadableSource
from .frames import Clip, Frame, list_image_files, load_clip, load_frame, save_clip
from .optical_flow import FlowMap, FlowParams, FlowStore, load_window_flows, precompute_flows
from .resize import bicubic_resize

VIDEO_EXTS = {".mp4", ".avi", ".mov", ".mkv", ".webm", ".m4v"}


@dataclass(frozen=True)
class ClipWindow:
    """Generator input for one target frame.

    neighbors_lr holds the n preceding frames, most recent first; flows[i]
    maps target coordinates to neighbors_lr[i] content. target_hr is absent
    in pure inference.
    """

    target_lr: Frame
    neighbors_lr: list[Frame]
    flows: list[FlowMap]
    target_hr: Frame | None = None
    clip_id: str = ""
    t: int = 0

    def __post_init__(self):
        n = len(self.neighbors_lr)
        if n < 1 or len(self.flows) != n:
            raise DimensionMismatch(
                f"window needs n>=1 neighbors with aligned flows, got {n} and {len(self.flows)}"
            )
        hw = (self.target_lr.height, self.target_lr.width)
        for f in self.neighbors_lr:
            if (f.height, f.width) != hw:
                raise DimensionMismatch(f"neighbor {f.height}x{f.width} vs target {hw}")
        for fl in self.flows:
            if fl.shape != hw:
                raise DimensionMismatch(f"flow {fl.shape} vs target {hw}")
        if self.target_hr is not None:
            if (
                self.target_hr.height % hw[0] != 0
                or self.target_hr.width % hw[1] != 0
                or self.target_hr.height // hw[0] != self.target_hr.width // hw[1]
            ):
                raise DimensionMismatch(
                    f"HR {self.target_hr.height}x{self.target_hr.width} is not an "
                    f"integer multiple of LR {hw[0]}x{hw[1]}"
                )

    @property
    def n(self) -> int:
        return len(self.neighbors_lr)


@dataclass(frozen=True)
class DatasetSplit:
    train: list[str]
    val: list[str]
    test: list[str]
    seed: int

    def all_ids(self) -> list[str]:
        return list(self.train) + list(self.val) + list(self.test)


def ingest_clip(source: str | Path, clip_id: str | None = None) -> Clip:
    """Read a clip from a frame directory or (via ffmpeg) a video file."""
    src = Path(source)
    cid = clip_id or src.stem
    if src.is_dir():
        files = list_image_files(src)
        if not files:
            raise UnreadableSource(f"{src}: no image files found")
        frames = [load_frame(p) for p in files]
        return Clip(frames, clip_id=cid, source_path=str(src))
    if src.is_file() and src.suffix.lower() in VIDEO_EXTS:
        decoder = shutil.which("ffmpeg")
        if decoder is None:
            raise UnreadableSource(
                f"{src}: external decoder (ffmpeg) not available; "
                "provide a directory of frames instead"
            )
        with tempfile.TemporaryDirectory() as tmp:
            cmd = [decoder, "-v", "error", "-i", str(src), str(Path(tmp) / "%06d.png")]
            proc = subprocess.run(cmd, capture_output=True, text=True)
            if proc.returncode != 0:
                raise UnreadableSource(f"{src}: decoder failed: {proc.stderr.strip()}")
            files = list_image_files(tmp)
            if not files:
                raise UnreadableSource(f"{src}: decoder produced no frames")
            frames = [load_frame(p) for p in files]
        return Clip(frames, clip_id=cid, source_path=str(src))
    raise UnreadableSource(f"{src}: not a frame directory or video file")


def extract_frames(video_path: str | Path, out_dir: str | Path) -> Clip:
    """Ingest a video or frame directory and write normalized PNG frames."""
    clip = ingest_clip(video_path)
    save_clip(clip, out_dir)
    return clip


def center_crop_to_multiple(frame: Frame, factor: int) -> Frame:
    h = frame.height - frame.height % factor
    w = frame.width - frame.width % factor
    if h == frame.height and w == frame.width:
        return frame
    top = (frame.height - h) // 2
    left = (frame.width - w) // 2
    return Frame(frame.pixels[top : top + h, left : left + w])


def make_pair(hr_frame: Frame, scale_factor: int) -> tuple[Frame, Frame]:
    """Center-crop HR to a multiple of scale_factor and bicubic-downsample."""
    hr = center_crop_to_multiple(hr_frame, scale_factor)
    lr = bicubic_resize(hr, 1.0 / scale_factor)
    return lr, hr


def split_dataset(
    clip_ids: list[str], ratios: tuple[float, float, float], seed: int
) -> DatasetSplit:
    """Deterministic shuffled partition; floor sizes, remainder to train."""
    if not clip_ids:
        raise EmptyCorpus("no clips to split")
    r_train, r_val, r_test = ratios
    if min(ratios) < 0 or abs(sum(ratios) - 1.0) > 1e-9:
        raise BadRatios(f"ratios {ratios} must be non-negative and sum to 1")
    ids = sorted(clip_ids)
    rng = np.random.Generator(np.random.PCG64(seed))
    order = rng.permutation(len(ids))
    shuffled = [ids[i] for i in order]
    n = len(ids)
    n_val = int(n * r_val + 1e-9)
    n_test = int(n * r_test + 1e-9)
    n_train = n - n_val - n_test
    return DatasetSplit(
        train=shuffled[:n_train],
        val=shuffled[n_train : n_train + n_val],
        test=shuffled[n_train + n_val :],
        seed=seed,
    )


def save_split(split: DatasetSplit, path: str | Path) -> None:
    payload = json.dumps(
        {"seed": split.seed, "train": split.train, "val": split.val, "test": split.test},
        indent=2,
        sort_keys=True,
    )
    path = Path(path)
    if not path.exists() or path.read_text() != payload:
        path.write_text(payload)


def load_split(path: str | Path) -> DatasetSplit:
    d = json.loads(Path(path).read_text())
    return DatasetSplit(train=d["train"], val=d["val"], test=d["test"], seed=d["seed"])


def window_clip(
    lr_clip: Clip,
    t: int,
    n: int,
    flows: list[FlowMap],
    hr_clip: Clip | None = None,
) -> ClipWindow:
    """Build the generator input for frame t with n past neighbors.

    Neighbors are frames t-1 .. t-n; indices below zero repeat the first
    frame so the window shape stays constant.
    """
    if not (0 <= t < len(lr_clip)):
        raise BadIndex(f"t={t} outside clip of {len(lr_clip)} frames")
    if n < 1:
        raise BadIndex(f"n={n} must be >= 1")
    neighbors = [lr_clip[max(t - k, 0)] for k in range(1, n + 1)]
    return ClipWindow(
        target_lr=lr_clip[t],
        neighbors_lr=neighbors,
        flows=list(flows),
        target_hr=hr_clip[t] if hr_clip is not None else None,
        clip_id=lr_clip.clip_id,
        t=t,
    )


def discover_sources(data_root: str | Path) -> list[Path]:
    """Clip sources under a corpus root: frame subdirectories or video files."""
    root = Path(data_root)
    if not root.is_dir():
        raise UnreadableSource(f"{root}: data root does not exist")
    out = []
    for p in sorted(root.iterdir()):
        if p.is_dir() and list_image_files(p):
            out.append(p)
        elif p.is_file() and p.suffix.lower() in VIDEO_EXTS:
            out.append(p)
    if not out:
        raise UnreadableSource(f"{root}: no frame directories or videos found")
    return out


def prepare_corpus(
    data_root: str | Path,
    out_root: str | Path,
    scale: int = 4,
    n_neighbors: int = 6,
    ratios: tuple[float, float, float] = (0.8, 0.1, 0.1),
    seed: int = 0,
    flow_params: FlowParams = FlowParams(),
    workers: int = 1,
) -> DatasetSplit:
    """Run the full preparation pass: pairs, split manifest, flow store.

    Idempotent: existing frame and flow files are left untouched, and the
    manifest is rewritten only if its content would change.
    """
    out = Path(out_root)
    out.mkdir(parents=True, exist_ok=True)
    store = FlowStore(out / "flows")
    clip_ids = []
    for src in discover_sources(data_root):
        clip = ingest_clip(src)
        pairs = [make_pair(f, scale) for f in clip.frames]
        lr_clip = Clip([p[0] for p in pairs], clip.clip_id, clip.source_path)
        hr_clip = Clip([p[1] for p in pairs], clip.clip_id, clip.source_path)
        save_clip(hr_clip, out / "hr" / clip.clip_id)
        save_clip(lr_clip, out / "lr" / clip.clip_id)
        # recompute flows from the PNGs actually on disk so reruns are stable
        precompute_flows(
            load_clip(out / "lr" / clip.clip_id), n_neighbors, flow_params, store, workers
        )
        clip_ids.append(clip.clip_id)
    split = split_dataset(clip_ids, ratios, seed)
    save_split(split, out / "split.json")
    return split


@dataclass
class PreparedCorpus:
    """Reader over a prepared corpus root with cached clips."""

    root: Path
    _cache: dict = field(default_factory=dict, repr=False)

    def __init__(self, root: str | Path):
        self.root = Path(root)
        if not (self.root / "split.json").exists():
            raise UnreadableSource(f"{self.root}: missing split.json (run prepare first)")
        self._cache = {}

    @property
    def split(self) -> DatasetSplit:
        return load_split(self.root / "split.json")

    @property
    def flow_store(self) -> FlowStore:
        return FlowStore(self.root / "flows")

    def lr_clip(self, clip_id: str) -> Clip:
        return self._load("lr", clip_id)

    def hr_clip(self, clip_id: str) -> Clip:
        return self._load("hr", clip_id)

    def _load(self, kind: str, clip_id: str) -> Clip:
        key = (kind, clip_id)
        if key not in self._cache:
            self._cache[key] = load_clip(self.root / kind / clip_id, clip_id)
        return self._cache[key]

    def window_index(self, clip_ids: list[str]) -> list[tuple[str, int]]:
        return [(cid, t) for cid in clip_ids for t in range(len(self.lr_clip(cid)))]

    def window(self, clip_id: str, t: int, n: int, with_hr: bool = True) -> ClipWindow:
        lr = self.lr_clip(clip_id)
        shape = (lr[0].height, lr[0].width)
        flows = load_window_flows(self.flow_store, clip_id, t, n, shape)
        hr = self.hr_clip(clip_id) if with_hr else None
        return window_clip(lr, t, n, flows, hr)
