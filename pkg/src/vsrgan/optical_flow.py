"""Dense motion estimation between LR frames and flow-field warping.

Flow convention: a FlowMap produced by estimate_flow(source, target) maps
target coordinates to source content, i.e. warp(source, flow) approximates
target. u is horizontal displacement in pixels (positive samples rightward),
v vertical (positive samples downward).

The estimator is pyramidal Horn-Schunck: coarse-to-fine over a factor-2
Gaussian pyramid, a fixed number of Jacobi iterations per level, and one
backward warp of the source at each level entry. Fully deterministic for
fixed parameters.
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.ndimage import convolve, gaussian_filter, map_coordinates

from .errors import DimensionMismatch, UnreadableSource
from .frames import Clip, Frame, luminance
from .resize import resize_array

FLOW_MAGIC = b"FLO1"
FLOW_FILE = "t{:06d}_k{:d}.flo1"

# Horn-Schunck neighbourhood average of the flow field.
_AVG_KERNEL = np.array(
    [[1 / 12, 1 / 6, 1 / 12], [1 / 6, 0.0, 1 / 6], [1 / 12, 1 / 6, 1 / 12]]
)


@dataclass(frozen=True)
class FlowMap:
    """Per-pixel displacement field (u horizontal, v vertical), in pixels."""

    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        if self.u.shape != self.v.shape or self.u.ndim != 2:
            raise DimensionMismatch(
                f"u {self.u.shape} and v {self.v.shape} must be equal 2-D shapes"
            )
        if not (np.isfinite(self.u).all() and np.isfinite(self.v).all()):
            raise ValueError("flow contains non-finite values")

    @property
    def shape(self) -> tuple[int, int]:
        return self.u.shape

    @staticmethod
    def zero(height: int, width: int) -> "FlowMap":
        return FlowMap(np.zeros((height, width)), np.zeros((height, width)))


@dataclass(frozen=True)
class FlowParams:
    """Pyramidal Horn-Schunck settings.

    alpha is the smoothness weight, calibrated for luminance in [0, 1];
    iterations run per linearization; each level performs `warps`
    warp-and-relinearize rounds so shifts beyond the linear range are
    recovered incrementally; levels caps the pyramid depth (halving
    stops once a side would drop below min_size).
    """

    alpha: float = 0.1
    iterations: int = 200
    levels: int = 4
    min_size: int = 8
    warps: int = 3


def _bilinear_sample(plane: np.ndarray, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
    # order=1 bilinear; mode="nearest" clamps out-of-bounds samples to the edge
    return map_coordinates(plane, [rows, cols], order=1, mode="nearest")


def warp_array(arr: np.ndarray, flow: FlowMap) -> np.ndarray:
    """Backward-warp an HxW or HxWxC array: out[i,j] = arr[i + v, j + u]."""
    h, w = arr.shape[:2]
    if flow.shape != (h, w):
        raise DimensionMismatch(f"flow {flow.shape} vs frame {(h, w)}")
    rr, cc = np.meshgrid(np.arange(h, dtype=np.float64), np.arange(w, dtype=np.float64), indexing="ij")
    rows = rr + flow.v
    cols = cc + flow.u
    if arr.ndim == 2:
        return _bilinear_sample(np.asarray(arr, dtype=np.float64), rows, cols)
    out = np.empty((h, w, arr.shape[2]), dtype=np.float64)
    for c in range(arr.shape[2]):
        out[:, :, c] = _bilinear_sample(np.asarray(arr[:, :, c], dtype=np.float64), rows, cols)
    return out


def warp(frame: Frame, flow: FlowMap) -> Frame:
    """Backward-warp a frame along a flow field with bilinear sampling."""
    return Frame(np.clip(warp_array(frame.pixels, flow), 0.0, 1.0))


def _hs_iterate(
    source_w: np.ndarray, target: np.ndarray, u: np.ndarray, v: np.ndarray, params: FlowParams
) -> tuple[np.ndarray, np.ndarray]:
    """Horn-Schunck incremental update for warp(source, flow) ~= target."""
    avg = 0.5 * (source_w + target)
    ix = np.gradient(avg, axis=1)
    iy = np.gradient(avg, axis=0)
    it = source_w - target
    denom = params.alpha**2 + ix**2 + iy**2
    du = np.zeros_like(u)
    dv = np.zeros_like(v)
    for _ in range(params.iterations):
        du_avg = convolve(du, _AVG_KERNEL, mode="nearest")
        dv_avg = convolve(dv, _AVG_KERNEL, mode="nearest")
        t = (ix * du_avg + iy * dv_avg + it) / denom
        du = du_avg - ix * t
        dv = dv_avg - iy * t
    return u + du, v + dv


def _pyramid(gray: np.ndarray, params: FlowParams) -> list[np.ndarray]:
    levels = [gray]
    for _ in range(params.levels - 1):
        h, w = levels[-1].shape
        if min(h, w) // 2 < params.min_size:
            break
        smoothed = gaussian_filter(levels[-1], sigma=1.0, mode="nearest")
        levels.append(resize_array(smoothed, h // 2, w // 2))
    return levels


def estimate_flow(source: Frame, target: Frame, params: FlowParams = FlowParams()) -> FlowMap:
    """Dense flow such that warp(source, flow) approximates target."""
    if (source.height, source.width) != (target.height, target.width):
        raise DimensionMismatch(
            f"source {source.height}x{source.width} vs target {target.height}x{target.width}"
        )
    src = luminance(source)
    tgt = luminance(target)
    src_pyr = _pyramid(src, params)
    tgt_pyr = _pyramid(tgt, params)
    h, w = src_pyr[-1].shape
    u = np.zeros((h, w))
    v = np.zeros((h, w))
    for level in range(len(src_pyr) - 1, -1, -1):
        s, t = src_pyr[level], tgt_pyr[level]
        if u.shape != s.shape:
            scale_y = s.shape[0] / u.shape[0]
            scale_x = s.shape[1] / u.shape[1]
            u = resize_array(u, s.shape[0], s.shape[1]) * scale_x
            v = resize_array(v, s.shape[0], s.shape[1]) * scale_y
        for _ in range(max(1, params.warps)):
            warped = warp_array(s, FlowMap(u, v))
            u, v = _hs_iterate(warped, t, u, v, params)
    return FlowMap(u, v)


class FlowStore:
    """On-disk store of per-(clip, t, k) flow files.

    File layout per entry: magic "FLO1", little-endian u32 height, u32
    width, then HxW float32 u values followed by HxW float32 v values.
    """

    def __init__(self, root: str | Path):
        self.root = Path(root)

    def path(self, clip_id: str, t: int, k: int) -> Path:
        return self.root / clip_id / FLOW_FILE.format(t, k)

    def exists(self, clip_id: str, t: int, k: int) -> bool:
        return self.path(clip_id, t, k).exists()

    def write(self, clip_id: str, t: int, k: int, flow: FlowMap) -> Path:
        path = self.path(clip_id, t, k)
        path.parent.mkdir(parents=True, exist_ok=True)
        h, w = flow.shape
        payload = (
            struct.pack("<4sII", FLOW_MAGIC, h, w)
            + flow.u.astype("<f4").tobytes()
            + flow.v.astype("<f4").tobytes()
        )
        tmp = path.with_suffix(".tmp")
        tmp.write_bytes(payload)
        os.replace(tmp, path)
        return path

    def read(self, clip_id: str, t: int, k: int) -> FlowMap:
        path = self.path(clip_id, t, k)
        try:
            raw = path.read_bytes()
        except OSError as e:
            raise UnreadableSource(f"flow file {path}: {e}") from e
        magic, h, w = struct.unpack_from("<4sII", raw)
        if magic != FLOW_MAGIC:
            raise UnreadableSource(f"flow file {path}: bad magic {magic!r}")
        n = h * w
        data = np.frombuffer(raw, dtype="<f4", offset=12, count=2 * n)
        u = data[:n].reshape(h, w).astype(np.float64)
        v = data[n:].reshape(h, w).astype(np.float64)
        return FlowMap(u, v)


def precompute_flows(
    lr_clip: Clip,
    n: int,
    params: FlowParams,
    store: FlowStore,
    workers: int = 1,
) -> int:
    """Write F_{t-k} = estimate_flow(LR_{t-k}, LR_t) for every valid (t, k<=n).

    Existing entries are kept (idempotent). Returns the number of entries
    computed in this call.
    """
    if len(lr_clip) == 0:
        raise UnreadableSource(f"clip {lr_clip.clip_id!r} has no frames")
    jobs = [
        (t, k)
        for t in range(len(lr_clip))
        for k in range(1, n + 1)
        if t - k >= 0 and not store.exists(lr_clip.clip_id, t, k)
    ]

    def run(job: tuple[int, int]) -> None:
        t, k = job
        try:
            flow = estimate_flow(lr_clip[t - k], lr_clip[t], params)
            store.write(lr_clip.clip_id, t, k, flow)
        except Exception as e:
            raise RuntimeError(f"flow failed for clip {lr_clip.clip_id!r} t={t} k={k}: {e}") from e

    if workers > 1 and len(jobs) > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run, jobs))
    else:
        for job in jobs:
            run(job)
    return len(jobs)


def load_window_flows(store: FlowStore, clip_id: str, t: int, n: int, lr_shape: tuple[int, int]) -> list[FlowMap]:
    """Flows for a window at frame t, honoring repeat-first-frame padding.

    For k > t the padded neighbor is frame 0, so the flow of the clamped
    pair (t, t) is reused; at t = 0 every neighbor equals the target and
    the flow is zero.
    """
    flows = []
    for k in range(1, n + 1):
        kk = min(k, t)
        if kk == 0:
            flows.append(FlowMap.zero(*lr_shape))
        else:
            flows.append(store.read(clip_id, t, kk))
    return flows
