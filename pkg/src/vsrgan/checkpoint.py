"""Binary checkpoint container for training state.

File layout, all integers little-endian:

    magic            4 bytes, b"ISBC"
    format_version   u32
    config_len       u32, followed by that many bytes of UTF-8 JSON holding
                     {"step": int, "configs": {...}, "rng_state": base64 str}
    n_arrays         u32
    per array, in sorted name order:
        name_len     u32, then UTF-8 name
        ndim         u32, then ndim u32 dims
        nbytes       u64, then raw little-endian float32 data

Save -> load -> save is byte-identical: JSON is emitted with sorted keys and
compact separators, and array payloads are stored as raw float32 bytes.
"""

from __future__ import annotations

import base64
import json
import os
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import ShapeMismatch, UnreadableSource, VersionMismatch

MAGIC = b"ISBC"
FORMAT_VERSION = 1


@dataclass
class CheckpointBundle:
    format_version: int = FORMAT_VERSION
    generator_params: dict = field(default_factory=dict)
    discriminator_params: dict = field(default_factory=dict)
    optimizer_state: dict = field(default_factory=dict)
    step: int = 0
    configs: dict = field(default_factory=dict)
    rng_state: bytes = b""

    def named_arrays(self) -> dict:
        """All arrays under a single flat namespace, prefixed per collection."""
        out = {}
        for prefix, coll in (
            ("generator/", self.generator_params),
            ("discriminator/", self.discriminator_params),
            ("optimizer/", self.optimizer_state),
        ):
            for name, arr in coll.items():
                out[prefix + name] = arr
        return out


def _coerce(arr) -> np.ndarray:
    a = np.ascontiguousarray(arr, dtype="<f4")
    return a


def save_checkpoint(bundle: CheckpointBundle, path) -> None:
    header = {
        "step": int(bundle.step),
        "configs": bundle.configs,
        "rng_state": base64.b64encode(bundle.rng_state).decode("ascii"),
    }
    config_bytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    arrays = {name: _coerce(arr) for name, arr in bundle.named_arrays().items()}

    chunks = [MAGIC, struct.pack("<I", bundle.format_version)]
    chunks.append(struct.pack("<I", len(config_bytes)))
    chunks.append(config_bytes)
    chunks.append(struct.pack("<I", len(arrays)))
    for name in sorted(arrays):
        arr = arrays[name]
        name_bytes = name.encode("utf-8")
        chunks.append(struct.pack("<I", len(name_bytes)))
        chunks.append(name_bytes)
        chunks.append(struct.pack("<I", arr.ndim))
        chunks.append(struct.pack(f"<{arr.ndim}I", *arr.shape) if arr.ndim else b"")
        data = arr.tobytes()
        chunks.append(struct.pack("<Q", len(data)))
        chunks.append(data)

    blob = b"".join(chunks)
    tmp = str(path) + ".tmp"
    with open(tmp, "wb") as fh:
        fh.write(blob)
    os.replace(tmp, path)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise UnreadableSource("checkpoint file truncated")
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def u64(self) -> int:
        return struct.unpack("<Q", self.take(8))[0]


def load_checkpoint(path) -> CheckpointBundle:
    with open(path, "rb") as fh:
        data = fh.read()
    r = _Reader(data)
    if r.take(4) != MAGIC:
        raise UnreadableSource(f"{path}: not a checkpoint file (bad magic)")
    version = r.u32()
    if version != FORMAT_VERSION:
        raise VersionMismatch(f"{path}: format_version {version}, expected {FORMAT_VERSION}")
    header = json.loads(r.take(r.u32()).decode("utf-8"))
    n_arrays = r.u32()
    collections = {"generator": {}, "discriminator": {}, "optimizer": {}}
    for _ in range(n_arrays):
        name = r.take(r.u32()).decode("utf-8")
        ndim = r.u32()
        shape = struct.unpack(f"<{ndim}I", r.take(4 * ndim)) if ndim else ()
        nbytes = r.u64()
        expected = int(np.prod(shape, dtype=np.int64)) * 4
        if nbytes != expected:
            raise ShapeMismatch(f"{name}: payload {nbytes} bytes, shape {shape} wants {expected}")
        arr = np.frombuffer(r.take(nbytes), dtype="<f4").reshape(shape).copy()
        prefix, _, rest = name.partition("/")
        if prefix not in collections or not rest:
            raise UnreadableSource(f"{path}: unknown array namespace in {name!r}")
        collections[prefix][rest] = arr
    if r.pos != len(data):
        raise UnreadableSource(f"{path}: {len(data) - r.pos} trailing bytes")
    return CheckpointBundle(
        format_version=version,
        generator_params=collections["generator"],
        discriminator_params=collections["discriminator"],
        optimizer_state=collections["optimizer"],
        step=int(header["step"]),
        configs=header["configs"],
        rng_state=base64.b64decode(header["rng_state"]),
    )
