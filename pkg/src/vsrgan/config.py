"""Run configuration: one flat JSON file of dotted keys covering the model,
training, flow, and path settings, with command-line overrides.

A config file plus the prepared data and a seed fully determine a run, so
the effective (post-override) flat dict is echoed at startup for
provenance. Values in override strings are parsed as JSON when possible,
falling back to plain strings.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .discriminator import DiscriminatorConfig
from .generator import GeneratorConfig
from .optical_flow import FlowParams
from .trainer import (
    TrainConfig,
    discriminator_config_from_dict,
    discriminator_config_to_dict,
    generator_config_from_dict,
    generator_config_to_dict,
    train_config_from_dict,
    train_config_to_dict,
)


@dataclass(frozen=True)
class Paths:
    data_root: str = ""
    prepared_root: str = ""
    checkpoint_dir: str = ""
    out_dir: str = ""


@dataclass(frozen=True)
class RunConfig:
    generator: GeneratorConfig = field(default_factory=GeneratorConfig)
    discriminator: DiscriminatorConfig = field(default_factory=DiscriminatorConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    flow: FlowParams = field(default_factory=FlowParams)
    paths: Paths = field(default_factory=Paths)

    def to_nested(self) -> dict:
        return {
            "generator": generator_config_to_dict(self.generator),
            "discriminator": discriminator_config_to_dict(self.discriminator),
            "train": train_config_to_dict(self.train),
            "flow": asdict(self.flow),
            "paths": asdict(self.paths),
        }

    def to_flat(self) -> dict:
        return flatten(self.to_nested())

    @staticmethod
    def from_nested(nested: dict) -> "RunConfig":
        merged = RunConfig().to_nested()
        _deep_merge(merged, nested)
        return RunConfig(
            generator=generator_config_from_dict(merged["generator"]),
            discriminator=discriminator_config_from_dict(merged["discriminator"]),
            train=train_config_from_dict(merged["train"]),
            flow=FlowParams(
                alpha=float(merged["flow"]["alpha"]),
                iterations=int(merged["flow"]["iterations"]),
                levels=int(merged["flow"]["levels"]),
                min_size=int(merged["flow"]["min_size"]),
                warps=int(merged["flow"]["warps"]),
            ),
            paths=Paths(**{k: str(v) for k, v in merged["paths"].items()}),
        )

    @staticmethod
    def from_flat(flat: dict) -> "RunConfig":
        return RunConfig.from_nested(unflatten(flat))


def _deep_merge(base: dict, overlay: dict, path: str = "") -> None:
    """Overlay values onto defaults in place, rejecting unknown keys.

    Leaf lists (adam_betas, channel_schedule, input_size) replace wholesale;
    dict nodes merge key by key so partial files keep the other defaults.
    """
    for key, value in overlay.items():
        where = f"{path}{key}"
        if key not in base:
            raise ValueError(f"unknown config key {where!r}")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ValueError(f"config key {where!r} needs dotted subkeys")
            _deep_merge(base[key], value, where + ".")
        else:
            base[key] = value


def flatten(nested: dict, prefix: str = "") -> dict:
    out = {}
    for key, value in nested.items():
        dotted = f"{prefix}{key}"
        if isinstance(value, dict):
            out.update(flatten(value, dotted + "."))
        else:
            out[dotted] = value
    return out


def unflatten(flat: dict) -> dict:
    nested: dict = {}
    for dotted, value in flat.items():
        parts = dotted.split(".")
        node = nested
        for p in parts[:-1]:
            node = node.setdefault(p, {})
        node[parts[-1]] = value
    return nested


def load_config(path) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        flat = json.load(fh)
    if not isinstance(flat, dict):
        raise ValueError(f"{path}: config file must hold a JSON object of dotted keys")
    return RunConfig.from_flat(flat)


def save_config(config: RunConfig, path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(config.to_flat(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def parse_override(text: str) -> tuple[str, object]:
    """Split 'dotted.key=value', JSON-decoding the value when possible."""
    key, sep, raw = text.partition("=")
    if not sep or not key:
        raise ValueError(f"override {text!r} must look like key=value")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key, value


def apply_overrides(config: RunConfig, overrides: list[str]) -> RunConfig:
    flat = config.to_flat()
    for text in overrides:
        key, value = parse_override(text)
        if key not in flat:
            raise ValueError(f"unknown config key {key!r}")
        flat[key] = value
    return RunConfig.from_flat(flat)


def echo_config(config: RunConfig) -> str:
    """The effective flat config as deterministic single-line JSON."""
    return json.dumps(config.to_flat(), sort_keys=True)
