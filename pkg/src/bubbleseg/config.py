"""Pipeline configuration plumbing.

A single JSON document with optional nested blocks, one per subsystem.
Parsing is strict: unknown keys anywhere are rejected, so typos fail loudly
instead of silently running with defaults.
"""

from __future__ import annotations

import dataclasses
import json

from .core import ConfigInvalid
from .edge_bubbles import SmallBubbleConfig
from .instances import ExtractConfig, MergePolicy, RefineConfig
from .mtnet import AugmentConfig, LossConfig, NetConfig, TrainConfig
from .synth import SynthConfig


_BLOCKS = {
    "small_bubbles": SmallBubbleConfig,
    "extract": ExtractConfig,
    "refine": RefineConfig,
    "merge": MergePolicy,
    "loss": LossConfig,
    "train": TrainConfig,
    "net": NetConfig,
    "synth": SynthConfig,
    "augment": AugmentConfig,
}

_SCALARS = {
    "baseline_thresholds": list,
    "baseline_otsu": bool,
    "checkpoint": str,
    "small_only": bool,
}


@dataclasses.dataclass
class PipelineConfig:
    small_bubbles: SmallBubbleConfig = dataclasses.field(default_factory=SmallBubbleConfig)
    extract: ExtractConfig = dataclasses.field(default_factory=ExtractConfig)
    refine: RefineConfig = dataclasses.field(default_factory=RefineConfig)
    merge: MergePolicy = dataclasses.field(default_factory=MergePolicy)
    loss: LossConfig = dataclasses.field(default_factory=LossConfig)
    train: TrainConfig = dataclasses.field(default_factory=TrainConfig)
    net: NetConfig = dataclasses.field(default_factory=NetConfig)
    synth: SynthConfig = dataclasses.field(default_factory=SynthConfig)
    augment: AugmentConfig = dataclasses.field(default_factory=AugmentConfig)
    baseline_thresholds: list = dataclasses.field(default_factory=lambda: [0.35])
    baseline_otsu: bool = False
    checkpoint: str = ""
    small_only: bool = False


def _build_block(cls, obj: dict, where: str):
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(obj) - names
    if unknown:
        raise ConfigInvalid(f"unknown keys in {where!r}: {sorted(unknown)}")
    kwargs = {}
    for f in dataclasses.fields(cls):
        if f.name in obj:
            value = obj[f.name]
            if isinstance(value, list):
                value = tuple(value)
            kwargs[f.name] = value
    return cls(**kwargs)


def pipeline_config_from_dict(obj: dict) -> PipelineConfig:
    if not isinstance(obj, dict):
        raise ConfigInvalid("config root must be a JSON object")
    unknown = set(obj) - set(_BLOCKS) - set(_SCALARS)
    if unknown:
        raise ConfigInvalid(f"unknown top-level config keys: {sorted(unknown)}")
    cfg = PipelineConfig()
    for name, cls in _BLOCKS.items():
        if name in obj:
            if not isinstance(obj[name], dict):
                raise ConfigInvalid(f"config block {name!r} must be an object")
            setattr(cfg, name, _build_block(cls, obj[name], name))
    for name, typ in _SCALARS.items():
        if name in obj:
            value = obj[name]
            if not isinstance(value, typ):
                raise ConfigInvalid(f"config key {name!r} must be {typ.__name__}")
            setattr(cfg, name, value)
    return cfg


def load_pipeline_config(path) -> PipelineConfig:
    with open(path) as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigInvalid(f"{path}: {exc}") from exc
    return pipeline_config_from_dict(obj)
