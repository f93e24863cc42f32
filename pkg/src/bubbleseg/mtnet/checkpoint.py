"""MTNP checkpoint format.

Layout: magic "MTNP"; u32 LE length of a JSON config block followed by the
block itself; then for each tensor, u32 LE name length, name bytes (utf-8),
u32 LE rank, u32 LE dims, and the float32 little-endian payload. Tensors
are written in the canonical parameter order of the config.
"""

from __future__ import annotations

import json
import os
import struct

import numpy as np

from ..core import CorruptFile
from .model import NetConfig, param_shapes

_MAGIC = b"MTNP"


def save_checkpoint(params: dict[str, np.ndarray], cfg: NetConfig, path) -> None:
    cfg_bytes = json.dumps({
        "input_size": cfg.input_size,
        "encoder_levels": cfg.encoder_levels,
        "base_channels": cfg.base_channels,
    }).encode()
    tmp = os.fspath(path) + ".tmp"
    with open(tmp, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<I", len(cfg_bytes)))
        fh.write(cfg_bytes)
        for name in param_shapes(cfg):
            tensor = np.ascontiguousarray(params[name], dtype="<f4")
            encoded = name.encode()
            fh.write(struct.pack("<I", len(encoded)))
            fh.write(encoded)
            fh.write(struct.pack("<I", tensor.ndim))
            fh.write(struct.pack(f"<{tensor.ndim}I", *tensor.shape))
            fh.write(tensor.tobytes())
    os.replace(tmp, os.fspath(path))


def load_checkpoint(path) -> tuple[dict[str, np.ndarray], NetConfig]:
    with open(os.fspath(path), "rb") as fh:
        if fh.read(4) != _MAGIC:
            raise CorruptFile(f"{path}: bad checkpoint magic")
        (cfg_len,) = struct.unpack("<I", fh.read(4))
        try:
            cfg = NetConfig(**json.loads(fh.read(cfg_len)))
        except (json.JSONDecodeError, TypeError) as exc:
            raise CorruptFile(f"{path}: bad config block: {exc}") from exc
        params: dict[str, np.ndarray] = {}
        expected = param_shapes(cfg)
        for _ in range(len(expected)):
            raw = fh.read(4)
            if len(raw) != 4:
                raise CorruptFile(f"{path}: truncated checkpoint")
            (name_len,) = struct.unpack("<I", raw)
            name = fh.read(name_len).decode()
            (rank,) = struct.unpack("<I", fh.read(4))
            shape = struct.unpack(f"<{rank}I", fh.read(4 * rank))
            count = int(np.prod(shape)) if shape else 1
            data = fh.read(4 * count)
            if len(data) != 4 * count:
                raise CorruptFile(f"{path}: truncated tensor {name}")
            params[name] = np.frombuffer(data, dtype="<f4").reshape(shape).astype(np.float64)
        missing = set(expected) - set(params)
        if missing:
            raise CorruptFile(f"{path}: missing tensors {sorted(missing)}")
        for name, shape in expected.items():
            if params[name].shape != shape:
                raise CorruptFile(f"{path}: tensor {name} has shape "
                                  f"{params[name].shape}, expected {shape}")
    return params, cfg
