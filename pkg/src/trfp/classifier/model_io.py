"""Versioned binary model container.

Layout (all little-endian): magic ``TRFP``, u32 format version, a
length-prefixed ``key=value`` config echo, the class labels, then named
tensors (weights and batch-norm running statistics) as 32-bit floats.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .network import ArchConfig, ClassifierParams

MAGIC = b"TRFP"
FORMAT_VERSION = 1

_KIND_WEIGHT = 0
_KIND_RUNNING = 1


class ModelFormatError(ValueError):
    pass


def _config_text(arch: ArchConfig, seq_len: int, seq_step: int) -> str:
    return (
        f"seq_len={seq_len}\n"
        f"seq_step={seq_step}\n"
        f"n_features={arch.n_features}\n"
        f"n_classes={arch.n_classes}\n"
        f"hidden_units={','.join(str(h) for h in arch.hidden_units)}\n"
        f"attention_heads={arch.attention_heads}\n"
        f"attention_key_dim={arch.attention_key_dim}\n"
        f"dense_units={','.join(str(d) for d in arch.dense_units)}\n"
        f"dropout_rate={arch.dropout_rate!r}\n"
    )


def _parse_config(text: str) -> tuple[ArchConfig, int, int]:
    kv: dict[str, str] = {}
    for line in text.splitlines():
        if line:
            key, value = line.split("=", 1)
            kv[key] = value
    try:
        seq_len = int(kv["seq_len"])
        seq_step = int(kv["seq_step"])
        arch = ArchConfig(
            n_features=int(kv["n_features"]),
            n_classes=int(kv["n_classes"]),
            hidden_units=tuple(int(v) for v in kv["hidden_units"].split(",")),
            attention_heads=int(kv["attention_heads"]),
            attention_key_dim=int(kv["attention_key_dim"]),
            dense_units=tuple(int(v) for v in kv["dense_units"].split(",")),
            dropout_rate=float(kv["dropout_rate"]),
        )
        return arch, seq_len, seq_step
    except (KeyError, ValueError) as exc:
        raise ModelFormatError(f"bad config block: {exc}") from None


def save_model(params: ClassifierParams, path: Path | str) -> None:
    chunks: list[bytes] = [MAGIC, struct.pack("<I", FORMAT_VERSION)]
    cfg = _config_text(params.arch, params.seq_len, params.seq_step).encode("utf-8")
    chunks.append(struct.pack("<I", len(cfg)))
    chunks.append(cfg)

    chunks.append(struct.pack("<I", len(params.labels)))
    for label in params.labels:
        raw = label.encode("utf-8")
        chunks.append(struct.pack("<H", len(raw)))
        chunks.append(raw)

    entries = [(name, _KIND_WEIGHT, params.weights[name]) for name in sorted(params.weights)]
    entries += [(name, _KIND_RUNNING, params.running[name]) for name in sorted(params.running)]
    chunks.append(struct.pack("<I", len(entries)))
    for name, kind, tensor in entries:
        raw = name.encode("utf-8")
        arr = np.ascontiguousarray(tensor, dtype="<f4")
        chunks.append(struct.pack("<HBB", len(raw), kind, arr.ndim))
        chunks.append(raw)
        chunks.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
        chunks.append(arr.tobytes())
    Path(path).write_bytes(b"".join(chunks))


def load_model(path: Path | str) -> ClassifierParams:
    data = Path(path).read_bytes()
    view = memoryview(data)
    if data[:4] != MAGIC:
        raise ModelFormatError(f"{path}: not a TRFP model file")
    (version,) = struct.unpack("<I", view[4:8])
    if version != FORMAT_VERSION:
        raise ModelFormatError(f"{path}: unsupported format version {version}")
    off = 8

    (cfg_len,) = struct.unpack("<I", view[off : off + 4])
    off += 4
    arch, seq_len, seq_step = _parse_config(bytes(view[off : off + cfg_len]).decode("utf-8"))
    off += cfg_len

    (n_labels,) = struct.unpack("<I", view[off : off + 4])
    off += 4
    labels = []
    for _ in range(n_labels):
        (ln,) = struct.unpack("<H", view[off : off + 2])
        off += 2
        labels.append(bytes(view[off : off + ln]).decode("utf-8"))
        off += ln

    (n_tensors,) = struct.unpack("<I", view[off : off + 4])
    off += 4
    weights: dict[str, np.ndarray] = {}
    running: dict[str, np.ndarray] = {}
    for _ in range(n_tensors):
        name_len, kind, ndim = struct.unpack("<HBB", view[off : off + 4])
        off += 4
        name = bytes(view[off : off + name_len]).decode("utf-8")
        off += name_len
        shape = struct.unpack(f"<{ndim}I", view[off : off + 4 * ndim])
        off += 4 * ndim
        count = int(np.prod(shape)) if ndim else 1
        arr = np.frombuffer(view[off : off + 4 * count], dtype="<f4").reshape(shape).copy()
        off += 4 * count
        (weights if kind == _KIND_WEIGHT else running)[name] = arr
    if off != len(data):
        raise ModelFormatError(f"{path}: trailing bytes after tensor block")
    return ClassifierParams(arch, labels, weights, running, seq_len=seq_len, seq_step=seq_step)
