"""Network channel model: latency, jitter, packetization, size overhead."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from ..trace_model import Scenario, TraceError


@dataclass(frozen=True)
class ChannelModel:
    """Send-side bundling plus additive latency and Gaussian jitter."""

    base_latency: float = 0.0
    jitter_std: float = 0.0
    pack_max_tokens: int = 1
    pack_flush_interval: float = 1.0
    bytes_per_token: tuple[int, int] = (60, 120)
    overhead_bytes: int = 29

    def __post_init__(self):
        if self.base_latency < 0 or self.jitter_std < 0:
            raise TraceError("latency and jitter must be non-negative")
        if self.pack_max_tokens < 1:
            raise TraceError("pack_max_tokens must be >= 1")
        if self.pack_flush_interval <= 0:
            raise TraceError("pack_flush_interval must be positive")
        lo, hi = self.bytes_per_token
        if lo < 1 or hi < lo:
            raise TraceError("bytes_per_token must be a range with lo >= 1")
        if self.overhead_bytes < 0:
            raise TraceError("overhead_bytes must be non-negative")


# Presets scaled to reproduce the qualitative spread of the three measured
# deployment columns: local host is effectively transparent; LAN adds a few
# ms of jitter; remote tunnels bundle ~19 tokens per packet (remote means
# are ~18-20x local means for every model) and add heavy jitter; vpn is
# remote plus 20 ms extra latency and 1.5x jitter.
CHANNEL_PRESETS: dict[str, ChannelModel] = {
    "localhost": ChannelModel(base_latency=0.0001, jitter_std=0.0, pack_max_tokens=1),
    "lan": ChannelModel(base_latency=0.0005, jitter_std=0.0035, pack_max_tokens=1),
    "remote": ChannelModel(
        base_latency=0.08, jitter_std=0.045, pack_max_tokens=19, pack_flush_interval=0.5
    ),
    "vpn": ChannelModel(
        base_latency=0.1, jitter_std=0.0675, pack_max_tokens=19, pack_flush_interval=0.5
    ),
}

_PRESET_SCENARIO = {
    "localhost": Scenario.LOCAL_HOST,
    "lan": Scenario.LAN,
    "remote": Scenario.REMOTE,
    "vpn": Scenario.VPN,
}

_CHANNEL_KEYS = {
    "base_latency": float,
    "jitter_std": float,
    "pack_max_tokens": int,
    "pack_flush_interval": float,
    "bytes_per_token_min": int,
    "bytes_per_token_max": int,
    "overhead_bytes": int,
}


def load_channel(path: Path | str) -> ChannelModel:
    """Read a channel from a key=value file; unknown keys rejected."""
    raw: dict[str, str] = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise TraceError(f"{path}: malformed line {lineno}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _CHANNEL_KEYS:
            raise TraceError(f"{path}: unknown channel key {key!r}")
        raw[key] = value
    kwargs: dict = {}
    bpt_lo, bpt_hi = ChannelModel.bytes_per_token
    for key, value in raw.items():
        conv = _CHANNEL_KEYS[key]
        if key == "bytes_per_token_min":
            bpt_lo = conv(value)
        elif key == "bytes_per_token_max":
            bpt_hi = conv(value)
        else:
            kwargs[key] = conv(value)
    kwargs["bytes_per_token"] = (bpt_lo, bpt_hi)
    return ChannelModel(**kwargs)


def resolve_channel(spec: str) -> tuple[ChannelModel, Scenario]:
    """Map a preset name or a channel-file path to (channel, scenario)."""
    if spec in CHANNEL_PRESETS:
        return CHANNEL_PRESETS[spec], _PRESET_SCENARIO[spec]
    path = Path(spec)
    if path.exists():
        return load_channel(path), Scenario.UNKNOWN
    raise TraceError(f"unknown channel preset or missing file: {spec}")
