"""Generative trace simulator: token timing, packetization, network channel."""

from .profiles import ModelProfile, load_profiles, table1_profiles, write_profiles
from .channel import CHANNEL_PRESETS, ChannelModel, load_channel, resolve_channel
from .generate import channel_apply, gen_token_times, packetize, synth_dataset

__all__ = [
    "ModelProfile",
    "load_profiles",
    "write_profiles",
    "table1_profiles",
    "ChannelModel",
    "CHANNEL_PRESETS",
    "load_channel",
    "resolve_channel",
    "gen_token_times",
    "packetize",
    "channel_apply",
    "synth_dataset",
]
