"""Token-stream, packetization, and channel simulation.

The whole chain is deterministic per seed.  Send timestamps are rounded to
integer nanoseconds before the channel shift is applied, so a jitter-free
channel preserves every inter-arrival time exactly at nanosecond
resolution.
"""

from __future__ import annotations

import numpy as np

from ..trace_model import NS_PER_S, CleanTrace, Scenario, TraceError
from .channel import ChannelModel
from .profiles import ModelProfile

# Each ITT is floored at mean/10; a truncated-Normal draw resamples until
# every value clears the floor.
ITT_FLOOR_FRACTION = 0.1


def gen_token_times(profile: ModelProfile, n_tokens: int, seed: int) -> np.ndarray:
    """Generation timestamps (seconds), t[0] = 0, one per token."""
    if n_tokens < 2:
        raise TraceError("n_tokens must be >= 2")
    rng = np.random.default_rng(seed)
    n = n_tokens - 1
    floor = profile.mean_itt * ITT_FLOOR_FRACTION

    if profile.distribution == "lognormal" and profile.std_itt > 0:
        ratio2 = (profile.std_itt / profile.mean_itt) ** 2
        sigma_ln = np.sqrt(np.log1p(ratio2))
        mu_ln = np.log(profile.mean_itt) - 0.5 * sigma_ln**2
        draw = lambda size: rng.lognormal(mu_ln, sigma_ln, size)
    else:
        draw = lambda size: rng.normal(profile.mean_itt, profile.std_itt, size)

    itts = draw(n)
    bad = itts < floor
    while bad.any():
        itts[bad] = draw(int(bad.sum()))
        bad = itts < floor

    if profile.spike_prob > 0.0:
        spikes = rng.random(n) < profile.spike_prob
        itts[spikes] *= profile.spike_scale

    times = np.empty(n_tokens, dtype=np.float64)
    times[0] = 0.0
    np.cumsum(itts, out=times[1:])
    return times


def packetize(
    token_times: np.ndarray, channel: ChannelModel, seed: int
) -> tuple[np.ndarray, np.ndarray]:
    """Greedy token bundling; returns (send_times s, packet sizes bytes).

    A packet closes when it holds ``pack_max_tokens`` or when the next
    token arrives ``pack_flush_interval`` or more after the packet's first
    token; its send time is the last bundled token's time.
    """
    token_times = np.asarray(token_times, dtype=np.float64)
    if token_times.size == 0:
        return np.empty(0), np.empty(0, dtype=np.int64)
    if np.any(np.diff(token_times) < 0):
        raise TraceError("token_times not sorted")
    rng = np.random.default_rng(seed)
    lo, hi = channel.bytes_per_token
    tok_bytes = rng.integers(lo, hi + 1, size=token_times.size)

    send_times: list[float] = []
    sizes: list[int] = []
    first = token_times[0]
    last = first
    nbytes = int(tok_bytes[0])
    count = 1
    for i in range(1, token_times.size):
        tt = token_times[i]
        if count >= channel.pack_max_tokens or tt - first >= channel.pack_flush_interval:
            send_times.append(last)
            sizes.append(nbytes + channel.overhead_bytes)
            first = tt
            nbytes = 0
            count = 0
        last = tt
        nbytes += int(tok_bytes[i])
        count += 1
    send_times.append(last)
    sizes.append(nbytes + channel.overhead_bytes)
    return np.array(send_times), np.array(sizes, dtype=np.int64)


def channel_apply(
    send_times: np.ndarray,
    sizes: np.ndarray,
    channel: ChannelModel,
    seed: int,
    label=None,
    scenario: Scenario = Scenario.UNKNOWN,
) -> CleanTrace:
    """Latency + jitter, re-sort, rebase to t = 0; output passes validation."""
    send_times = np.asarray(send_times, dtype=np.float64)
    if np.any(np.diff(send_times) < 0):
        raise TraceError("packets not sorted by send_time")
    rng = np.random.default_rng(seed)
    send_ns = np.round(send_times * NS_PER_S).astype(np.int64)
    lat_ns = int(round(channel.base_latency * NS_PER_S))
    if channel.jitter_std > 0:
        eps_ns = np.round(rng.normal(0.0, channel.jitter_std, send_ns.size) * NS_PER_S).astype(np.int64)
    else:
        eps_ns = np.zeros(send_ns.size, dtype=np.int64)
    arrival_ns = send_ns + lat_ns + eps_ns
    order = np.argsort(arrival_ns, kind="stable")
    arrival_ns = arrival_ns[order]
    out_sizes = np.asarray(sizes, dtype=np.int64)[order]
    arrival_ns = arrival_ns - arrival_ns[0]
    return CleanTrace(arrival_ns, out_sizes, label, scenario)


def synth_dataset(
    profiles: list[ModelProfile],
    channel: ChannelModel,
    duration_s: float,
    seed: int,
    scenario: Scenario = Scenario.UNKNOWN,
) -> list[CleanTrace]:
    """One labeled trace per profile, each covering ``duration_s`` seconds.

    Responses are simulated independently and concatenated back-to-back
    (one mean ITT apart; idle prompt gaps are not part of a trace).  The
    per-class random stream derives from (seed, class_index).
    """
    if not profiles:
        raise TraceError("profiles must be non-empty")
    names = [p.label.name for p in profiles]
    if len(set(names)) != len(names):
        raise TraceError("profile labels must be distinct")
    if duration_s <= 0:
        raise TraceError("duration too short for one response")

    children = np.random.SeedSequence(seed).spawn(len(profiles))
    traces = []
    for profile, child in zip(profiles, children):
        rng = np.random.default_rng(child)
        lo, hi = profile.tokens_per_response
        send_parts: list[np.ndarray] = []
        size_parts: list[np.ndarray] = []
        offset = 0.0
        while True:
            n_tokens = int(rng.integers(lo, hi + 1))
            s_tokens = int(rng.integers(0, 2**63 - 1))
            s_pack = int(rng.integers(0, 2**63 - 1))
            times = gen_token_times(profile, n_tokens, s_tokens)
            send, sizes = packetize(times, channel, s_pack)
            send_parts.append(send + offset)
            size_parts.append(sizes)
            offset = send_parts[-1][-1] + profile.mean_itt
            if offset >= duration_s:
                break
        s_chan = int(rng.integers(0, 2**63 - 1))
        trace = channel_apply(
            np.concatenate(send_parts),
            np.concatenate(size_parts),
            channel,
            s_chan,
            label=profile.label,
            scenario=scenario,
        )
        traces.append(trace)
    return traces
