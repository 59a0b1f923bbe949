"""Reference (numpy) implementations of the seven feature groups.

These are the contract functions; the numba kernel in ``_kernels.py``
computes the same 36 values in one pass.  To keep both backends and the
test oracles in exact agreement, every reduction here is a serial
left-to-right sum (``cumsum``), std/moments use the population convention
(divide by the series length), percentiles interpolate linearly between
closest ranks, and histogram bins use the shared index formula
``min(floor(nbins * (x - min) / range), nbins - 1)``.

Units: sizes in bytes, times in seconds, rates in bits/s except
``bytes_per_window`` and ``max_bytes_per_second`` (bytes/s).
"""

from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass

import numpy as np

from .params import (
    AVG_RATE_SUBSPAN_S,
    BYTES_PER_SECOND_SPAN_S,
    ENTROPY_BINS,
    RATIO_CAP,
    RATIO_EPS,
    WindowParams,
)


@dataclass(frozen=True)
class Window:
    """One feature window: arrival times relative to the window start."""

    times: np.ndarray  # float64 seconds, sorted, >= 0
    sizes: np.ndarray  # float64 bytes
    params: WindowParams

    @property
    def iats(self) -> np.ndarray:
        return np.diff(self.times)


def _ssum(a: np.ndarray) -> float:
    """Serial left-to-right sum (matches the numba loop bit-for-bit)."""
    if a.size == 0:
        return 0.0
    return float(np.cumsum(a)[-1])


def _mean(a: np.ndarray) -> float:
    return _ssum(a) / a.size


def _pop_std(a: np.ndarray, mu: float) -> float:
    c = a - mu
    return float(np.sqrt(_ssum(c * c) / a.size))


def _percentile(sorted_a: np.ndarray, q: float) -> float:
    """Linear interpolation between closest ranks on a pre-sorted array."""
    n = sorted_a.size
    h = (n - 1) * (q / 100.0)
    lo = int(h)
    frac = h - lo
    if lo + 1 >= n:
        return float(sorted_a[n - 1])
    return float(sorted_a[lo] + (sorted_a[lo + 1] - sorted_a[lo]) * frac)


def _bin_indices(a: np.ndarray) -> np.ndarray:
    """Shared equal-width binning; constant input maps to bin 0."""
    mn = float(a.min())
    mx = float(a.max())
    if mx == mn:
        return np.zeros(a.size, dtype=np.int64)
    idx = ((a - mn) / (mx - mn) * ENTROPY_BINS).astype(np.int64)
    return np.minimum(idx, ENTROPY_BINS - 1)


def _entropy_from_counts(counts: np.ndarray, total: int) -> float:
    h = 0.0
    for c in counts:
        if c > 0:
            p = c / total
            h -= p * np.log(p)
    return float(h)


def hist_entropy(a: np.ndarray) -> float:
    """Shannon entropy (nats) of the 16-bin equal-width histogram."""
    if a.size == 0 or float(a.min()) == float(a.max()):
        return 0.0
    counts = np.bincount(_bin_indices(a), minlength=ENTROPY_BINS)
    return _entropy_from_counts(counts, a.size)


def perm_entropy(a: np.ndarray) -> float:
    """Permutation entropy (nats), order 3, delay 1, ties by index order."""
    n = a.size - 2
    if n < 1:
        return 0.0
    counts = np.zeros(27, dtype=np.int64)
    for i in range(n):
        x0, x1, x2 = a[i], a[i + 1], a[i + 2]
        r0 = int(x0 > x1) + int(x0 > x2)
        r1 = int(x1 >= x0) + int(x1 > x2)
        r2 = int(x2 >= x0) + int(x2 >= x1)
        counts[r0 * 9 + r1 * 3 + r2] += 1
    return _entropy_from_counts(counts, n)


def lis_length(a: np.ndarray) -> int:
    """Length of the longest strictly increasing subsequence."""
    tails: list[float] = []
    for x in a:
        i = bisect_left(tails, x)
        if i == len(tails):
            tails.append(x)
        else:
            tails[i] = x
    return len(tails)


def _span_end(times: np.ndarray, start_idx: int, length: float) -> int:
    """Index one past the last packet in [t[start_idx], t[start_idx]+length)."""
    return int(np.searchsorted(times, times[start_idx] + length, side="left"))


def _max_byte_rate(w: Window, span_s: float) -> float:
    """Max over packet-anchored sub-spans of 8 * bytes-in-span / span_s."""
    t = w.times
    best = 0.0
    for j in range(t.size):
        e = _span_end(t, j, span_s)
        rate = 8.0 * _ssum(w.sizes[j:e]) / span_s
        if rate > best:
            best = rate
    return best


def rate_features(w: Window) -> tuple[float, ...]:
    """Six rate/throughput values (see module docstring for units)."""
    t = w.times
    n = t.size
    win = w.params.window_seconds

    max_avg = _max_byte_rate(w, AVG_RATE_SUBSPAN_S)
    max_burst = _max_byte_rate(w, w.params.burst_seconds)

    max_arrival = 0.0
    for j in range(n):
        e = _span_end(t, j, AVG_RATE_SUBSPAN_S)
        if e - j >= 2 and t[e - 1] > t[j]:
            rate = (e - 1 - j) / (t[e - 1] - t[j])
            if rate > max_arrival:
                max_arrival = rate

    max_bps = 0.0
    for j in range(n):
        e = _span_end(t, j, BYTES_PER_SECOND_SPAN_S)
        total = _ssum(w.sizes[j:e]) / BYTES_PER_SECOND_SPAN_S
        if total > max_bps:
            max_bps = total

    bytes_per_window = _ssum(w.sizes) / win
    packet_rate = n / win
    return (max_avg, max_burst, max_arrival, max_bps, bytes_per_window, packet_rate)


def iat_features(w: Window) -> tuple[float, ...]:
    """Nine IAT statistics: mean, std, CV, p25/p75/p90, p90/p10 ratio,
    large-IAT ratio, histogram entropy."""
    d = w.iats
    m = d.size
    mu = _mean(d)
    sd = _pop_std(d, mu)
    cv = sd / mu if sd > 0.0 else 0.0
    s = np.sort(d)
    p25 = _percentile(s, 25.0)
    p75 = _percentile(s, 75.0)
    p90 = _percentile(s, 90.0)
    p10 = _percentile(s, 10.0)
    ratio = min(p90 / (p10 if p10 > 0.0 else RATIO_EPS), RATIO_CAP)
    if float(d.min()) == float(d.max()):
        large = 0.0
    else:
        large = int(np.count_nonzero(d > mu)) / m
    return (mu, sd, cv, p25, p75, p90, ratio, large, hist_entropy(d))


def time_series_features(w: Window) -> tuple[float, ...]:
    """Size-time product stats, timing regularity, quantized-IAT
    transition-pattern entropy."""
    d = w.iats
    prod = w.sizes[: d.size] * d
    mu = _mean(prod)
    sd = _pop_std(prod, mu)
    cv = sd / mu if sd > 0.0 else 0.0

    d2 = np.diff(d)
    reg = 1.0 / (1.0 + (_pop_std(d2, _mean(d2)) if d2.size else 0.0))

    if d.size >= 2:
        q = _bin_indices(d)
        keys = q[:-1] * ENTROPY_BINS + q[1:]
        counts = np.bincount(keys, minlength=ENTROPY_BINS * ENTROPY_BINS)
        pat = _entropy_from_counts(counts, d.size - 1)
    else:
        pat = 0.0
    return (mu, cv, reg, pat)


def change_features(w: Window) -> tuple[float, ...]:
    """Mean/std of IAT first differences and of IAT second differences."""
    d2 = np.diff(w.iats)
    d3 = np.diff(d2)
    out = []
    for series in (d2, d3):
        if series.size:
            mu = _mean(series)
            out.extend([mu, _pop_std(series, mu)])
        else:
            out.extend([0.0, 0.0])
    return tuple(out)


def correlation_entropy_features(w: Window) -> tuple[float, ...]:
    """Pearson size-IAT correlation, entropy rate, normalized LIS of sizes
    and IATs, permutation entropies of sizes and IATs."""
    d = w.iats
    m = d.size
    b = w.sizes[:m]
    mb, md = _mean(b), _mean(d)
    sb, sd = _pop_std(b, mb), _pop_std(d, md)
    if sb > 0.0 and sd > 0.0:
        cov = _ssum((b - mb) * (d - md)) / m
        corr = min(1.0, max(-1.0, cov / (sb * sd)))
    else:
        corr = 0.0
    rate = hist_entropy(d) / m
    lis_b = lis_length(w.sizes) / w.sizes.size
    lis_d = lis_length(d) / m
    return (corr, rate, lis_b, lis_d, perm_entropy(w.sizes), perm_entropy(d))


def statistical_features(w: Window) -> tuple[float, ...]:
    """Lag-1 autocorrelation, skewness, kurtosis (non-excess) of the IATs."""
    d = w.iats
    m = d.size
    mu = _mean(d)
    c = d - mu
    c2 = c * c
    m2 = _ssum(c2) / m
    if m2 == 0.0:
        return (0.0, 0.0, 3.0)
    denom = _ssum(c2)
    auto = _ssum(c[:-1] * c[1:]) / denom
    m3 = _ssum(c2 * c) / m
    m4 = _ssum(c2 * c2) / m
    skew = m3 / m2**1.5
    kurt = m4 / (m2 * m2)
    return (auto, skew, kurt)


def rate_variability_features(w: Window) -> tuple[float, ...]:
    """Instantaneous-rate CV and peak, burst rate (duplicate slot), and
    burstiness (sigma - mu)/(sigma + mu) of the IATs."""
    d = w.iats
    m = d.size
    b = w.sizes[:m]
    mask = d > 0.0
    rates = 8.0 * b[mask] / d[mask]
    if rates.size:
        mu_r = _mean(rates)
        sd_r = _pop_std(rates, mu_r)
        rate_var = sd_r / mu_r if sd_r > 0.0 else 0.0
        peak = float(rates.max())
    else:
        rate_var = 0.0
        peak = 0.0
    burst = _max_byte_rate(w, w.params.burst_seconds)
    mu = _mean(d)
    sd = _pop_std(d, mu)
    if sd + mu > 0.0:
        burstiness = min(1.0, max(-1.0, (sd - mu) / (sd + mu)))
    else:
        burstiness = 0.0
    return (rate_var, peak, burst, burstiness)
