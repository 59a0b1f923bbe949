"""Window parameters and the canonical 36-feature layout."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class WindowParams:
    """Sliding-window configuration (seconds)."""

    window_seconds: float = 0.5
    step_seconds: float = 0.1
    burst_seconds: float = 0.05

    def __post_init__(self):
        if self.window_seconds <= 0 or self.step_seconds <= 0 or self.burst_seconds <= 0:
            raise ValueError("window parameters must be positive")
        if self.step_seconds > self.window_seconds:
            raise ValueError("step_seconds must not exceed window_seconds")
        if self.burst_seconds >= self.window_seconds:
            raise ValueError("burst_seconds must be smaller than window_seconds")


# Sub-span lengths for the packet-anchored running maxima.  The average-rate
# and arrival-rate spans are 0.1 s; bytes-per-second uses a 1 s-normalized
# span; burst spans come from WindowParams.burst_seconds.
AVG_RATE_SUBSPAN_S = 0.1
BYTES_PER_SECOND_SPAN_S = 1.0

# Histogram bin count for the IAT / pattern entropies.
ENTROPY_BINS = 16

# Permutation entropy embedding order (delay 1, ties broken by index).
PERM_ORDER = 3

# p90/p10 ratio guard: epsilon denominator when p10 = 0, hard cap always.
RATIO_EPS = 1e-6
RATIO_CAP = 1e6

# Windows must contain at least this many packets to produce a feature row.
MIN_WINDOW_PACKETS = 3

FEATURE_NAMES: tuple[str, ...] = (
    # rate-based
    "max_average_rate",
    "max_burst_rate",
    "max_arrival_rate",
    "max_bytes_per_second",
    "bytes_per_window",
    "packet_rate",
    # inter-arrival time
    "iat_mean",
    "iat_std",
    "iat_cv",
    "iat_p25",
    "iat_p75",
    "iat_p90",
    "iat_p90_p10_ratio",
    "large_iat_ratio",
    "iat_entropy",
    # time series
    "mean_size_time_product",
    "cv_size_time_product",
    "timing_regularity",
    "time_pattern_entropy",
    # change and acceleration
    "mean_time_change",
    "std_time_change",
    "mean_time_acceleration",
    "std_time_acceleration",
    # correlation and entropy
    "size_time_correlation",
    "time_entropy_rate",
    "lis_size",
    "lis_time",
    "size_permutation_entropy",
    "time_permutation_entropy",
    # statistical
    "time_autocorrelation",
    "iat_skewness",
    "iat_kurtosis",
    # rate variability
    "rate_variability",
    "peak_data_rate",
    "burst_rate",
    "burstiness",
)

N_FEATURES = len(FEATURE_NAMES)
assert N_FEATURES == 36
