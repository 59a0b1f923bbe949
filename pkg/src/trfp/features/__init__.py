"""Sliding-window feature engineering: 36 values per qualifying window."""

from .params import FEATURE_NAMES, N_FEATURES, WindowParams
from .groups import (
    Window,
    change_features,
    correlation_entropy_features,
    iat_features,
    rate_features,
    rate_variability_features,
    statistical_features,
    time_series_features,
)
from .extract import (
    FeatureVector,
    compute_window_features,
    extract,
    read_feature_csv,
    windows,
    windows_with_stats,
    write_feature_csv,
)

__all__ = [
    "FEATURE_NAMES",
    "N_FEATURES",
    "WindowParams",
    "Window",
    "FeatureVector",
    "rate_features",
    "iat_features",
    "time_series_features",
    "change_features",
    "correlation_entropy_features",
    "statistical_features",
    "rate_variability_features",
    "windows",
    "windows_with_stats",
    "compute_window_features",
    "extract",
    "write_feature_csv",
    "read_feature_csv",
]
