"""Window iteration and the 36-feature extraction driver.

The window grid is anchored at the first packet arrival (identical to the
spec'd ``[k*s, k*s + w)`` grid for rebased traces) and computed in integer
nanoseconds so window counts never fall victim to float division.  Feature
values are computed from window-relative times, so shifting a whole trace
in time changes nothing.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Optional, Sequence

import numpy as np

from .._numba import NUMBA_ENABLED
from ..trace_model import NS_PER_S, CleanTrace, TraceError
from . import groups
from .params import FEATURE_NAMES, MIN_WINDOW_PACKETS, N_FEATURES, WindowParams

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class FeatureVector:
    """One window summary: 36 values plus window metadata."""

    values: np.ndarray
    window_start: float
    n_packets: int
    label: Optional[str] = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.shape != (N_FEATURES,):
            raise ValueError(f"expected {N_FEATURES} values, got {v.shape}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)


def _grid(trace: CleanTrace, params: WindowParams) -> tuple[int, int, int, int]:
    """(t0_ns, window_ns, step_ns, n_windows) for the trace."""
    w_ns = int(round(params.window_seconds * NS_PER_S))
    s_ns = int(round(params.step_seconds * NS_PER_S))
    t0 = int(trace.times_ns[0])
    span = int(trace.times_ns[-1]) - t0
    n = max(0, span - w_ns) // s_ns + 1
    return t0, w_ns, s_ns, int(n)


def windows(trace: CleanTrace, params: WindowParams) -> Iterator[tuple[float, slice]]:
    """Yield (window_start_seconds, packet index slice) for qualifying windows.

    Window k covers [t0 + k*step, t0 + k*step + window); windows holding
    fewer than 3 packets are skipped.
    """
    for start_s, sl in _iter_all(trace, params):
        if sl.stop - sl.start >= MIN_WINDOW_PACKETS:
            yield start_s, sl


def windows_with_stats(trace: CleanTrace, params: WindowParams) -> tuple[list[tuple[float, slice]], int]:
    """Like :func:`windows` but materialized, returning the skip count too."""
    kept = []
    skipped = 0
    for start_s, sl in _iter_all(trace, params):
        if sl.stop - sl.start >= MIN_WINDOW_PACKETS:
            kept.append((start_s, sl))
        else:
            skipped += 1
    return kept, skipped


def _iter_all(trace: CleanTrace, params: WindowParams) -> Iterator[tuple[float, slice]]:
    if len(trace) == 0:
        return
    t0, w_ns, s_ns, n = _grid(trace, params)
    t = trace.times_ns
    for k in range(n):
        start = t0 + k * s_ns
        i0 = int(np.searchsorted(t, start, side="left"))
        i1 = int(np.searchsorted(t, start + w_ns, side="left"))
        yield start / NS_PER_S, slice(i0, i1)


def compute_window_features(times: np.ndarray, sizes: np.ndarray, params: WindowParams) -> np.ndarray:
    """All 36 features for one window (times relative to the window start)."""
    if NUMBA_ENABLED:
        from ._kernels import window_features_kernel

        return window_features_kernel(
            np.ascontiguousarray(times, dtype=np.float64),
            np.ascontiguousarray(sizes, dtype=np.float64),
            params.window_seconds,
            params.burst_seconds,
        )
    w = groups.Window(np.asarray(times, dtype=np.float64), np.asarray(sizes, dtype=np.float64), params)
    out = np.empty(N_FEATURES, dtype=np.float64)
    vals = (
        groups.rate_features(w)
        + groups.iat_features(w)
        + groups.time_series_features(w)
        + groups.change_features(w)
        + groups.correlation_entropy_features(w)
        + groups.statistical_features(w)
        + groups.rate_variability_features(w)
    )
    out[:] = vals
    return out


def extract(trace: CleanTrace, params: WindowParams = WindowParams()) -> list[FeatureVector]:
    """Slide the window over the trace and emit one FeatureVector per window.

    Deterministic for identical inputs; raises when no window qualifies.
    """
    label = trace.label.name if trace.label is not None else None
    t_ns = trace.times_ns
    sizes = trace.sizes.astype(np.float64)
    out: list[FeatureVector] = []
    skipped = 0
    for start_s, sl in _iter_all(trace, params):
        n = sl.stop - sl.start
        if n < MIN_WINDOW_PACKETS:
            skipped += 1
            continue
        start_ns = int(round(start_s * NS_PER_S))
        rel_times = (t_ns[sl] - start_ns) / NS_PER_S
        values = compute_window_features(rel_times, sizes[sl], params)
        out.append(FeatureVector(values, start_s, n, label))
    if not out:
        raise TraceError("no windows")
    if skipped:
        log.debug("extract: skipped %d windows with < %d packets", skipped, MIN_WINDOW_PACKETS)
    return out


# ---------------------------------------------------------------------------
# Feature CSV: 36 canonical names + window_start,label; 9 significant digits.

FEATURE_CSV_HEADER = ",".join(FEATURE_NAMES) + ",window_start,label"


def write_feature_csv(vectors: Sequence[FeatureVector], path: Path | str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(FEATURE_CSV_HEADER + "\n")
        for fv in vectors:
            nums = ",".join(f"{v:.9g}" for v in fv.values)
            label = fv.label or ""
            fh.write(f"{nums},{fv.window_start:.9g},{label}\n")


def read_feature_csv(path: Path | str) -> tuple[np.ndarray, np.ndarray, list[Optional[str]]]:
    """Returns (features (n, 36), window_starts (n,), labels)."""
    path = Path(path)
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != FEATURE_CSV_HEADER:
            raise TraceError(f"{path}: unexpected feature file header")
        feats: list[list[float]] = []
        starts: list[float] = []
        labels: list[Optional[str]] = []
        for lineno, line in enumerate(fh, 2):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != N_FEATURES + 2:
                raise TraceError(f"{path}: malformed row at line {lineno}")
            try:
                feats.append([float(x) for x in parts[:N_FEATURES]])
                starts.append(float(parts[N_FEATURES]))
            except ValueError:
                raise TraceError(f"{path}: malformed row at line {lineno}") from None
            labels.append(parts[N_FEATURES + 1] or None)
    if not feats:
        raise TraceError(f"{path}: no feature rows")
    return np.array(feats, dtype=np.float64), np.array(starts, dtype=np.float64), labels
