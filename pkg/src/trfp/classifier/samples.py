"""Sequence samples for the classifier and per-sample normalization."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

log = logging.getLogger(__name__)

# Columns with std below this are treated as constant (divide by 1, no noise).
STD_FLOOR = 1e-12


@dataclass(frozen=True)
class WindowSample:
    """A fixed-length sequence of feature vectors with one class label."""

    sequence: np.ndarray  # (T, n_features)
    label: int

    def __post_init__(self):
        seq = np.asarray(self.sequence)
        if seq.ndim != 2:
            raise ValueError("sequence must be a T x F matrix")
        if not np.isfinite(seq).all():
            raise ValueError("sequence contains non-finite entries")
        object.__setattr__(self, "sequence", seq)


def make_training_windows(
    trace_features: Sequence[np.ndarray],
    trace_labels: Sequence[int],
    seq_len: int,
    seq_step: int,
) -> list[WindowSample]:
    """Overlapping subsequences per trace; windows never span trace boundaries.

    Traces shorter than ``seq_len`` contribute nothing (logged, not an error).
    """
    samples: list[WindowSample] = []
    for feats, label in zip(trace_features, trace_labels):
        feats = np.asarray(feats)
        n = feats.shape[0]
        if n < seq_len:
            log.warning("trace with %d feature rows < seq_len %d: no samples", n, seq_len)
            continue
        for start in range(0, n - seq_len + 1, seq_step):
            samples.append(WindowSample(feats[start : start + seq_len], int(label)))
    return samples


def normalize_per_sample(
    sequence: np.ndarray,
    noise_std_fraction: float = 0.0,
    rng: Optional[np.random.Generator] = None,
    out_dtype=np.float32,
) -> np.ndarray:
    """Standardize each feature column within the sample independently.

    Columns with std below 1e-12 are centered and divided by 1.  When
    ``noise_std_fraction`` > 0 (training mode) seeded Gaussian noise with
    std = fraction x column std is added after standardization, i.e. std
    ``fraction`` in normalized units for non-constant columns and none for
    constant ones.
    """
    x = np.asarray(sequence, dtype=np.float64)
    mu = x.mean(axis=0)
    sd = x.std(axis=0)
    live = sd >= STD_FLOOR
    denom = np.where(live, sd, 1.0)
    out = (x - mu) / denom
    if noise_std_fraction > 0.0:
        if rng is None:
            raise ValueError("training-mode normalization needs an rng")
        out = out + rng.normal(0.0, noise_std_fraction, out.shape) * live
    return out.astype(out_dtype)


def normalize_batch(sequences: np.ndarray, out_dtype=np.float32) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized inference-mode normalization of (N, T, F) stacks.

    Returns the normalized stack and the per-sample live-column mask used
    for training-noise scaling.
    """
    x = np.asarray(sequences, dtype=np.float64)
    mu = x.mean(axis=1, keepdims=True)
    sd = x.std(axis=1, keepdims=True)
    live = sd >= STD_FLOOR
    denom = np.where(live, sd, 1.0)
    out = ((x - mu) / denom).astype(out_dtype)
    return out, live[:, 0, :]
