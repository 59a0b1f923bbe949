"""Focal loss with per-class weighting."""

from __future__ import annotations

import logging

import numpy as np

log = logging.getLogger(__name__)

PROB_FLOOR = 1e-12


def class_weights(labels: np.ndarray, n_classes: int) -> np.ndarray:
    """w_k = sqrt(max frequency / frequency_k); the majority class gets 1."""
    labels = np.asarray(labels)
    counts = np.bincount(labels, minlength=n_classes)
    if np.any(counts == 0):
        missing = int(np.argmax(counts == 0))
        raise ValueError(f"class has no samples: {missing}")
    return np.sqrt(counts.max() / counts)


def focal_loss(
    probs: np.ndarray,
    labels: np.ndarray,
    alpha: float = 0.25,
    gamma: float = 2.0,
    weights: np.ndarray | None = None,
) -> tuple[float, np.ndarray]:
    """Mean focal loss over a batch and its gradient w.r.t. the logits.

    Per sample: -alpha_k (1 - p_k)^gamma log p_k with k the true class and
    alpha_k = alpha x class weight.  ``probs`` must be post-softmax.
    True-class probabilities below 1e-12 are clamped (and logged).
    """
    probs = np.asarray(probs)
    labels = np.asarray(labels)
    n, k = probs.shape
    idx = np.arange(n)
    p = probs[idx, labels].astype(np.float64)
    if np.any(p < PROB_FLOOR):
        log.warning("focal_loss: clamped %d probabilities at %g", int((p < PROB_FLOOR).sum()), PROB_FLOOR)
        p = np.maximum(p, PROB_FLOOR)
    if weights is None:
        a = np.full(n, alpha)
    else:
        a = alpha * np.asarray(weights, dtype=np.float64)[labels]

    u = 1.0 - p
    lnp = np.log(p)
    mod = u**gamma
    losses = -a * mod * lnp
    loss = float(losses.mean())

    # dL/dp, with the u -> 0 limit handled explicitly for gamma < 1.
    if gamma == 0.0:
        gp = -a / p
    else:
        u_safe = np.where(u > 0.0, u, 1.0)
        term = a * gamma * u_safe ** (gamma - 1.0) * lnp
        gp = np.where(u > 0.0, term, 0.0) - a * mod / p

    # dL/dz_j = gp * p * (delta_jy - p_j), averaged over the batch.
    scale = (gp * p / n).astype(probs.dtype)
    dlogits = -probs * scale[:, None]
    dlogits[idx, labels] += scale
    return loss, dlogits
