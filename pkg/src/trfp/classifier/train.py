"""Training loop: stratified split, Adam, focal loss, per-epoch history."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .config import TrainConfig
from .loss import class_weights, focal_loss
from .network import ArchConfig, ClassifierParams, Network, forward_batch, backward_batch
from .samples import WindowSample, normalize_batch

log = logging.getLogger(__name__)

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass
class EpochStats:
    epoch: int
    train_loss: float
    train_acc: float
    val_loss: float
    val_acc: float


@dataclass
class TrainResult:
    params: ClassifierParams
    history: list[EpochStats]
    class_weights: np.ndarray


class _Adam:
    def __init__(self, weights: dict[str, np.ndarray], lr: float):
        self.lr = lr
        self.t = 0
        self.m = {k: np.zeros_like(v) for k, v in weights.items()}
        self.v = {k: np.zeros_like(v) for k, v in weights.items()}

    def step(self, weights: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        bc1 = 1.0 - ADAM_BETA1**self.t
        bc2 = 1.0 - ADAM_BETA2**self.t
        for name in sorted(weights):
            g = grads[name]
            m = self.m[name]
            v = self.v[name]
            m *= ADAM_BETA1
            m += (1.0 - ADAM_BETA1) * g
            v *= ADAM_BETA2
            v += (1.0 - ADAM_BETA2) * (g * g)
            update = (self.lr * (m / bc1)) / (np.sqrt(v / bc2) + ADAM_EPS)
            weights[name] -= update.astype(weights[name].dtype)


def stratified_split(
    labels: np.ndarray, fraction: float, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Per-class shuffled split; every class lands in the training side."""
    train_idx: list[np.ndarray] = []
    val_idx: list[np.ndarray] = []
    for cls in np.unique(labels):
        idx = np.nonzero(labels == cls)[0]
        idx = idx[rng.permutation(idx.size)]
        n_train = max(1, int(round(fraction * idx.size)))
        train_idx.append(idx[:n_train])
        val_idx.append(idx[n_train:])
    return np.sort(np.concatenate(train_idx)), np.sort(np.concatenate(val_idx))


def train(
    samples: Sequence[WindowSample],
    config: TrainConfig,
    labels: Optional[list[str]] = None,
    dtype=np.float32,
) -> TrainResult:
    """Train on window samples; fully deterministic per (data, config, seed)."""
    if not samples:
        raise ValueError("dataset is empty")
    y = np.array([s.label for s in samples], dtype=np.int64)
    classes = np.unique(y)
    if classes.size < 2:
        raise ValueError("need at least 2 classes to train")
    n_classes = int(classes.max()) + 1
    x_raw = np.stack([s.sequence for s in samples])
    x, live = normalize_batch(x_raw, out_dtype=dtype)
    n_features = x.shape[2]

    ss = np.random.SeedSequence(config.seed)
    ss_init, ss_split, ss_shuffle, ss_noise, ss_dropout = ss.spawn(5)
    rng_split = np.random.default_rng(ss_split)
    rng_shuffle = np.random.default_rng(ss_shuffle)
    rng_noise = np.random.default_rng(ss_noise)
    rng_dropout = np.random.default_rng(ss_dropout)

    train_idx, val_idx = stratified_split(y, 0.8, rng_split)
    weights_per_class = class_weights(y[train_idx], n_classes)

    arch = ArchConfig.from_train_config(config, n_features, n_classes)
    init_seed = int(np.random.default_rng(ss_init).integers(0, 2**63 - 1))
    net = Network.build(arch, init_seed, labels=labels, dtype=dtype)
    net.params.seq_len = config.seq_len
    net.params.seq_step = config.seq_step
    log.info(
        "training: %d samples (%d train / %d val), %d classes, %d parameters",
        len(samples), train_idx.size, val_idx.size, n_classes, net.params.n_parameters,
    )

    opt = _Adam(net.params.weights, config.learning_rate)
    noise_frac = dtype(config.noise_std_fraction)
    live_scale = live.astype(dtype)[:, None, :]

    history: list[EpochStats] = []
    for epoch in range(config.epochs):
        t0 = time.perf_counter()
        order = train_idx[rng_shuffle.permutation(train_idx.size)]
        total_loss = 0.0
        total_correct = 0
        for start in range(0, order.size, config.batch_size):
            idx = order[start : start + config.batch_size]
            xb = x[idx]
            if config.noise_std_fraction > 0:
                noise = rng_noise.standard_normal(xb.shape, dtype=dtype)
                xb = xb + noise * noise_frac * live_scale[idx]
            yb = y[idx]
            drop_seed = int(rng_dropout.integers(0, 2**63 - 1))
            probs, cache = forward_batch(
                net.params, xb, train_mode=True, dropout_seed=drop_seed, update_running=True
            )
            loss, dlogits = focal_loss(
                probs, yb, config.focal_alpha, config.focal_gamma, weights_per_class
            )
            if not np.isfinite(loss):
                raise RuntimeError(
                    f"non-finite loss at epoch {epoch + 1}, batch {start // config.batch_size}"
                )
            grads = backward_batch(net.params, cache, dlogits.astype(dtype))
            opt.step(net.params.weights, grads)
            total_loss += loss * idx.size
            total_correct += int((np.argmax(probs, axis=1) == yb).sum())

        val_loss, val_acc = _evaluate(net.params, x, y, val_idx, config, weights_per_class)
        stats = EpochStats(
            epoch=epoch + 1,
            train_loss=total_loss / order.size,
            train_acc=total_correct / order.size,
            val_loss=val_loss,
            val_acc=val_acc,
        )
        history.append(stats)
        log.info(
            "epoch %d/%d: loss %.5f acc %.4f | val loss %.5f acc %.4f (%.1fs)",
            stats.epoch, config.epochs, stats.train_loss, stats.train_acc,
            stats.val_loss, stats.val_acc, time.perf_counter() - t0,
        )
    return TrainResult(net.params, history, weights_per_class)


def _evaluate(params, x, y, idx, config, weights_per_class) -> tuple[float, float]:
    if idx.size == 0:
        return float("nan"), float("nan")
    total_loss = 0.0
    correct = 0
    for start in range(0, idx.size, 256):
        sel = idx[start : start + 256]
        probs, _ = forward_batch(params, x[sel])
        loss, _ = focal_loss(probs, y[sel], config.focal_alpha, config.focal_gamma, weights_per_class)
        total_loss += loss * sel.size
        correct += int((np.argmax(probs, axis=1) == y[sel]).sum())
    return total_loss / idx.size, correct / idx.size
