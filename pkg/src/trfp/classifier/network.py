"""The recurrent-attention network: init, forward, analytic backward.

Three bidirectional LSTM blocks with decreasing widths, batch norm after
every block, an 8-head attention block with residual add after block 1,
two ReLU dense layers, and a softmax head.  Implemented directly on numpy
arrays (float32 by default; float64 for gradient checks) with the hot
recurrences dispatched through ``_kernels``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ._kernels import (
    batched_matmul,
    lstm_backward,
    lstm_forward,
    matmul2d,
    softmax_backward,
    softmax_lastaxis,
)
from .config import TrainConfig

BN_EPS = 1e-5
BN_MOMENTUM = 0.9


@dataclass(frozen=True)
class ArchConfig:
    """Shape of one network instance."""

    n_features: int
    n_classes: int
    hidden_units: tuple[int, int, int] = (64, 32, 16)
    attention_heads: int = 8
    attention_key_dim: int = 128
    dense_units: tuple[int, int] = (128, 64)
    dropout_rate: float = 0.3

    @classmethod
    def from_train_config(cls, config: TrainConfig, n_features: int, n_classes: int) -> "ArchConfig":
        return cls(
            n_features=n_features,
            n_classes=n_classes,
            hidden_units=tuple(config.hidden_units),
            attention_heads=config.attention_heads,
            attention_key_dim=config.attention_key_dim,
            dense_units=tuple(config.dense_units),
            dropout_rate=config.dropout_rate,
        )


@dataclass
class ClassifierParams:
    """Weights + batch-norm running statistics + label order.

    ``seq_len``/``seq_step`` echo how training sequences were cut so that
    prediction on raw feature files is self-contained.
    """

    arch: ArchConfig
    labels: list[str]
    weights: dict[str, np.ndarray]
    running: dict[str, np.ndarray]
    seq_len: int = 128
    seq_step: int = 4

    @property
    def n_parameters(self) -> int:
        return int(sum(w.size for w in self.weights.values()))


def _glorot(rng: np.random.Generator, shape: tuple[int, int], dtype) -> np.ndarray:
    limit = math.sqrt(6.0 / (shape[0] + shape[1]))
    return rng.uniform(-limit, limit, shape).astype(dtype)


def _orthogonal_gates(rng: np.random.Generator, h: int, dtype) -> np.ndarray:
    blocks = []
    for _ in range(4):
        a = rng.standard_normal((h, h))
        q, r = np.linalg.qr(a)
        q = q * np.sign(np.diag(r))
        blocks.append(q)
    return np.hstack(blocks).astype(dtype)


def _lstm_bias(h: int, dtype) -> np.ndarray:
    b = np.zeros(4 * h, dtype=dtype)
    b[h : 2 * h] = 1.0  # forget-gate bias starts open
    return b


def build_params(
    arch: ArchConfig, seed: int, labels: Optional[list[str]] = None, dtype=np.float32
) -> ClassifierParams:
    """Fresh parameters, deterministic per seed."""
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    h1, h2, h3 = arch.hidden_units
    d1, d2 = arch.dense_units
    hd = arch.attention_heads * arch.attention_key_dim
    widths = {"1": (arch.n_features, h1), "2": (2 * h1, h2), "3": (2 * h2, h3)}

    w: dict[str, np.ndarray] = {}
    for name, (fan_in, h) in widths.items():
        for direction in ("f", "b"):
            w[f"lstm{name}_{direction}_Wx"] = _glorot(rng, (fan_in, 4 * h), dtype)
            w[f"lstm{name}_{direction}_Wh"] = _orthogonal_gates(rng, h, dtype)
            w[f"lstm{name}_{direction}_b"] = _lstm_bias(h, dtype)

    dmodel = 2 * h1
    for proj in ("q", "k", "v"):
        w[f"attn_W{proj}"] = _glorot(rng, (dmodel, hd), dtype)
        w[f"attn_b{proj}"] = np.zeros(hd, dtype=dtype)
    w["attn_Wo"] = _glorot(rng, (hd, dmodel), dtype)
    w["attn_bo"] = np.zeros(dmodel, dtype=dtype)

    bn_widths = {"bn1": 2 * h1, "bn2": 2 * h1, "bn3": 2 * h2, "bn4": 2 * h3, "bn5": d2}
    running: dict[str, np.ndarray] = {}
    for name, width in bn_widths.items():
        w[f"{name}_gamma"] = np.ones(width, dtype=dtype)
        w[f"{name}_beta"] = np.zeros(width, dtype=dtype)
        running[f"{name}_mean"] = np.zeros(width, dtype=dtype)
        running[f"{name}_var"] = np.ones(width, dtype=dtype)

    w["dense1_W"] = _glorot(rng, (2 * h3, d1), dtype)
    w["dense1_b"] = np.zeros(d1, dtype=dtype)
    w["dense2_W"] = _glorot(rng, (d1, d2), dtype)
    w["dense2_b"] = np.zeros(d2, dtype=dtype)
    w["out_W"] = _glorot(rng, (d2, arch.n_classes), dtype)
    w["out_b"] = np.zeros(arch.n_classes, dtype=dtype)

    return ClassifierParams(arch, list(labels or []), w, running)


# ---------------------------------------------------------------------------
# Layer helpers


def _bilstm_forward(w: dict, name: str, x: np.ndarray, return_sequences: bool):
    """x: (B,T,F) -> (B,T,2H) or (B,2H); internal arrays are time-major."""
    b, t, f = x.shape
    h = w[f"{name}_f_Wh"].shape[0]
    xt = np.ascontiguousarray(x.transpose(1, 0, 2))
    xt_r = np.ascontiguousarray(xt[::-1])

    caches = {}
    outs = []
    for direction, inp in (("f", xt), ("b", xt_r)):
        wx = w[f"{name}_{direction}_Wx"]
        wh = w[f"{name}_{direction}_Wh"]
        bias = w[f"{name}_{direction}_b"]
        gates = (matmul2d(inp.reshape(t * b, f), wx) + bias).reshape(t, b, 4 * h)
        h_seq = np.empty((t, b, h), dtype=x.dtype)
        c_seq = np.empty((t, b, h), dtype=x.dtype)
        tc_seq = np.empty((t, b, h), dtype=x.dtype)
        lstm_forward(gates, wh, h_seq, c_seq, tc_seq)
        caches[direction] = (gates, c_seq, tc_seq, h_seq)
        outs.append(h_seq)

    h_f, h_b = outs
    if return_sequences:
        y = np.empty((b, t, 2 * h), dtype=x.dtype)
        y[:, :, :h] = h_f.transpose(1, 0, 2)
        y[:, :, h:] = h_b[::-1].transpose(1, 0, 2)
    else:
        y = np.concatenate([h_f[-1], h_b[-1]], axis=1)
    cache = (xt, xt_r, caches, return_sequences, x.shape)
    return y, cache


def _bilstm_backward(w: dict, name: str, cache, dy: np.ndarray):
    xt, xt_r, caches, return_sequences, x_shape = cache
    b, t, f = x_shape
    h = w[f"{name}_f_Wh"].shape[0]

    if return_sequences:
        dh_f = np.ascontiguousarray(dy[:, :, :h].transpose(1, 0, 2))
        dh_b = np.ascontiguousarray(dy[:, :, h:].transpose(1, 0, 2)[::-1])
    else:
        dh_f = np.zeros((t, b, h), dtype=dy.dtype)
        dh_b = np.zeros((t, b, h), dtype=dy.dtype)
        dh_f[t - 1] = dy[:, :h]
        dh_b[t - 1] = dy[:, h:]

    grads = {}
    dx_t = None
    for direction, inp, dh in (("f", xt, dh_f), ("b", xt_r, dh_b)):
        gates, c_seq, tc_seq, h_seq = caches[direction]
        wh = w[f"{name}_{direction}_Wh"]
        wh_t = np.ascontiguousarray(wh.T)
        d_gates = np.empty_like(gates)
        lstm_backward(gates, c_seq, tc_seq, wh_t, dh, d_gates)

        dg_flat = d_gates.reshape(t * b, 4 * h)
        grads[f"{name}_{direction}_Wx"] = matmul2d(inp.reshape(t * b, f).T, dg_flat)
        h_prev = np.empty_like(h_seq)
        h_prev[0] = 0.0
        h_prev[1:] = h_seq[:-1]
        grads[f"{name}_{direction}_Wh"] = matmul2d(h_prev.reshape(t * b, h).T, dg_flat)
        grads[f"{name}_{direction}_b"] = dg_flat.sum(axis=0)
        dx_dir = matmul2d(dg_flat, w[f"{name}_{direction}_Wx"].T).reshape(t, b, f)
        if direction == "b":
            dx_dir = dx_dir[::-1]
        dx_t = dx_dir if dx_t is None else dx_t + dx_dir

    dx = np.ascontiguousarray(dx_t.transpose(1, 0, 2))
    return dx, grads


def _mha_forward(w: dict, arch: ArchConfig, z: np.ndarray):
    b, t, d = z.shape
    heads, dk = arch.attention_heads, arch.attention_key_dim
    hd = heads * dk
    flat = z.reshape(b * t, d)

    # One fused GEMM for the three input projections.
    w_qkv = np.hstack([w["attn_Wq"], w["attn_Wk"], w["attn_Wv"]])
    b_qkv = np.concatenate([w["attn_bq"], w["attn_bk"], w["attn_bv"]])
    qkv = matmul2d(flat, w_qkv) + b_qkv

    def heads_view(mat):
        return np.ascontiguousarray(
            mat.reshape(b, t, heads, dk).transpose(0, 2, 1, 3)
        ).reshape(b * heads, t, dk)

    q = heads_view(qkv[:, :hd])
    k = heads_view(qkv[:, hd : 2 * hd])
    v = heads_view(qkv[:, 2 * hd :])
    scale = z.dtype.type(1.0 / math.sqrt(dk))
    scores = batched_matmul(q, k.transpose(0, 2, 1))
    scores *= scale
    p = softmax_lastaxis(scores)
    ctx = batched_matmul(p, v)
    ctx_flat = np.ascontiguousarray(
        ctx.reshape(b, heads, t, dk).transpose(0, 2, 1, 3)
    ).reshape(b * t, hd)
    out = (matmul2d(ctx_flat, w["attn_Wo"]) + w["attn_bo"]).reshape(b, t, d)
    cache = (flat, q, k, v, p, ctx_flat, scale, z.shape)
    return out, cache


def _mha_backward(w: dict, arch: ArchConfig, cache, dout: np.ndarray):
    flat, q, k, v, p, ctx_flat, scale, z_shape = cache
    b, t, d = z_shape
    heads, dk = arch.attention_heads, arch.attention_key_dim
    hd = heads * dk
    dout_flat = dout.reshape(b * t, d)

    grads = {
        "attn_Wo": matmul2d(ctx_flat.T, dout_flat),
        "attn_bo": dout_flat.sum(axis=0),
    }
    d_ctx_flat = matmul2d(dout_flat, w["attn_Wo"].T)
    d_ctx = np.ascontiguousarray(
        d_ctx_flat.reshape(b, t, heads, dk).transpose(0, 2, 1, 3)
    ).reshape(b * heads, t, dk)

    dp = batched_matmul(d_ctx, v.transpose(0, 2, 1))
    dv = batched_matmul(p.transpose(0, 2, 1), d_ctx)
    ds = softmax_backward(p, dp)
    dq = batched_matmul(ds, k)
    dq *= scale
    dk_ = batched_matmul(ds.transpose(0, 2, 1), q)
    dk_ *= scale

    def flat_view(mat):
        return np.ascontiguousarray(
            mat.reshape(b, heads, t, dk).transpose(0, 2, 1, 3)
        ).reshape(b * t, hd)

    d_qkv = np.hstack([flat_view(dq), flat_view(dk_), flat_view(dv)])
    w_qkv = np.hstack([w["attn_Wq"], w["attn_Wk"], w["attn_Wv"]])
    dw_qkv = matmul2d(flat.T, d_qkv)
    db_qkv = d_qkv.sum(axis=0)
    grads["attn_Wq"] = dw_qkv[:, :hd]
    grads["attn_Wk"] = dw_qkv[:, hd : 2 * hd]
    grads["attn_Wv"] = dw_qkv[:, 2 * hd :]
    grads["attn_bq"] = db_qkv[:hd]
    grads["attn_bk"] = db_qkv[hd : 2 * hd]
    grads["attn_bv"] = db_qkv[2 * hd :]
    dz_flat = matmul2d(d_qkv, w_qkv.T)
    return dz_flat.reshape(b, t, d), grads


def _bn_forward(w, running, name, x2d, train: bool, update_running: bool):
    gamma = w[f"{name}_gamma"]
    beta = w[f"{name}_beta"]
    if train:
        mu = x2d.mean(axis=0)
        var = x2d.var(axis=0)
        if update_running:
            running[f"{name}_mean"] = (
                BN_MOMENTUM * running[f"{name}_mean"] + (1.0 - BN_MOMENTUM) * mu
            ).astype(x2d.dtype)
            running[f"{name}_var"] = (
                BN_MOMENTUM * running[f"{name}_var"] + (1.0 - BN_MOMENTUM) * var
            ).astype(x2d.dtype)
    else:
        mu = running[f"{name}_mean"]
        var = running[f"{name}_var"]
    inv = 1.0 / np.sqrt(var + BN_EPS)
    xhat = (x2d - mu) * inv
    out = gamma * xhat + beta
    return out, (xhat, inv, gamma, train)


def _bn_backward(cache, name, dy):
    xhat, inv, gamma, train = cache
    grads = {
        f"{name}_gamma": (dy * xhat).sum(axis=0),
        f"{name}_beta": dy.sum(axis=0),
    }
    if train:
        n = dy.shape[0]
        dx = (gamma * inv / n) * (n * dy - dy.sum(axis=0) - xhat * (dy * xhat).sum(axis=0))
    else:
        dx = dy * (gamma * inv)
    return dx.astype(dy.dtype), grads


def _dropout(x, rate, rng, train: bool):
    if not train or rate <= 0.0:
        return x, None
    mask = (rng.random(x.shape) >= rate).astype(x.dtype) / x.dtype.type(1.0 - rate)
    return x * mask, mask


# ---------------------------------------------------------------------------
# Full network


def forward_batch(
    params: ClassifierParams,
    x: np.ndarray,
    train_mode: bool = False,
    dropout_seed: int = 0,
    update_running: bool = False,
):
    """Probabilities (B,K) plus the cache needed by :func:`backward_batch`."""
    arch = params.arch
    w = params.weights
    if x.ndim != 3 or x.shape[2] != arch.n_features:
        raise ValueError(f"expected (B, T, {arch.n_features}) input, got {x.shape}")
    rng = np.random.default_rng(np.random.SeedSequence(dropout_seed))
    b, t, _ = x.shape
    d1w = 2 * arch.hidden_units[0]
    d2w = 2 * arch.hidden_units[1]

    z1, c_lstm1 = _bilstm_forward(w, "lstm1", x, return_sequences=True)
    z1n_flat, c_bn1 = _bn_forward(w, params.running, "bn1", z1.reshape(b * t, d1w), train_mode, update_running)
    z1d_flat, m1 = _dropout(z1n_flat, arch.dropout_rate, rng, train_mode)
    att, c_mha = _mha_forward(w, arch, z1d_flat.reshape(b, t, d1w))
    an_flat, c_bn2 = _bn_forward(w, params.running, "bn2", att.reshape(b * t, d1w), train_mode, update_running)
    r = an_flat.reshape(b, t, d1w) + z1

    z2, c_lstm2 = _bilstm_forward(w, "lstm2", r, return_sequences=True)
    z2n_flat, c_bn3 = _bn_forward(w, params.running, "bn3", z2.reshape(b * t, d2w), train_mode, update_running)
    z2d_flat, m2 = _dropout(z2n_flat, arch.dropout_rate, rng, train_mode)

    h3, c_lstm3 = _bilstm_forward(w, "lstm3", z2d_flat.reshape(b, t, d2w), return_sequences=False)
    h3n, c_bn4 = _bn_forward(w, params.running, "bn4", h3, train_mode, update_running)

    pre1 = h3n @ w["dense1_W"] + w["dense1_b"]
    f1 = np.maximum(pre1, 0)
    pre2 = f1 @ w["dense2_W"] + w["dense2_b"]
    f2 = np.maximum(pre2, 0)
    f2n, c_bn5 = _bn_forward(w, params.running, "bn5", f2, train_mode, update_running)
    logits = f2n @ w["out_W"] + w["out_b"]
    probs = softmax_lastaxis(logits)

    cache = {
        "shape": (b, t),
        "lstm1": c_lstm1,
        "bn1": c_bn1,
        "m1": m1,
        "mha": c_mha,
        "bn2": c_bn2,
        "z1": z1,
        "lstm2": c_lstm2,
        "bn3": c_bn3,
        "m2": m2,
        "lstm3": c_lstm3,
        "bn4": c_bn4,
        "h3n": h3n,
        "pre1": pre1,
        "f1": f1,
        "pre2": pre2,
        "bn5": c_bn5,
        "f2n": f2n,
    }
    return probs, cache


def backward_batch(params: ClassifierParams, cache, dlogits: np.ndarray) -> dict[str, np.ndarray]:
    """Gradients for every weight given d(loss)/d(logits)."""
    arch = params.arch
    w = params.weights
    b, t = cache["shape"]
    d1w = 2 * arch.hidden_units[0]
    d2w = 2 * arch.hidden_units[1]
    grads: dict[str, np.ndarray] = {}

    grads["out_W"] = cache["f2n"].T @ dlogits
    grads["out_b"] = dlogits.sum(axis=0)
    d_f2n = dlogits @ w["out_W"].T
    d_f2, g = _bn_backward(cache["bn5"], "bn5", d_f2n)
    grads.update(g)
    d_pre2 = d_f2 * (cache["pre2"] > 0)
    grads["dense2_W"] = cache["f1"].T @ d_pre2
    grads["dense2_b"] = d_pre2.sum(axis=0)
    d_f1 = d_pre2 @ w["dense2_W"].T
    d_pre1 = d_f1 * (cache["pre1"] > 0)
    grads["dense1_W"] = cache["h3n"].T @ d_pre1
    grads["dense1_b"] = d_pre1.sum(axis=0)
    d_h3n = d_pre1 @ w["dense1_W"].T
    d_h3, g = _bn_backward(cache["bn4"], "bn4", d_h3n)
    grads.update(g)

    d_z2d, g = _bilstm_backward(w, "lstm3", cache["lstm3"], d_h3)
    grads.update(g)
    d_z2d_flat = d_z2d.reshape(b * t, d2w)
    if cache["m2"] is not None:
        d_z2d_flat = d_z2d_flat * cache["m2"]
    d_z2_flat, g = _bn_backward(cache["bn3"], "bn3", d_z2d_flat)
    grads.update(g)
    d_r, g = _bilstm_backward(w, "lstm2", cache["lstm2"], d_z2_flat.reshape(b, t, d2w))
    grads.update(g)

    # r = bn2(attention) + z1
    d_att_flat, g = _bn_backward(cache["bn2"], "bn2", d_r.reshape(b * t, d1w))
    grads.update(g)
    d_z1d, g = _mha_backward(w, arch, cache["mha"], d_att_flat.reshape(b, t, d1w))
    grads.update(g)
    d_z1d_flat = d_z1d.reshape(b * t, d1w)
    if cache["m1"] is not None:
        d_z1d_flat = d_z1d_flat * cache["m1"]
    d_z1n_flat, g = _bn_backward(cache["bn1"], "bn1", d_z1d_flat)
    grads.update(g)
    d_z1 = d_z1n_flat.reshape(b, t, d1w) + d_r  # residual skip
    _, g = _bilstm_backward(w, "lstm1", cache["lstm1"], d_z1)
    grads.update(g)
    return grads


def forward(
    params: ClassifierParams,
    sample: np.ndarray,
    train_mode: bool = False,
    dropout_seed: int = 0,
) -> np.ndarray:
    """Class probabilities for one (T, F) sample or a (B, T, F) batch."""
    x = np.asarray(sample)
    single = x.ndim == 2
    if single:
        x = x[None]
    probs, _ = forward_batch(params, x, train_mode=train_mode, dropout_seed=dropout_seed)
    return probs[0] if single else probs


def predict(params: ClassifierParams, sample: np.ndarray) -> tuple[int, np.ndarray]:
    """(argmax class, full distribution); ties break to the lowest index."""
    probs = forward(params, sample, train_mode=False)
    return int(np.argmax(probs)), probs


def predict_batch(
    params: ClassifierParams, x: np.ndarray, batch_size: int = 256
) -> tuple[np.ndarray, np.ndarray]:
    """(argmax classes, probabilities) for a (N, T, F) stack, in chunks."""
    classes = np.empty(x.shape[0], dtype=np.int64)
    probs = np.empty((x.shape[0], params.arch.n_classes), dtype=np.float64)
    for start in range(0, x.shape[0], batch_size):
        p, _ = forward_batch(params, x[start : start + batch_size])
        probs[start : start + batch_size] = p
        classes[start : start + batch_size] = np.argmax(p, axis=1)
    return classes, probs


class Network:
    """Thin object wrapper used by the trainer."""

    def __init__(self, params: ClassifierParams):
        self.params = params

    @classmethod
    def build(cls, arch: ArchConfig, seed: int, labels=None, dtype=np.float32) -> "Network":
        return cls(build_params(arch, seed, labels=labels, dtype=dtype))

    def forward(self, x, train_mode=False, dropout_seed=0, update_running=False):
        return forward_batch(self.params, x, train_mode, dropout_seed, update_running)

    def backward(self, cache, dlogits):
        return backward_batch(self.params, cache, dlogits)
