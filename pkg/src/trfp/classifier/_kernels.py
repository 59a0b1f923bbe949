"""Hot network kernels: LSTM recurrences, attention softmax, batched matmul.

Numba implementations with pure-numpy fallbacks, selected once at import
via the shared ``TRFP_DISABLE_NUMBA`` flag.  LSTM arrays are time-major
(T, B, ...) so each step is a contiguous 2-d block; gate layout along the
last axis is [input, forget, cell, output].  Scalar constants are passed
in as arguments so float32 graphs stay float32 inside the jitted loops.
"""

from __future__ import annotations

import threading

import numpy as np

from .._numba import NUMBA_ENABLED, njit

try:
    # BLAS pools and our own 2-way splits oversubscribe the cores when both
    # are active; pin BLAS to one thread and do the splitting ourselves
    # (measurably faster on stacked small GEMMs, identical results since
    # every output slice is still a single BLAS call).
    from threadpoolctl import threadpool_limits

    _BLAS_LIMITER = threadpool_limits(limits=1, user_api="blas")
    _OWN_THREADS = True
except ImportError:  # pragma: no cover
    _BLAS_LIMITER = None
    _OWN_THREADS = False


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-x))


_SPLIT_MIN_FLOPS = 32e6


def _split2(fn_a, fn_b) -> None:
    t = threading.Thread(target=fn_a)
    t.start()
    fn_b()
    t.join()


def batched_matmul(a: np.ndarray, b: np.ndarray, out: np.ndarray | None = None) -> np.ndarray:
    """Stacked (S, m, k) @ (S, k, n), split across two threads when large."""
    if out is None:
        out = np.empty((*a.shape[:-1], b.shape[-1]), dtype=a.dtype)
    flops = 2.0 * a.shape[0] * a.shape[1] * a.shape[2] * b.shape[-1]
    if not _OWN_THREADS or a.shape[0] < 2 or flops < _SPLIT_MIN_FLOPS:
        return np.matmul(a, b, out=out)
    mid = a.shape[0] // 2
    _split2(
        lambda: np.matmul(a[:mid], b[:mid], out=out[:mid]),
        lambda: np.matmul(a[mid:], b[mid:], out=out[mid:]),
    )
    return out


def matmul2d(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """2-d a @ b, row-split across two threads when large."""
    out = np.empty((a.shape[0], b.shape[1]), dtype=a.dtype)
    flops = 2.0 * a.shape[0] * a.shape[1] * b.shape[1]
    if not _OWN_THREADS or flops < _SPLIT_MIN_FLOPS:
        return np.matmul(a, b, out=out)
    if a.shape[0] >= b.shape[1]:
        mid = a.shape[0] // 2
        _split2(
            lambda: np.matmul(a[:mid], b, out=out[:mid]),
            lambda: np.matmul(a[mid:], b, out=out[mid:]),
        )
    else:
        mid = b.shape[1] // 2
        _split2(
            lambda: np.matmul(a, b[:, :mid], out=out[:, :mid]),
            lambda: np.matmul(a, b[:, mid:], out=out[:, mid:]),
        )
    return out


# ---------------------------------------------------------------------------
# Pure numpy implementations


def _lstm_forward_np(gates, wh, h_seq, c_seq, tc_seq):
    t_steps, batch, h4 = gates.shape
    h = h4 // 4
    h_cur = np.zeros((batch, h), dtype=gates.dtype)
    c_cur = np.zeros((batch, h), dtype=gates.dtype)
    for t in range(t_steps):
        a = gates[t] + h_cur @ wh
        gi = _sigmoid(a[:, :h])
        gf = _sigmoid(a[:, h : 2 * h])
        gg = np.tanh(a[:, 2 * h : 3 * h])
        go = _sigmoid(a[:, 3 * h :])
        c_cur = gf * c_cur + gi * gg
        tc = np.tanh(c_cur)
        h_cur = go * tc
        gates[t, :, :h] = gi
        gates[t, :, h : 2 * h] = gf
        gates[t, :, 2 * h : 3 * h] = gg
        gates[t, :, 3 * h :] = go
        h_seq[t] = h_cur
        c_seq[t] = c_cur
        tc_seq[t] = tc


def _lstm_backward_np(gates, c_seq, tc_seq, wh_t, d_h, d_gates):
    t_steps, batch, h4 = gates.shape
    h = h4 // 4
    dh_next = np.zeros((batch, h), dtype=gates.dtype)
    dc_next = np.zeros((batch, h), dtype=gates.dtype)
    for t in range(t_steps - 1, -1, -1):
        gi = gates[t, :, :h]
        gf = gates[t, :, h : 2 * h]
        gg = gates[t, :, 2 * h : 3 * h]
        go = gates[t, :, 3 * h :]
        tc = tc_seq[t]
        dh = d_h[t] + dh_next
        do = dh * tc
        dc = dh * go * (1.0 - tc * tc) + dc_next
        di = dc * gg
        dg = dc * gi
        dc_next = dc * gf
        d_gates[t, :, :h] = di * gi * (1.0 - gi)
        if t > 0:
            d_gates[t, :, h : 2 * h] = dc * c_seq[t - 1] * gf * (1.0 - gf)
        else:
            d_gates[t, :, h : 2 * h] = 0.0
        d_gates[t, :, 2 * h : 3 * h] = dg * (1.0 - gg * gg)
        d_gates[t, :, 3 * h :] = do * go * (1.0 - go)
        dh_next = d_gates[t] @ wh_t


def _softmax_lastaxis_np(x):
    m = x.max(axis=-1, keepdims=True)
    e = np.exp(x - m)
    e /= e.sum(axis=-1, keepdims=True)
    return e


def _softmax_backward_np(p, dp):
    inner = (dp * p).sum(axis=-1, keepdims=True)
    return p * (dp - inner)


# ---------------------------------------------------------------------------
# Numba implementations (same math, fused loops)

if NUMBA_ENABLED:
    from numba import prange

    @njit(cache=True, parallel=True)
    def _softmax_lastaxis_nb(x):
        flat = x.reshape(-1, x.shape[-1])
        n, k = flat.shape
        out = np.empty_like(flat)
        for i in prange(n):
            m = flat[i, 0]
            for j in range(1, k):
                if flat[i, j] > m:
                    m = flat[i, j]
            total = m - m
            for j in range(k):
                v = np.exp(flat[i, j] - m)
                out[i, j] = v
                total += v
            for j in range(k):
                out[i, j] /= total
        return out.reshape(x.shape)

    @njit(cache=True, parallel=True)
    def _softmax_backward_nb(p, dp):
        pf = p.reshape(-1, p.shape[-1])
        df = dp.reshape(-1, dp.shape[-1])
        n, k = pf.shape
        out = np.empty_like(pf)
        for i in prange(n):
            inner = pf[i, 0] - pf[i, 0]
            for j in range(k):
                inner += df[i, j] * pf[i, j]
            for j in range(k):
                out[i, j] = pf[i, j] * (df[i, j] - inner)
        return out.reshape(p.shape)

    softmax_lastaxis = _softmax_lastaxis_nb
    softmax_backward = _softmax_backward_nb
else:
    softmax_lastaxis = _softmax_lastaxis_np
    softmax_backward = _softmax_backward_np

# The LSTM recurrences stay vectorized numpy on both paths: each step is a
# BLAS matmul plus SIMD transcendentals over (B, 4H) blocks, which measures
# several times faster than scalar jitted loops (see trfp.bench).
lstm_forward = _lstm_forward_np
lstm_backward = _lstm_backward_np
