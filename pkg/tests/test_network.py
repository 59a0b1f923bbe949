import numpy as np
import pytest

from trfp._numba import NUMBA_ENABLED
from trfp.classifier.loss import focal_loss
from trfp.classifier.network import (
    ArchConfig,
    build_params,
    backward_batch,
    forward,
    forward_batch,
    predict,
)

TINY = ArchConfig(
    n_features=5, n_classes=3, hidden_units=(4, 3, 2),
    attention_heads=2, attention_key_dim=4, dense_units=(8, 4), dropout_rate=0.3,
)


def tiny_params(dtype=np.float64, seed=1):
    return build_params(TINY, seed=seed, dtype=dtype)


def test_softmax_contract(rng):
    params = tiny_params(np.float32)
    x = rng.standard_normal((9, 6, 5)).astype(np.float32)
    probs, _ = forward_batch(params, x)
    assert np.allclose(probs.sum(axis=1), 1.0, atol=1e-6)
    assert np.all(probs > 0) and np.all(probs < 1)


def test_inference_deterministic(rng):
    params = tiny_params(np.float32)
    x = rng.standard_normal((4, 6, 5)).astype(np.float32)
    a, _ = forward_batch(params, x)
    b, _ = forward_batch(params, x)
    assert np.array_equal(a, b)


def test_single_sample_matches_batch(rng):
    params = tiny_params(np.float32)
    x = rng.standard_normal((3, 6, 5)).astype(np.float32)
    batch, _ = forward_batch(params, x)
    one = forward(params, x[1])
    assert np.allclose(one, batch[1], atol=1e-6)


def test_predict_returns_argmax(rng):
    params = tiny_params(np.float32)
    x = rng.standard_normal((6, 5)).astype(np.float32)
    cls, probs = predict(params, x)
    assert cls == int(np.argmax(probs))
    assert probs.shape == (3,)


def test_shape_mismatch_rejected(rng):
    params = tiny_params(np.float32)
    with pytest.raises(ValueError):
        forward_batch(params, rng.standard_normal((2, 6, 7)).astype(np.float32))


def test_dropout_seed_controls_train_forward(rng):
    params = tiny_params(np.float32)
    x = rng.standard_normal((4, 6, 5)).astype(np.float32)
    a, _ = forward_batch(params, x, train_mode=True, dropout_seed=1)
    b, _ = forward_batch(params, x, train_mode=True, dropout_seed=1)
    c, _ = forward_batch(params, x, train_mode=True, dropout_seed=2)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_running_stats_update_only_when_asked(rng):
    params = tiny_params(np.float32)
    x = rng.standard_normal((8, 6, 5)).astype(np.float32)
    before = {k: v.copy() for k, v in params.running.items()}
    forward_batch(params, x, train_mode=True, dropout_seed=0, update_running=False)
    assert all(np.array_equal(before[k], params.running[k]) for k in before)
    forward_batch(params, x, train_mode=True, dropout_seed=0, update_running=True)
    assert any(not np.array_equal(before[k], params.running[k]) for k in before)


def _gradcheck(params, x, y, weights, h=1e-5, rel_tol=1e-4, abs_tol=1e-7):
    def loss_fn():
        probs, cache = forward_batch(params, x, train_mode=True, dropout_seed=7)
        loss, dlog = focal_loss(probs, y, 0.25, 2.0, weights)
        return loss, cache, dlog

    _, cache, dlog = loss_fn()
    grads = backward_batch(params, cache, dlog)
    failures = []
    for name in sorted(params.weights):
        flat = params.weights[name].ravel()
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            lp, _, _ = loss_fn()
            flat[i] = orig - h
            lm, _, _ = loss_fn()
            flat[i] = orig
            num = (lp - lm) / (2 * h)
            ana = grads[name].ravel()[i]
            err = abs(num - ana)
            rel = err / max(abs(num), abs(ana), 1e-12)
            if not (rel < rel_tol or err < abs_tol):
                failures.append((name, i, rel, err))
    return failures


def test_gradients_match_finite_differences(rng):
    # the spec'd tiny instance: h = (4, 3, 2), T = 6, K = 3
    params = tiny_params(np.float64, seed=3)
    x = rng.standard_normal((4, 6, 5))
    y = rng.integers(0, 3, 4)
    weights = rng.uniform(0.8, 1.4, 3)
    failures = _gradcheck(params, x, y, weights)
    assert failures == [], f"{len(failures)} parameter gradients disagree: {failures[:5]}"


@pytest.mark.skipif(not NUMBA_ENABLED, reason="single backend")
def test_softmax_kernels_match_numpy(rng):
    from trfp.classifier._kernels import (
        softmax_lastaxis,
        softmax_backward,
        _softmax_lastaxis_np,
        _softmax_backward_np,
    )

    x = rng.standard_normal((6, 11, 13)).astype(np.float32)
    a = softmax_lastaxis(x)
    b = _softmax_lastaxis_np(x)
    np.testing.assert_allclose(a, b, rtol=1e-5, atol=1e-7)
    dp = rng.standard_normal(x.shape).astype(np.float32)
    np.testing.assert_allclose(
        softmax_backward(a, dp), _softmax_backward_np(b, dp), rtol=1e-4, atol=1e-6
    )


def test_batched_matmul_matches_plain(rng):
    from trfp.classifier._kernels import batched_matmul, matmul2d

    a = rng.standard_normal((20, 40, 16)).astype(np.float32)
    b = rng.standard_normal((20, 16, 24)).astype(np.float32)
    assert np.array_equal(batched_matmul(a, b), a @ b)
    m = rng.standard_normal((512, 80)).astype(np.float32)
    n = rng.standard_normal((80, 512)).astype(np.float32)
    assert np.array_equal(matmul2d(m, n), m @ n)
