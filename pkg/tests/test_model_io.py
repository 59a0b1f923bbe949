import numpy as np
import pytest

from trfp.classifier.model_io import ModelFormatError, load_model, save_model
from trfp.classifier.network import ArchConfig, build_params, forward_batch


def small_params():
    arch = ArchConfig(
        n_features=6, n_classes=4, hidden_units=(4, 3, 2),
        attention_heads=2, attention_key_dim=4, dense_units=(8, 4), dropout_rate=0.3,
    )
    params = build_params(arch, seed=5, labels=["a", "b", "c", "d"], dtype=np.float32)
    params.seq_len = 16
    params.seq_step = 2
    return params


def test_round_trip(tmp_path):
    params = small_params()
    path = tmp_path / "m.trfp"
    save_model(params, path)
    assert path.read_bytes()[:4] == b"TRFP"

    loaded = load_model(path)
    assert loaded.arch == params.arch
    assert loaded.labels == params.labels
    assert loaded.seq_len == 16 and loaded.seq_step == 2
    assert sorted(loaded.weights) == sorted(params.weights)
    for name, tensor in params.weights.items():
        assert np.array_equal(loaded.weights[name], tensor)
    for name, tensor in params.running.items():
        assert np.array_equal(loaded.running[name], tensor)


def test_round_trip_preserves_predictions(tmp_path, rng):
    params = small_params()
    x = rng.standard_normal((3, 16, 6)).astype(np.float32)
    before, _ = forward_batch(params, x)
    save_model(params, tmp_path / "m.trfp")
    after, _ = forward_batch(load_model(tmp_path / "m.trfp"), x)
    assert np.array_equal(before, after)


def test_bad_magic_rejected(tmp_path):
    p = tmp_path / "bad.trfp"
    p.write_bytes(b"NOPE" + b"\x00" * 64)
    with pytest.raises(ModelFormatError, match="not a TRFP model"):
        load_model(p)


def test_bad_version_rejected(tmp_path):
    params = small_params()
    p = tmp_path / "m.trfp"
    save_model(params, p)
    raw = bytearray(p.read_bytes())
    raw[4] = 99
    p.write_bytes(bytes(raw))
    with pytest.raises(ModelFormatError, match="version"):
        load_model(p)


def test_trailing_bytes_rejected(tmp_path):
    params = small_params()
    p = tmp_path / "m.trfp"
    save_model(params, p)
    p.write_bytes(p.read_bytes() + b"junk")
    with pytest.raises(ModelFormatError, match="trailing"):
        load_model(p)
