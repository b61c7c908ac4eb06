"""Softmax probe trainer: separability, gradients, determinism, invariances."""

import numpy as np
import pytest

from oscope.errors import DimError
from oscope.forge import gen_manifests
from oscope.linear import (
    LinearProbe,
    TrainConfig,
    eval_probe,
    grad_check,
    load_probe,
    save_probe,
    train_probe,
    _softmax,
)
from oscope.mock import MockEncoderConfig, encode_captions
from oscope.store import EmbeddingStore
from oscope.vocab import load_vocabulary


def _separable_store(n_per_class=50, dim=8, noise=0.01, seed=0):
    rng = np.random.default_rng(seed)
    rows, labels = [], {}
    for i in range(2 * n_per_class):
        cls = 0 if i < n_per_class else 1
        vec = np.zeros(dim)
        vec[cls] = 1.0
        vec += rng.normal(0.0, noise, dim)
        rows.append((f"r{i}", vec))
        labels[f"r{i}"] = "zero" if cls == 0 else "one"
    return EmbeddingStore.from_records("sep", "text", dim, rows), labels


def test_separable_holdout_perfect():
    store, labels = _separable_store()
    _, history = train_probe(store, labels, TrainConfig(seed=1))
    assert history.holdout_accuracy == 1.0
    assert len(history.holdout_ids) == 20


def test_single_class_rejected():
    store, labels = _separable_store()
    mono = {k: "same" for k in labels}
    with pytest.raises(ValueError):
        train_probe(store, mono, TrainConfig(seed=1))


def test_sparse_class_rejected():
    store, labels = _separable_store()
    labels = dict(labels)
    labels["r0"] = "rare"
    with pytest.raises(ValueError):
        train_probe(store, labels, TrainConfig(seed=1))


def test_unknown_id_is_key_error():
    store, labels = _separable_store()
    labels = dict(labels)
    labels["ghost"] = "zero"
    with pytest.raises(KeyError):
        train_probe(store, labels, TrainConfig(seed=1))


def test_training_bitwise_deterministic():
    store, labels = _separable_store()
    p1, _ = train_probe(store, labels, TrainConfig(seed=42))
    p2, _ = train_probe(store, labels, TrainConfig(seed=42))
    assert np.array_equal(p1.W, p2.W) and np.array_equal(p1.b, p2.b)


def test_loss_non_increasing_over_five_epoch_windows():
    store, labels = _separable_store(noise=0.2)
    _, history = train_probe(store, labels, TrainConfig(seed=3))
    losses = history.train_loss
    assert len(losses) == TrainConfig().epochs
    for i in range(len(losses) - 4):
        assert losses[i + 4] <= losses[i] + 1e-12


def test_eval_constant_probe_is_half():
    store, labels = _separable_store(noise=0.0)
    probe = LinearProbe(np.zeros((2, 8)), np.array([1.0, 0.0]), ("zero", "one"), "sep")
    assert eval_probe(probe, store, labels) == 0.5


def test_eval_tie_takes_lowest_class_index():
    store = EmbeddingStore.from_records("m", "text", 2, [("x", [1.0, 1.0])])
    probe = LinearProbe(np.zeros((2, 2)), np.zeros(2), ("a", "b"), "m")
    assert eval_probe(probe, store, {"x": "a"}) == 1.0
    assert eval_probe(probe, store, {"x": "b"}) == 0.0


def test_eval_empty_set_is_error():
    store, _ = _separable_store()
    probe = LinearProbe(np.zeros((2, 8)), np.zeros(2), ("a", "b"), "sep")
    with pytest.raises(ValueError):
        eval_probe(probe, store, {})


def test_eval_dim_mismatch():
    store, labels = _separable_store(dim=8)
    probe = LinearProbe(np.zeros((2, 9)), np.zeros(2), ("zero", "one"), "sep")
    with pytest.raises(DimError):
        eval_probe(probe, store, labels)


def _random_batch(seed=0, n=40, dim=8, classes=3):
    rng = np.random.default_rng(seed)
    return rng.standard_normal((n, dim)), rng.integers(0, classes, n)


def test_grad_check_random_point():
    assert grad_check(TrainConfig(seed=7), _random_batch()) < 1e-4


def test_grad_check_zero_init():
    assert grad_check(TrainConfig(seed=7), _random_batch(), at="zero") < 1e-4


def test_grad_check_with_and_without_l2():
    batch = _random_batch(seed=9)
    assert grad_check(TrainConfig(seed=7, l2=0.0), batch) < 1e-4
    assert grad_check(TrainConfig(seed=7, l2=0.1), batch) < 1e-4


def test_softmax_rows_sum_to_one():
    rng = np.random.default_rng(2)
    p = _softmax(rng.standard_normal((64, 9)) * 30.0)
    assert np.all(np.abs(p.sum(axis=1) - 1.0) < 1e-9)
    assert np.all(p >= 0)


def test_rotation_invariant_final_loss_full_batch():
    rng = np.random.default_rng(5)
    n, dim = 240, 12
    x = rng.standard_normal((n, dim)).astype(np.float32)
    y = rng.integers(0, 3, n)
    labels = {f"r{i}": f"c{y[i]}" for i in range(n)}
    q, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    cfg = TrainConfig(learning_rate=0.5, epochs=200, batch_size=n, seed=11)
    base = EmbeddingStore.from_records("m", "text", dim, [(f"r{i}", x[i]) for i in range(n)])
    rotated = EmbeddingStore.from_records(
        "m", "text", dim, [(f"r{i}", (x[i].astype(np.float64) @ q)) for i in range(n)]
    )
    _, hist_a = train_probe(base, labels, cfg)
    _, hist_b = train_probe(rotated, labels, cfg)
    assert abs(hist_a.train_loss[-1] - hist_b.train_loss[-1]) < 1e-3


def test_toc_direction_position_one_highest():
    vocab = load_vocabulary("comco")
    _, captions = gen_manifests(vocab, 3, 2000, seed=31)
    enc = MockEncoderConfig(dim=256, seed=5, text_decay=0.6)
    store = encode_captions(enc, captions, vocab)
    cfg = TrainConfig(learning_rate=1.0, epochs=120, seed=13)
    accs = {}
    for pos in (1, 2, 3):
        labels = {c.caption_id: c.objects[pos - 1] for c in captions}
        _, history = train_probe(store, labels, cfg, target_group=f"pos{pos}")
        accs[pos] = history.holdout_accuracy
    assert accs[1] > accs[2] and accs[1] > accs[3]


def test_probe_json_round_trip(tmp_path):
    store, labels = _separable_store()
    probe, _ = train_probe(store, labels, TrainConfig(seed=2))
    save_probe(probe, tmp_path / "p.json")
    loaded = load_probe(tmp_path / "p.json")
    assert loaded.class_names == probe.class_names
    assert np.array_equal(loaded.W, probe.W) and np.array_equal(loaded.b, probe.b)
