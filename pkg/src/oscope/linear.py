"""Single-layer softmax probes trained on frozen embeddings.

Plain seeded mini-batch gradient descent (no adaptive moments) so runs are
bitwise reproducible. One probe is trained per caption position or size
role; the classifier itself never sees which position it is probing.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from .errors import DimError
from .store import EmbeddingStore


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.1  # cosine-decayed over epochs
    epochs: int = 50
    batch_size: int = 128
    l2: float = 1e-4
    split_fraction: float = 0.8  # train share
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0 or self.epochs < 1 or self.batch_size < 1:
            raise ValueError("learning_rate, epochs and batch_size must be positive")
        if self.l2 < 0:
            raise ValueError("l2 must be >= 0")
        if not 0.0 < self.split_fraction < 1.0:
            raise ValueError("split_fraction must be in (0, 1)")


@dataclass(frozen=True)
class LinearProbe:
    W: np.ndarray  # (classes, dim) float64
    b: np.ndarray  # (classes,) float64
    class_names: tuple[str, ...]
    trained_on: str
    target_group: str = ""

    def __post_init__(self):
        if len(self.class_names) < 2:
            raise ValueError("a probe needs at least two classes")
        if not (np.all(np.isfinite(self.W)) and np.all(np.isfinite(self.b))):
            raise ValueError("non-finite probe parameters")

    @property
    def dim(self) -> int:
        return self.W.shape[1]

    def logits(self, x: np.ndarray) -> np.ndarray:
        return x @ self.W.T + self.b

    def predict(self, x: np.ndarray) -> np.ndarray:
        return np.argmax(self.logits(x), axis=1)  # argmax keeps the lowest index on ties


@dataclass
class TrainHistory:
    train_loss: list[float] = field(default_factory=list)  # full train-split loss per epoch
    holdout_ids: tuple[str, ...] = ()
    holdout_accuracy: float = 0.0


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _loss(W, b, x, y_onehot, l2) -> float:
    p = _softmax(x @ W.T + b)
    ce = -np.log(np.maximum(p[np.arange(len(x)), y_onehot.argmax(1)], 1e-300)).mean()
    return float(ce + l2 * np.sum(W * W))


def _grads(W, b, x, y_onehot, l2):
    p = _softmax(x @ W.T + b)
    delta = (p - y_onehot) / len(x)
    gw = delta.T @ x + 2.0 * l2 * W
    gb = delta.sum(axis=0)
    return gw, gb


def _design(embeddings: EmbeddingStore, labels: Mapping[str, str]):
    ids = [rid for rid in embeddings.ids if rid in labels]
    for rid in labels:
        if rid not in embeddings:
            raise KeyError(f"labeled id {rid!r} not in store")
    classes = tuple(sorted({labels[rid] for rid in ids}))
    if len(classes) < 2:
        raise ValueError("need at least two distinct classes")
    class_ix = {c: i for i, c in enumerate(classes)}
    x = embeddings.vectors[[embeddings._index[rid] for rid in ids]].astype(np.float64)
    y = np.array([class_ix[labels[rid]] for rid in ids], dtype=np.int64)
    counts = np.bincount(y, minlength=len(classes))
    if counts.min() < 2:
        lack = classes[int(np.argmin(counts))]
        raise ValueError(f"class {lack!r} has fewer than 2 examples")
    return ids, classes, x, y


def train_probe(
    embeddings: EmbeddingStore,
    labels: Mapping[str, str],
    cfg: TrainConfig,
    target_group: str = "",
) -> tuple[LinearProbe, TrainHistory]:
    """Fit W, b by seeded mini-batch GD on cross-entropy + l2*||W||^2."""
    ids, classes, x, y = _design(embeddings, labels)
    n, dim = x.shape
    k = len(classes)
    onehot = np.zeros((n, k))
    onehot[np.arange(n), y] = 1.0

    rng = np.random.default_rng(cfg.seed)
    perm = rng.permutation(n)
    n_train = max(1, min(n - 1, int(round(cfg.split_fraction * n))))
    train_ix, hold_ix = perm[:n_train], perm[n_train:]
    xt, yt = x[train_ix], onehot[train_ix]

    limit = np.sqrt(6.0 / (dim + k))
    w = rng.uniform(-limit, limit, size=(k, dim))
    b = np.zeros(k)

    history = TrainHistory()
    for epoch in range(cfg.epochs):
        lr = cfg.learning_rate * 0.5 * (1.0 + np.cos(np.pi * epoch / cfg.epochs))
        order = rng.permutation(n_train)
        for start in range(0, n_train, cfg.batch_size):
            batch = order[start : start + cfg.batch_size]
            gw, gb = _grads(w, b, xt[batch], yt[batch], cfg.l2)
            w -= lr * gw
            b -= lr * gb
        history.train_loss.append(_loss(w, b, xt, yt, cfg.l2))

    probe = LinearProbe(w, b, classes, embeddings.model_id, target_group)
    holdout_ids = tuple(ids[i] for i in hold_ix)
    history.holdout_ids = holdout_ids
    if holdout_ids:
        history.holdout_accuracy = eval_probe(probe, embeddings, {i: labels[i] for i in holdout_ids})
    return probe, history


def eval_probe(probe: LinearProbe, embeddings: EmbeddingStore, labels: Mapping[str, str]) -> float:
    """Fraction of argmax(Wx + b) matches; ties resolve to the lowest class index."""
    if probe.dim != embeddings.dim:
        raise DimError(f"probe dim {probe.dim} != store dim {embeddings.dim}")
    ids = [rid for rid in embeddings.ids if rid in labels]
    if not ids:
        raise ValueError("empty evaluation set")
    for rid in labels:
        if rid not in embeddings:
            raise KeyError(f"labeled id {rid!r} not in store")
    x = embeddings.vectors[[embeddings._index[rid] for rid in ids]].astype(np.float64)
    class_ix = {c: i for i, c in enumerate(probe.class_names)}
    try:
        y = np.array([class_ix[labels[rid]] for rid in ids])
    except KeyError as exc:
        raise ValueError(f"label {exc} not among probe classes") from exc
    return float((probe.predict(x) == y).mean())


def grad_check(
    cfg: TrainConfig,
    sample_batch: tuple[np.ndarray, np.ndarray],
    at: str = "random",
    n_params: int = 128,
    step: float = 1e-4,
) -> float:
    """Max relative error of analytic vs central-difference gradients.

    The batch is (x, y-index) arrays; parameters are probed at a seeded
    random point or at zero init. Checks a seeded subset of >= 100 entries.
    """
    x, y = sample_batch
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if x.ndim != 2 or len(x) != len(y) or len(x) < 2:
        raise ValueError("degenerate sample batch")
    k = int(y.max()) + 1
    if k < 2:
        raise ValueError("batch must cover at least two classes")
    dim = x.shape[1]
    onehot = np.zeros((len(x), k))
    onehot[np.arange(len(x)), y] = 1.0

    rng = np.random.default_rng(cfg.seed + 104729)
    if at == "zero":
        w = np.zeros((k, dim))
    else:
        w = rng.standard_normal((k, dim)) * 0.5
    b = rng.standard_normal(k) * 0.1

    gw, gb = _grads(w, b, x, onehot, cfg.l2)
    analytic = np.concatenate([gw.ravel(), gb.ravel()])
    total = analytic.size
    picks = rng.choice(total, size=min(total, max(100, n_params)), replace=False)

    theta = np.concatenate([w.ravel(), b.ravel()])

    def loss_at(vec: np.ndarray) -> float:
        ww = vec[: k * dim].reshape(k, dim)
        bb = vec[k * dim :]
        return _loss(ww, bb, x, onehot, cfg.l2)

    worst = 0.0
    for ix in picks:
        plus = theta.copy()
        minus = theta.copy()
        plus[ix] += step
        minus[ix] -= step
        numeric = (loss_at(plus) - loss_at(minus)) / (2.0 * step)
        denom = max(abs(analytic[ix]), abs(numeric), 1e-8)
        worst = max(worst, abs(analytic[ix] - numeric) / denom)
    return worst


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------


def save_probe(probe: LinearProbe, path: str | Path) -> None:
    payload = {
        "class_names": list(probe.class_names),
        "W": [[float(v) for v in row] for row in probe.W],
        "b": [float(v) for v in probe.b],
        "trained_on": probe.trained_on,
        "target_group": probe.target_group,
    }
    Path(path).write_text(json.dumps(payload) + "\n", encoding="utf-8")


def load_probe(path: str | Path) -> LinearProbe:
    payload = json.loads(Path(path).read_text("utf-8"))
    return LinearProbe(
        np.array(payload["W"], dtype=np.float64),
        np.array(payload["b"], dtype=np.float64),
        tuple(payload["class_names"]),
        payload.get("trained_on", ""),
        payload.get("target_group", ""),
    )
