"""Shared fixtures. BLAS thread pools are pinned before numpy loads so the
timed acceptance criteria genuinely run single-threaded."""

import os

for var in ("OPENBLAS_NUM_THREADS", "OMP_NUM_THREADS", "MKL_NUM_THREADS"):
    os.environ.setdefault(var, "1")

import numpy as np  # noqa: E402
import pytest  # noqa: E402

from oscope.store import EmbeddingStore  # noqa: E402


@pytest.fixture
def tiny_store() -> EmbeddingStore:
    return EmbeddingStore.from_records(
        "unit-test", "text", 2, [("a", [1.0, 0.0]), ("b", [0.0, 1.0])]
    )


def random_store(rng: np.random.Generator, n: int, dim: int, modality: str = "text") -> EmbeddingStore:
    vecs = rng.standard_normal((n, dim)).astype(np.float32)
    ids = [f"rec-{i:05d}" for i in range(n)]
    return EmbeddingStore("rand", modality, dim, tuple(ids), vecs, False)
