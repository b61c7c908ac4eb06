"""Pure-numpy implementations of the hot kernels.

Same contracts as the compiled extension: float64 accumulation, lowest-index
tie break, per-(seed, partition) streams. The Monte Carlo stream here is
numpy's PCG64, so simulator draws differ from the compiled backend stream;
both are deterministic per seed and statistically equivalent.
"""

from __future__ import annotations

import numpy as np

BACKEND = "python"

_RETRIEVE_CHUNK = 256


def _rng(seed: int, partition: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=(int(seed), int(partition))))


def normal_fill(seed: int, partition: int, n: int) -> np.ndarray:
    return _rng(seed, partition).standard_normal(n)


def uniform_fill(seed: int, partition: int, n: int) -> np.ndarray:
    return _rng(seed, partition).random(n)


def mc_pair_pass(
    seed: int,
    partition: int,
    trials: int,
    d: int,
    k: int,
    b: int,
    rademacher: bool,
) -> tuple[np.ndarray, np.ndarray]:
    """Per-trial objective values for the ideal and truncated encoders."""
    rng = _rng(seed, partition)
    out_i = np.empty(trials, dtype=np.float64)
    out_t = np.empty(trials, dtype=np.float64)
    cut = d - k
    e1 = np.exp(1.0)
    for t in range(trials):
        if rademacher:
            m = rng.integers(0, 2, size=(b + 1, d)).astype(np.float64) * 2.0 - 1.0
        else:
            m = rng.standard_normal((b + 1, d))
        z, neg = m[0], m[1:]
        dots = neg @ z
        n2z = z @ z
        n2neg = np.einsum("ij,ij->i", neg, neg)
        dots_tail = neg[:, cut:] @ z[cut:]
        n2z_tail = z[cut:] @ z[cut:]
        n2neg_tail = np.einsum("ij,ij->i", neg[:, cut:], neg[:, cut:])
        cos_i = dots / (np.sqrt(n2z) * np.sqrt(n2neg))
        cos_t = (dots - dots_tail) / (np.sqrt(n2z - n2z_tail) * np.sqrt(n2neg - n2neg_tail))
        out_i[t] = e1 / (e1 + np.exp(cos_i).sum())
        out_t[t] = e1 / (e1 + np.exp(cos_t).sum())
    return out_i, out_t


def unit_rows(x: np.ndarray) -> tuple[np.ndarray, int]:
    """L2-normalize rows into float64; returns (matrix, first zero-row index or -1)."""
    out = x.astype(np.float64)
    norms = np.sqrt(np.einsum("ij,ij->i", out, out))
    zero = np.flatnonzero(norms == 0.0)
    bad = int(zero[0]) if zero.size else -1
    norms[norms == 0.0] = 1.0
    out /= norms[:, None]
    return out, bad


def cosine_kernel(qn: np.ndarray, gn: np.ndarray) -> np.ndarray:
    out = qn @ gn.T
    np.clip(out, -1.0, 1.0, out=out)
    return out


def retrieve_kernel(qn: np.ndarray, gn: np.ndarray) -> np.ndarray:
    """Highest-cosine gallery index per query row; first occurrence wins ties."""
    n = qn.shape[0]
    out = np.empty(n, dtype=np.int64)
    for start in range(0, n, _RETRIEVE_CHUNK):
        stop = min(start + _RETRIEVE_CHUNK, n)
        sims = qn[start:stop] @ gn.T
        out[start:stop] = np.argmax(sims, axis=1)
    return out
