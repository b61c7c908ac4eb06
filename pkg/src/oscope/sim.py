"""Monte Carlo verification of the contrastive-objective limit.

For latent dimension d, batch negatives b and truncation k, each trial draws
z and b independent copies from the latent distribution and evaluates

    value = e / (e + sum_j exp(cos(enc(z), enc(z'_j))))

with enc either the identity (ideal) or the first-(d-k)-coordinates
projection applied to both sides (truncated). Both encoder variants are
evaluated on the same draws, so k=0 reproduces the ideal values exactly and
the analytic limit e/(e+b) can be checked for both at once.

Also hosts a toy contrastive trainer: a learnable per-position pooling
vector over fixed object bases, trained on synthetic pairs whose images
over-weight the largest object while captions mention it first with a
configurable probability. Its first-position retrieval rate over training
steps is the desk-scale analogue of bias growth across checkpoints.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _kernels
from .errors import TrainingError

LATENTS = ("gaussian", "rademacher")
E = math.e


@dataclass(frozen=True)
class SimConfig:
    d: int
    k: int
    b: int
    trials: int
    seed: int
    latent: str = "gaussian"
    partition_size: int = 64  # trials per RNG partition; fixed so threading can never matter

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("d must be >= 1")
        if not 0 <= self.k < self.d:
            raise ValueError("k must satisfy 0 <= k < d")
        if self.b < 1:
            raise ValueError("b must be >= 1")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.latent not in LATENTS:
            raise ValueError(f"unknown latent {self.latent!r}")
        if self.partition_size < 1:
            raise ValueError("partition_size must be >= 1")


@dataclass(frozen=True)
class SimEstimate:
    mean: float
    std_error: float
    analytic_limit: float


def analytic_limit(b: int) -> float:
    """The large-d value of the objective: e / (e + b)."""
    return E / (E + b)


def per_trial_values(cfg: SimConfig) -> tuple[np.ndarray, np.ndarray]:
    """(ideal, truncated) objective values, one pair per trial."""
    ideal = np.empty(cfg.trials, dtype=np.float64)
    trunc = np.empty(cfg.trials, dtype=np.float64)
    rademacher = cfg.latent == "rademacher"
    part = 0
    done = 0
    while done < cfg.trials:
        n = min(cfg.partition_size, cfg.trials - done)
        vi, vt = _kernels.mc_pair_pass(cfg.seed, part, n, cfg.d, cfg.k, cfg.b, rademacher)
        ideal[done : done + n] = vi
        trunc[done : done + n] = vt
        done += n
        part += 1
    return ideal, trunc


def _estimate(values: np.ndarray, b: int) -> SimEstimate:
    mean = float(values.mean())
    se = float(values.std(ddof=1) / math.sqrt(len(values))) if len(values) > 1 else 0.0
    return SimEstimate(mean, se, analytic_limit(b))


def estimate_pair(cfg: SimConfig) -> tuple[SimEstimate, SimEstimate]:
    """(ideal, truncated) estimates from one shared generation pass."""
    vi, vt = per_trial_values(cfg)
    return _estimate(vi, cfg.b), _estimate(vt, cfg.b)


def estimate_objective(cfg: SimConfig, encoder: str = "ideal") -> SimEstimate:
    if encoder not in ("ideal", "truncated"):
        raise ValueError(f"unknown encoder {encoder!r}")
    ei, et = estimate_pair(cfg)
    return ei if encoder == "ideal" else et


def convergence_sweep(
    b: int, k: int, dims: Sequence[int], trials: int, seed: int, latent: str = "gaussian"
) -> list[tuple[int, SimEstimate, SimEstimate]]:
    """Ideal/truncated estimates per dimension; dims must strictly increase."""
    dims = list(dims)
    if not dims:
        raise ValueError("dims must be non-empty")
    if any(b2 <= a for a, b2 in zip(dims, dims[1:])):
        raise ValueError("dims must be strictly increasing")
    out = []
    for d in dims:
        cfg = SimConfig(d=d, k=k, b=b, trials=trials, seed=seed, latent=latent)
        ei, et = estimate_pair(cfg)
        out.append((d, ei, et))
    return out


# ---------------------------------------------------------------------------
# toy contrastive trainer (learned positional pooling)
# ---------------------------------------------------------------------------


def toy_bias_trainer(
    d: int,
    vocab_size: int,
    gamma_data: float,
    steps: int,
    batch: int,
    lr: float,
    seed: int,
    n_positions: int = 4,
    large_scale: float = 3.0,
    eval_captions: int = 1000,
    checkpoint_every: int | None = None,
    token_noise: float = 1.2,
    bias_decay: float = 0.02,
) -> list[tuple[int, float]]:
    """Train positional pooling weights on the contrastive objective.

    Returns (step, first-position retrieval rate) pairs, starting at step 0.
    gamma_data is the probability that the image's dominant (large) object is
    mentioned first in the paired caption; the remaining mass is uniform over
    the other positions.

    Token vectors carry seeded per-sample noise (scale ``token_noise``), so
    retrieval rates vary smoothly with the pooling weights, and the weights'
    deviation from uniform decays by ``bias_decay`` per step: positional bias
    builds up only while the data keeps rewarding it.
    """
    if d < 2 or vocab_size < n_positions or n_positions < 2:
        raise ValueError("need d >= 2 and vocab_size >= n_positions >= 2")
    if not 0.0 < gamma_data <= 1.0:
        raise ValueError("gamma_data must be in (0, 1]")
    if steps < 0 or batch < 2 or lr <= 0:
        raise ValueError("steps must be >= 0, batch >= 2, lr > 0")
    if token_noise < 0 or not 0.0 <= bias_decay < 1.0:
        raise ValueError("token_noise must be >= 0 and bias_decay in [0, 1)")

    rng = np.random.default_rng(np.random.SeedSequence(entropy=(seed, 0xB1A5)))
    bases = rng.standard_normal((vocab_size, d))
    bases /= np.linalg.norm(bases, axis=1, keepdims=True)
    noise_scale = token_noise / math.sqrt(d)

    def sample_batch(gen: np.random.Generator, size: int):
        tokens = np.empty((size, n_positions), dtype=np.int64)
        images = np.empty((size, d), dtype=np.float64)
        for i in range(size):
            objs = gen.choice(vocab_size, size=n_positions, replace=False)
            large = objs[0]
            others = objs[1:]
            if gen.random() < gamma_data:
                pos = 0
            else:
                pos = 1 + int(gen.integers(n_positions - 1))
            order = np.empty(n_positions, dtype=np.int64)
            order[pos] = large
            order[[j for j in range(n_positions) if j != pos]] = others
            tokens[i] = order
            img = large_scale * bases[large] + bases[others].sum(axis=0)
            images[i] = img / np.linalg.norm(img)
        vecs = bases[tokens] + noise_scale * gen.standard_normal((size, n_positions, d))
        return tokens, vecs, images

    eval_gen = np.random.default_rng(np.random.SeedSequence(entropy=(seed, 0xE7A1)))
    eval_tokens = np.empty((eval_captions, n_positions), dtype=np.int64)
    for i in range(eval_captions):
        eval_tokens[i] = eval_gen.choice(vocab_size, size=n_positions, replace=False)
    eval_vecs = bases[eval_tokens] + noise_scale * eval_gen.standard_normal(
        (eval_captions, n_positions, d)
    )

    p = np.ones(n_positions, dtype=np.float64) / n_positions

    def first_position_rate() -> float:
        emb = np.einsum("p,ipd->id", p, eval_vecs)
        emb /= np.linalg.norm(emb, axis=1, keepdims=True)
        top = np.argmax(emb @ bases.T, axis=1)
        return float((top == eval_tokens[:, 0]).mean())

    every = checkpoint_every or max(1, steps // 10)
    series = [(0, first_position_rate())]
    train_gen = np.random.default_rng(np.random.SeedSequence(entropy=(seed, 0x7A11)))
    for step in range(1, steps + 1):
        tokens, token_vecs, images = sample_batch(train_gen, batch)  # vecs: (B, P, d)
        with np.errstate(invalid="ignore", over="ignore"):  # divergence caught explicitly
            u = np.einsum("p,bpd->bd", p, token_vecs)
            norms = np.linalg.norm(u, axis=1, keepdims=True)
            if np.any(norms == 0):
                raise TrainingError(f"step {step}: pooled embedding collapsed to zero")
            t = u / norms
            sims = t @ images.T  # row i: caption i against every image in batch
            sims -= sims.max(axis=1, keepdims=True)
            soft = np.exp(sims)
            soft /= soft.sum(axis=1, keepdims=True)
            sigma = np.diagonal(soft).copy()  # the printed objective, per sample

            # ascent on mean(sigma): coeffs c_ij = sigma_i * ((i==j) - soft_ij)
            coeff = -soft * sigma[:, None]
            coeff[np.arange(batch), np.arange(batch)] += sigma * 1.0
            g_t = coeff @ images  # dObj/dt_i
            g_u = (g_t - (np.einsum("bd,bd->b", g_t, t))[:, None] * t) / norms
            grad_p = np.einsum("bd,bpd->p", g_u, token_vecs) / batch
            if not np.all(np.isfinite(grad_p)):
                raise TrainingError(f"step {step}: non-finite gradient")
            p = p + lr * grad_p
            p = p - bias_decay * (p - p.mean())  # unrewarded positional bias decays
        if not np.all(np.isfinite(p)):
            raise TrainingError(f"step {step}: diverged")
        if step % every == 0 or step == steps:
            series.append((step, first_position_rate()))
    return series


def spearman_rho(values: Sequence[float]) -> float:
    """Spearman correlation of a series against its time index."""
    y = np.asarray(values, dtype=np.float64)
    n = len(y)
    if n < 2:
        raise ValueError("need at least two points")
    order = np.argsort(y, kind="stable")
    ranks = np.empty(n)
    ranks[order] = np.arange(n, dtype=np.float64)
    # average ranks over exact ties
    for val in np.unique(y):
        mask = y == val
        if mask.sum() > 1:
            ranks[mask] = ranks[mask].mean()
    x = np.arange(n, dtype=np.float64)
    xc = x - x.mean()
    yc = ranks - ranks.mean()
    denom = math.sqrt(float(xc @ xc) * float(yc @ yc))
    if denom == 0.0:
        return 0.0
    return float(xc @ yc) / denom
