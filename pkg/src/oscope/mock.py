"""Deterministic mock encoders with controllable positional and size bias.

Text embeddings are position-decayed bags of per-object basis vectors,
image embeddings are size-weighted bags. Two optional imperfection knobs
exist because the clean construction is *too* clean to exercise downstream
failure modes (it solves every matching trial exactly):

* ``text_keep`` drops caption tokens after the first k mentions, the
  incomplete-representation behavior real text encoders converge to;
* ``text_pos_jitter`` / ``image_weight_jitter`` apply deterministic
  log-normal jitter to per-token weights, spreading retrieval outcomes
  over positions the way real models spread them.

Both default off, in which case the embeddings are exactly the documented
closed forms. Everything is a pure function of (config, input): the hash
of the sample content seeds any pseudo-randomness.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .forge import CaptionSpec, SceneSpec
from .store import EmbeddingStore
from .vocab import Vocabulary


@dataclass(frozen=True)
class MockEncoderConfig:
    dim: int
    seed: int
    text_decay: float = 1.0  # gamma; 1.0 = order-invariant bag
    image_size_exponent: float = 1.0  # beta
    text_keep: int | None = None  # keep only the first k mentions
    text_pos_jitter: float = 0.0
    image_weight_jitter: float = 0.0

    def __post_init__(self):
        if self.dim < 8:
            raise ValueError("dim must be >= 8")
        if not 0.0 < self.text_decay <= 1.0:
            raise ValueError("text_decay must be in (0, 1]")
        if self.image_size_exponent < 0:
            raise ValueError("image_size_exponent must be >= 0")
        if self.text_keep is not None and self.text_keep < 1:
            raise ValueError("text_keep must be >= 1 when set")
        if self.text_pos_jitter < 0 or self.image_weight_jitter < 0:
            raise ValueError("jitter scales must be >= 0")


def _hash_rng(seed: int, *parts: str) -> np.random.Generator:
    digest = hashlib.sha256(":".join([str(seed), *parts]).encode("utf-8")).digest()
    return np.random.default_rng(int.from_bytes(digest[:8], "little"))


@lru_cache(maxsize=65536)
def _basis_cached(dim: int, seed: int, name: str) -> np.ndarray:
    v = _hash_rng(seed, "basis", name).standard_normal(dim)
    v /= np.linalg.norm(v)
    v.setflags(write=False)
    return v


def object_basis(cfg: MockEncoderConfig, object_name: str) -> np.ndarray:
    """Seeded unit vector for an object; shared by all encoders of one (dim, seed)."""
    return _basis_cached(cfg.dim, cfg.seed, object_name)


def _jitter(cfg: MockEncoderConfig, kind: str, content_key: str, i: int, scale: float) -> float:
    if scale == 0.0:
        return 1.0
    z = float(_hash_rng(cfg.seed, kind, content_key, str(i)).standard_normal())
    return float(np.exp(scale * z))


def encode_text_mock(
    cfg: MockEncoderConfig, caption: CaptionSpec, vocab: Vocabulary | None = None
) -> np.ndarray:
    """normalize(sum_i gamma^i * basis(obj_i)) over the kept mentions (float64)."""
    if vocab is not None:
        for obj in caption.objects:
            if obj not in vocab:
                raise ValueError(f"unknown object {obj!r} for vocabulary {vocab.name!r}")
    keep = len(caption.objects) if cfg.text_keep is None else min(cfg.text_keep, len(caption.objects))
    if keep == 1:
        return object_basis(cfg, caption.objects[0]).copy()  # scale cancels under normalization
    acc = np.zeros(cfg.dim, dtype=np.float64)
    for i, obj in enumerate(caption.objects[:keep]):
        w = cfg.text_decay**i * _jitter(cfg, "tjit", caption.text, i, cfg.text_pos_jitter)
        acc += w * object_basis(cfg, obj)
    norm = np.linalg.norm(acc)
    if norm == 0.0:
        raise ValueError(f"caption {caption.caption_id!r} produced a zero embedding")
    return acc / norm


def _scene_key(scene: SceneSpec) -> str:
    return "|".join(f"{p.slot}:{p.role}:{p.object}" for p in scene.ordered())


def encode_image_mock(cfg: MockEncoderConfig, scene: SceneSpec, large_scale: float = 3.0) -> np.ndarray:
    """normalize(sum_j w_j * basis(obj_j)), w = large_scale^beta on the large role."""
    if large_scale <= 1.0:
        raise ValueError("large_scale must be > 1")
    placements = scene.ordered()
    if len(placements) == 1:
        return object_basis(cfg, placements[0].object).copy()
    key = _scene_key(scene)
    acc = np.zeros(cfg.dim, dtype=np.float64)
    for j, placement in enumerate(scene.ordered()):
        w = large_scale**cfg.image_size_exponent if placement.role == "large" else 1.0
        w *= _jitter(cfg, "ijit", key, j, cfg.image_weight_jitter)
        acc += w * object_basis(cfg, placement.object)
    norm = np.linalg.norm(acc)
    if norm == 0.0:
        raise ValueError(f"scene {scene.image_id!r} produced a zero embedding")
    return acc / norm


# ---------------------------------------------------------------------------
# store materialization
# ---------------------------------------------------------------------------


def _text_model_id(cfg: MockEncoderConfig) -> str:
    extras = []
    if cfg.text_keep is not None:
        extras.append(f"keep{cfg.text_keep}")
    if cfg.text_pos_jitter:
        extras.append(f"jit{cfg.text_pos_jitter:g}")
    tail = ("-" + "-".join(extras)) if extras else ""
    return f"mock-text-g{cfg.text_decay:g}-d{cfg.dim}-s{cfg.seed}{tail}"


def _image_model_id(cfg: MockEncoderConfig, large_scale: float) -> str:
    tail = f"-jit{cfg.image_weight_jitter:g}" if cfg.image_weight_jitter else ""
    return f"mock-image-b{cfg.image_size_exponent:g}-x{large_scale:g}-d{cfg.dim}-s{cfg.seed}{tail}"


def encode_captions(
    cfg: MockEncoderConfig, captions: list[CaptionSpec], vocab: Vocabulary | None = None
) -> EmbeddingStore:
    records = [(c.caption_id, encode_text_mock(cfg, c, vocab)) for c in captions]
    return EmbeddingStore.from_records(_text_model_id(cfg), "text", cfg.dim, records, normalized=True)


def encode_scenes(
    cfg: MockEncoderConfig, scenes: list[SceneSpec], large_scale: float = 3.0
) -> EmbeddingStore:
    records = [(s.image_id, encode_image_mock(cfg, s, large_scale)) for s in scenes]
    return EmbeddingStore.from_records(
        _image_model_id(cfg, large_scale), "image", cfg.dim, records, normalized=True
    )


def basis_store(cfg: MockEncoderConfig, names: list[str], modality: str) -> EmbeddingStore:
    """Single-object gallery (one basis vector per name, id = object name)."""
    model = _text_model_id(cfg) if modality == "text" else f"mock-image-basis-d{cfg.dim}-s{cfg.seed}"
    records = [(n, object_basis(cfg, n)) for n in names]
    return EmbeddingStore.from_records(model, modality, cfg.dim, records, normalized=True)
