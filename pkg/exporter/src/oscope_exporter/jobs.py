"""Export jobs: manifests in, EMBS stores and attention records out."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from . import ExportError, __version__
from .embs import read_caption_manifest, read_scene_manifest, write_store
from .masks import patch_assignment, read_mask_records
from .models import ClipBackend


@dataclass(frozen=True)
class ExportJob:
    checkpoint_id: str
    manifest: Path
    out_path: Path
    modality: str  # text | image
    image_dir: Path | None = None  # rendered images, <image_id>.png
    masks: Path | None = None  # pixel-label grids for attention export
    batch_size: int = 64
    device: str = "cpu"

    def __post_init__(self):
        if self.modality not in ("text", "image"):
            raise ValueError(f"unknown modality {self.modality!r}")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


def _unit_rows(x: np.ndarray) -> np.ndarray:
    x = x.astype(np.float64)
    norms = np.linalg.norm(x, axis=1, keepdims=True)
    if np.any(norms == 0):
        raise ExportError("encoder produced a zero embedding")
    return (x / norms).astype(np.float32)


def _with_backoff(fn, batch_size: int):
    """Halve the batch size on OOM until it reaches 1, then give up."""
    size = batch_size
    while True:
        try:
            return fn(size)
        except torch.cuda.OutOfMemoryError as exc:
            if size <= 1:
                raise ExportError(f"out of memory even at batch size 1: {exc}") from exc
            size = max(1, size // 2)
        except RuntimeError as exc:
            if "out of memory" not in str(exc).lower():
                raise
            if size <= 1:
                raise ExportError(f"out of memory even at batch size 1: {exc}") from exc
            size = max(1, size // 2)


def _image_paths(ids: list[str], image_dir: Path | None) -> list[Path]:
    if image_dir is None:
        raise ExportError("image modality needs --image-dir with <image_id>.png files")
    paths = []
    for image_id in ids:
        path = Path(image_dir) / f"{image_id}.png"
        if not path.is_file():
            raise ExportError(f"missing rendered image {path}")
        paths.append(path)
    return paths


def export_embeddings(job: ExportJob, backend: ClipBackend | None = None) -> Path:
    """Encode every manifest entry; records keep manifest order, vectors unit-norm."""
    backend = backend or ClipBackend.from_checkpoint(job.checkpoint_id, job.device)
    if job.modality == "text":
        entries = read_caption_manifest(job.manifest)
        ids = [e["caption_id"] for e in entries]
        texts = [e["text"] for e in entries]
        feats = _with_backoff(lambda bs: backend.encode_texts(texts, bs), job.batch_size)
    else:
        entries = read_scene_manifest(job.manifest)
        ids = [e["image_id"] for e in entries]
        paths = _image_paths(ids, job.image_dir)
        feats = _with_backoff(lambda bs: backend.encode_images(paths, bs), job.batch_size)
    vectors = _unit_rows(feats) if len(ids) else feats.astype(np.float32)
    write_store(job.out_path, backend.checkpoint_id, job.modality, ids, vectors, normalized=True)
    return job.out_path


def export_attention(job: ExportJob, backend: ClipBackend | None = None) -> Path:
    """CLS-to-patch attention records with per-object patch assignments."""
    backend = backend or ClipBackend.from_checkpoint(job.checkpoint_id, job.device)
    if job.masks is None:
        raise ExportError("attention export needs --masks with per-image label grids")
    entries = read_scene_manifest(job.manifest)
    ids = [e["image_id"] for e in entries]
    paths = _image_paths(ids, job.image_dir)
    masks = read_mask_records(job.masks)
    attention = _with_backoff(lambda bs: backend.cls_patch_attention(paths, bs), job.batch_size)
    grid = backend.patch_grid
    lines = [
        json.dumps(
            {
                "meta": {
                    "checkpoint": backend.checkpoint_id,
                    "aggregation": "final-block CLS attention, head-averaged",
                    "patch_grid": grid,
                    "exporter_version": __version__,
                }
            }
        )
    ]
    for image_id, row in zip(ids, attention):
        if image_id not in masks:
            raise ExportError(f"no mask record for image {image_id!r}")
        pixel_grid, labels = masks[image_id]
        assignment = patch_assignment(pixel_grid, labels, grid)
        lines.append(
            json.dumps(
                {
                    "image_id": image_id,
                    "cls_attention": [float(a) for a in row],
                    "object_patches": {k: sorted(v) for k, v in sorted(assignment.items())},
                },
                ensure_ascii=False,
            )
        )
    Path(job.out_path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    return job.out_path
