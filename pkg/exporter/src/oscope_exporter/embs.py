"""EMBS store writing and manifest reading (the interchange formats).

Binary layout (little-endian): magic ``EMBS``, version u8=1, modality u8
(0=text, 1=image), flags u8 (bit0 = normalized), dim u32, count u64,
model_id u16-length + UTF-8, then per record id u16-length + UTF-8 and
dim float32 values.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

MAGIC = b"EMBS"
VERSION = 1
MODALITY_CODE = {"text": 0, "image": 1}

_HEADER = struct.Struct("<4sBBBIQ")
_U16 = struct.Struct("<H")


def store_bytes(
    model_id: str,
    modality: str,
    ids: list[str],
    vectors: np.ndarray,
    normalized: bool = True,
) -> bytes:
    vectors = np.ascontiguousarray(vectors, dtype=np.float32)
    if vectors.ndim != 2 or vectors.shape[0] != len(ids):
        raise ValueError(f"vector block {vectors.shape} does not match {len(ids)} ids")
    if not np.all(np.isfinite(vectors)):
        raise ValueError("non-finite embedding component")
    dim = vectors.shape[1]
    parts = [_HEADER.pack(MAGIC, VERSION, MODALITY_CODE[modality], 1 if normalized else 0, dim, len(ids))]
    raw_model = model_id.encode("utf-8")
    parts.append(_U16.pack(len(raw_model)))
    parts.append(raw_model)
    for rid, row in zip(ids, vectors):
        raw = rid.encode("utf-8")
        parts.append(_U16.pack(len(raw)))
        parts.append(raw)
        parts.append(row.astype("<f4").tobytes())
    return b"".join(parts)


def write_store(path: str | Path, *args, **kwargs) -> None:
    Path(path).write_bytes(store_bytes(*args, **kwargs))


def read_caption_manifest(path: str | Path) -> list[dict]:
    """Caption lines: {"caption_id", "objects", "template", "text"}."""
    out = []
    for line in Path(path).read_text("utf-8").splitlines():
        if line.strip():
            out.append(json.loads(line))
    return out


def read_scene_manifest(path: str | Path) -> list[dict]:
    """Scene lines: {"image_id", "placements": [{"object", "role", "slot"}]}."""
    out = []
    for line in Path(path).read_text("utf-8").splitlines():
        if line.strip():
            out.append(json.loads(line))
    return out
