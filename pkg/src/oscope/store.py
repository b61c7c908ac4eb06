"""Embedding store: bit-exact persistence and the cosine kernel entry points.

Binary layout (little-endian): magic ``EMBS``, version u8=1, modality u8
(0=text, 1=image), flags u8 (bit0 = normalized), dim u32, count u64,
model_id_len u16 + UTF-8 model id, then per record id_len u16 + UTF-8 id +
dim float32 values. The JSONL alternative starts with a header line
``{"embs": 1, ...}`` followed by one ``{"id", "vec"}`` object per line.

Vectors are float32 in memory and on disk; all reductions happen in float64
inside the kernels. Stores are immutable once constructed.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from . import _kernels
from .errors import CorruptError, DimError, DuplicateIdError, FormatError, IoError

MAGIC = b"EMBS"
VERSION = 1
MODALITIES = ("text", "image")
MAX_ID_BYTES = 0xFFFF
NORM_TOL = 1e-6

_HEADER = struct.Struct("<4sBBBIQ")
_U16 = struct.Struct("<H")


@dataclass(frozen=True)
class EmbeddingStore:
    """Ordered, immutable id -> float32 vector collection."""

    model_id: str
    modality: str
    dim: int
    ids: tuple[str, ...]
    vectors: np.ndarray  # (n, dim) float32
    normalized: bool = False
    _index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.modality not in MODALITIES:
            raise ValueError(f"unknown modality {self.modality!r}")
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        vecs = np.ascontiguousarray(self.vectors, dtype=np.float32)
        if vecs.shape != (len(self.ids), self.dim):
            raise ValueError(
                f"vector block {vecs.shape} does not match {len(self.ids)} ids x dim {self.dim}"
            )
        if not np.all(np.isfinite(vecs)):
            raise ValueError("non-finite vector component")
        index: dict[str, int] = {}
        for pos, rid in enumerate(self.ids):
            if rid in index:
                raise DuplicateIdError(f"duplicate id {rid!r}")
            if len(rid.encode("utf-8")) > MAX_ID_BYTES:
                raise ValueError(f"id {rid[:32]!r}... exceeds {MAX_ID_BYTES} bytes")
            index[rid] = pos
        if self.normalized and len(self.ids):
            norms = np.sqrt(np.einsum("ij,ij->i", vecs.astype(np.float64), vecs.astype(np.float64)))
            off = np.abs(norms - 1.0)
            if off.size and off.max() > NORM_TOL:
                bad = self.ids[int(np.argmax(off))]
                raise ValueError(f"store flagged normalized but {bad!r} has norm {norms[np.argmax(off)]:.8f}")
        vecs.setflags(write=False)
        object.__setattr__(self, "vectors", vecs)
        object.__setattr__(self, "ids", tuple(self.ids))
        object.__setattr__(self, "_index", index)

    def __len__(self) -> int:
        return len(self.ids)

    def vector(self, record_id: str) -> np.ndarray:
        """Vector for one id (raises KeyError when absent)."""
        return self.vectors[self._index[record_id]]

    def __contains__(self, record_id: str) -> bool:
        return record_id in self._index

    def records(self) -> Iterator[tuple[str, np.ndarray]]:
        for pos, rid in enumerate(self.ids):
            yield rid, self.vectors[pos]

    @classmethod
    def from_records(
        cls,
        model_id: str,
        modality: str,
        dim: int,
        records: Iterable[tuple[str, Sequence[float]]],
        normalized: bool = False,
    ) -> "EmbeddingStore":
        ids = []
        rows = []
        for rid, vec in records:
            ids.append(rid)
            row = np.asarray(vec, dtype=np.float32)
            if row.shape != (dim,):
                raise ValueError(f"record {rid!r} has {row.shape[0] if row.ndim == 1 else '?'} values, expected {dim}")
            rows.append(row)
        block = np.vstack(rows).astype(np.float32) if rows else np.empty((0, dim), dtype=np.float32)
        return cls(model_id, modality, dim, tuple(ids), block, normalized)


@dataclass(frozen=True)
class SimilarityMatrix:
    """Cosine values between two stores; values[i][j] pairs query i with gallery j."""

    query_ids: tuple[str, ...]
    gallery_ids: tuple[str, ...]
    values: np.ndarray  # (len(query_ids), len(gallery_ids)) float64


def normalize(store: EmbeddingStore) -> EmbeddingStore:
    """Scale every vector to unit L2 norm (float64 arithmetic, float32 result).

    A store already flagged normalized is returned unchanged, which makes the
    operation exactly idempotent.
    """
    if store.normalized:
        return store
    vecs = store.vectors.astype(np.float64)
    norms = np.sqrt(np.einsum("ij,ij->i", vecs, vecs))
    zero = np.flatnonzero(norms == 0.0)
    if zero.size:
        raise ValueError(f"cannot normalize zero vector {store.ids[int(zero[0])]!r}")
    out = (vecs / norms[:, None]).astype(np.float32)
    return EmbeddingStore(store.model_id, store.modality, store.dim, store.ids, out, True)


def _unit_rows(store: EmbeddingStore) -> np.ndarray:
    rows, bad = _kernels.unit_rows(store.vectors)
    if bad >= 0:
        raise ValueError(f"zero vector {store.ids[bad]!r} has no direction")
    return rows


def cosine_matrix(queries: EmbeddingStore, gallery: EmbeddingStore) -> SimilarityMatrix:
    """All pairwise cosines; inputs are re-normalized, so scale never matters."""
    if queries.dim != gallery.dim:
        raise DimError(f"query dim {queries.dim} != gallery dim {gallery.dim}")
    values = _kernels.cosine_kernel(_unit_rows(queries), _unit_rows(gallery))
    return SimilarityMatrix(queries.ids, gallery.ids, values)


def retrieve_indices(queries: EmbeddingStore, gallery: EmbeddingStore) -> np.ndarray:
    """Argmax-cosine gallery index per query; ties take the lowest index."""
    if queries.dim != gallery.dim:
        raise DimError(f"query dim {queries.dim} != gallery dim {gallery.dim}")
    if len(gallery) == 0:
        raise ValueError("empty gallery")
    return _kernels.retrieve_kernel(_unit_rows(queries), _unit_rows(gallery))


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------


def save_store(store: EmbeddingStore, path: str | Path, format: str = "binary") -> None:
    """Write a store; ``binary`` round-trips byte-for-byte, ``jsonl`` by value."""
    path = Path(path)
    try:
        if format == "binary":
            path.write_bytes(_to_binary(store))
        elif format == "jsonl":
            path.write_text(_to_jsonl(store), encoding="utf-8")
        else:
            raise ValueError(f"unknown format {format!r}")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def load_store(path: str | Path) -> EmbeddingStore:
    """Read a store in either format, validating every invariant."""
    path = Path(path)
    try:
        blob = path.read_bytes()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    if blob[:4] == MAGIC:
        return _from_binary(blob)
    return _from_jsonl(blob, path)


def _to_binary(store: EmbeddingStore) -> bytes:
    parts = [
        _HEADER.pack(
            MAGIC,
            VERSION,
            MODALITIES.index(store.modality),
            1 if store.normalized else 0,
            store.dim,
            len(store),
        )
    ]
    model_raw = store.model_id.encode("utf-8")
    if len(model_raw) > MAX_ID_BYTES:
        raise ValueError("model_id exceeds 65535 bytes")
    parts.append(_U16.pack(len(model_raw)))
    parts.append(model_raw)
    for pos, rid in enumerate(store.ids):
        raw = rid.encode("utf-8")
        parts.append(_U16.pack(len(raw)))
        parts.append(raw)
        parts.append(store.vectors[pos].astype("<f4").tobytes())
    return b"".join(parts)


def _from_binary(blob: bytes) -> EmbeddingStore:
    if len(blob) < _HEADER.size:
        raise FormatError("file shorter than the fixed header")
    magic, version, modality_code, flags, dim, count = _HEADER.unpack_from(blob, 0)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}")
    if version != VERSION:
        raise FormatError(f"unsupported version {version}")
    if modality_code not in (0, 1):
        raise FormatError(f"unknown modality code {modality_code}")
    if dim < 1:
        raise FormatError("dim must be >= 1")
    off = _HEADER.size
    off, model_id = _read_str(blob, off, "model id")
    ids: list[str] = []
    rows = np.empty((count, dim), dtype=np.float32)
    vec_bytes = dim * 4
    for i in range(count):
        off, rid = _read_str(blob, off, f"record {i}")
        if off + vec_bytes > len(blob):
            raise CorruptError(f"record {i} ({rid!r}) truncated mid-vector")
        rows[i] = np.frombuffer(blob, dtype="<f4", count=dim, offset=off)
        off += vec_bytes
        ids.append(rid)
    if off != len(blob):
        raise CorruptError(f"{len(blob) - off} trailing bytes after the last record")
    if not np.all(np.isfinite(rows)):
        raise ValueError("non-finite vector component")
    return EmbeddingStore(model_id, MODALITIES[modality_code], dim, tuple(ids), rows, bool(flags & 1))


def _read_str(blob: bytes, off: int, what: str) -> tuple[int, str]:
    if off + 2 > len(blob):
        raise CorruptError(f"truncated before {what} length")
    (n,) = _U16.unpack_from(blob, off)
    off += 2
    if off + n > len(blob):
        raise CorruptError(f"truncated inside {what}")
    return off + n, blob[off : off + n].decode("utf-8")


def _to_jsonl(store: EmbeddingStore) -> str:
    header = {
        "embs": 1,
        "dim": store.dim,
        "modality": store.modality,
        "model_id": store.model_id,
        "normalized": store.normalized,
    }
    lines = [json.dumps(header, ensure_ascii=False)]
    for rid, vec in store.records():
        lines.append(json.dumps({"id": rid, "vec": [float(v) for v in vec]}, ensure_ascii=False))
    return "\n".join(lines) + "\n"


def _from_jsonl(blob: bytes, path: Path) -> EmbeddingStore:
    try:
        text = blob.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise FormatError(f"{path} is neither EMBS binary nor UTF-8 JSONL") from exc
    lines = text.splitlines()
    if not lines:
        raise FormatError(f"{path} is empty")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise FormatError(f"line 1 is not a JSON header: {exc}") from exc
    if not isinstance(header, dict) or header.get("embs") != 1:
        raise FormatError("header line lacks the embs=1 marker")
    try:
        dim = int(header["dim"])
        modality = header["modality"]
        model_id = header["model_id"]
        normalized = bool(header.get("normalized", False))
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"incomplete header: {exc}") from exc
    if modality not in MODALITIES:
        raise FormatError(f"unknown modality {modality!r}")
    ids: list[str] = []
    rows: list[np.ndarray] = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise CorruptError(f"line {lineno}: invalid JSON: {exc}") from exc
        try:
            rid = rec["id"]
            vec = rec["vec"]
        except (KeyError, TypeError) as exc:
            raise CorruptError(f"line {lineno}: record needs id and vec") from exc
        if not isinstance(vec, list) or len(vec) != dim:
            raise CorruptError(
                f"line {lineno}: vector has {len(vec) if isinstance(vec, list) else '?'} values, expected {dim}"
            )
        if not all(isinstance(v, (int, float)) and math.isfinite(v) for v in vec):
            raise ValueError(f"line {lineno}: non-finite vector component")
        ids.append(rid)
        rows.append(np.asarray(vec, dtype=np.float32))
    block = np.vstack(rows) if rows else np.empty((0, dim), dtype=np.float32)
    return EmbeddingStore(model_id, modality, dim, tuple(ids), block, normalized)
