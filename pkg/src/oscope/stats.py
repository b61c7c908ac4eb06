"""Dataset-statistics analyses over externally produced records.

Inputs are JSONL so any extraction pipeline (LLM object extraction,
segmentation, object detection) can feed the analyzers; only the downstream
statistics live here. All outputs are proper distributions or rate maps.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence


@dataclass(frozen=True)
class AnalysisRecord:
    """Objects of one sample in caption mention order, with pixel (or normalized) areas."""

    sample_id: str
    objects: tuple[tuple[str, float], ...]  # (name, area)

    def __post_init__(self):
        if not self.objects:
            raise ValueError(f"{self.sample_id}: record needs at least one object")
        for name, area in self.objects:
            if area < 0:
                raise ValueError(f"{self.sample_id}: negative area for {name!r}")


@dataclass(frozen=True)
class AttentionRecord:
    image_id: str
    cls_attention: tuple[float, ...]
    object_patches: dict[str, tuple[int, ...]]


@dataclass(frozen=True)
class DetectionRecord:
    prompt_id: str
    prompt_objects: tuple[str, ...]
    detected: frozenset[str]


def largest_position_histogram(
    records: Sequence[AnalysisRecord], n_objects_filter: int | None = None
) -> dict[int, float]:
    hist, _ = largest_position_histogram_with_meta(records, n_objects_filter)
    return hist


def largest_position_histogram_with_meta(
    records: Sequence[AnalysisRecord], n_objects_filter: int | None = None
) -> tuple[dict[int, float], dict]:
    """Distribution of the largest object's 1-based mention position.

    Zero-area objects (failed segmentations) are dropped; a record that lost
    objects this way is kept only when at least two survive. Ties on area take
    the earliest position. Fractions sum to 1 within 1e-9.
    """
    if n_objects_filter is not None:
        records = [r for r in records if len(r.objects) == n_objects_filter]
    if not records:
        raise ValueError("no records to analyze (after filtering)")
    counts: dict[int, int] = {}
    used = 0
    dropped_objects = 0
    skipped_records = 0
    for rec in records:
        surviving = [(name, area) for name, area in rec.objects if area > 0.0]
        lost = len(rec.objects) - len(surviving)
        dropped_objects += lost
        if lost and len(surviving) < 2:
            skipped_records += 1
            continue
        if not surviving:
            skipped_records += 1
            continue
        areas = [area for _, area in surviving]
        pos = areas.index(max(areas)) + 1  # earliest position wins ties
        counts[pos] = counts.get(pos, 0) + 1
        used += 1
    if used == 0:
        raise ValueError("every record was skipped (zero-area objects)")
    hist = {pos: counts[pos] / used for pos in sorted(counts)}
    meta = {
        "records_used": used,
        "records_skipped": skipped_records,
        "zero_area_objects_dropped": dropped_objects,
    }
    return hist, meta


def attention_shares(record: AttentionRecord) -> tuple[dict[str, float], float]:
    """Per-object share of total CLS attention plus the background share."""
    attention = record.cls_attention
    total = float(sum(attention))
    if any(a < 0 for a in attention):
        raise ValueError(f"{record.image_id}: negative attention mass")
    if total <= 0.0:
        raise ValueError(f"{record.image_id}: all-zero attention")
    seen: dict[int, str] = {}
    shares: dict[str, float] = {}
    for name, patches in record.object_patches.items():
        mass = 0.0
        for ix in patches:
            if not 0 <= ix < len(attention):
                raise ValueError(f"{record.image_id}: patch index {ix} out of range")
            if ix in seen:
                raise ValueError(
                    f"{record.image_id}: patch {ix} assigned to both {seen[ix]!r} and {name!r}"
                )
            seen[ix] = name
            mass += attention[ix]
        shares[name] = mass / total
    background = 1.0 - sum(shares.values())
    return shares, background


def presence_by_position(records: Sequence[DetectionRecord]) -> dict[int, float]:
    """Fraction of prompts whose p-th object was detected; prompts must share one length."""
    if not records:
        raise ValueError("no detection records")
    lengths = {len(r.prompt_objects) for r in records}
    if len(lengths) != 1:
        raise ValueError(
            f"ragged prompt lengths {sorted(lengths)}; group records by length first"
        )
    n = lengths.pop()
    rates = {}
    for p in range(n):
        hits = sum(1 for r in records if r.prompt_objects[p] in r.detected)
        rates[p + 1] = hits / len(records)
    return rates


def presence_by_position_grouped(
    records: Sequence[DetectionRecord],
) -> dict[int, dict[int, float]]:
    by_len: dict[int, list[DetectionRecord]] = {}
    for r in records:
        by_len.setdefault(len(r.prompt_objects), []).append(r)
    return {n: presence_by_position(group) for n, group in sorted(by_len.items())}


# ---------------------------------------------------------------------------
# JSONL record readers/writers
# ---------------------------------------------------------------------------


def read_analysis_records(path: str | Path) -> list[AnalysisRecord]:
    out = []
    for line in Path(path).read_text("utf-8").splitlines():
        if not line.strip():
            continue
        rec = json.loads(line)
        out.append(
            AnalysisRecord(
                rec["sample_id"],
                tuple((o["name"], float(o["area"])) for o in rec["objects"]),
            )
        )
    return out


def write_analysis_records(records: Iterable[AnalysisRecord], path: str | Path) -> None:
    lines = [
        json.dumps(
            {"sample_id": r.sample_id, "objects": [{"name": n, "area": a} for n, a in r.objects]},
            ensure_ascii=False,
        )
        for r in records
    ]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


def read_attention_records(path: str | Path) -> list[AttentionRecord]:
    out = []
    for line in Path(path).read_text("utf-8").splitlines():
        if not line.strip():
            continue
        rec = json.loads(line)
        if "image_id" not in rec:  # permit a metadata header line
            continue
        out.append(
            AttentionRecord(
                rec["image_id"],
                tuple(float(a) for a in rec["cls_attention"]),
                {k: tuple(int(i) for i in v) for k, v in rec["object_patches"].items()},
            )
        )
    return out


def read_detection_records(path: str | Path) -> list[DetectionRecord]:
    out = []
    for line in Path(path).read_text("utf-8").splitlines():
        if not line.strip():
            continue
        rec = json.loads(line)
        out.append(
            DetectionRecord(
                rec["prompt_id"], tuple(rec["prompt_objects"]), frozenset(rec["detected"])
            )
        )
    return out


def write_detection_records(records: Iterable[DetectionRecord], path: str | Path) -> None:
    lines = [
        json.dumps(
            {
                "prompt_id": r.prompt_id,
                "prompt_objects": list(r.prompt_objects),
                "detected": sorted(r.detected),
            },
            ensure_ascii=False,
        )
        for r in records
    ]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
