"""Generic retrieval probe: argmax-cosine over a gallery, scored by group.

One parameterized computation covers text-side retrieval (groups = caption
positions), image-side retrieval (groups = size roles), and the image-to-text
variant (gallery = object-name embeddings). Candidates are always the full
gallery; retrieving an object outside the query counts as a miss, and
per-group rates are reported conditionally on hits.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Mapping, Sequence

from .errors import ConfigError
from .forge import CaptionSpec, SceneSpec
from .store import EmbeddingStore, retrieve_indices


@dataclass(frozen=True)
class ProbeTask:
    query_store: EmbeddingStore
    gallery_store: EmbeddingStore
    gallery_object_of: Mapping[str, str]
    query_groups: Mapping[str, Sequence[tuple[str, str]]]  # id -> [(object, group key)]

    def validate(self) -> None:
        if len(self.gallery_store) == 0:
            raise ConfigError("gallery store is empty")
        for gid in self.gallery_store.ids:
            if gid not in self.gallery_object_of:
                raise ConfigError(f"gallery id {gid!r} has no object mapping")
        for qid in self.query_store.ids:
            groups = self.query_groups.get(qid)
            if not groups:
                raise ConfigError(f"query {qid!r} has an empty group list")
            objs = [o for o, _ in groups]
            keys = [k for _, k in groups]
            if len(set(objs)) != len(objs):
                raise ConfigError(f"query {qid!r} repeats an object")
            if len(set(keys)) != len(keys):
                raise ConfigError(f"query {qid!r} repeats a group key")


@dataclass(frozen=True)
class GroupStat:
    count: int
    rate: float  # conditional on hits


@dataclass(frozen=True)
class ProbeReport:
    n_queries: int
    hit_rate: float
    miss_count: int
    per_group: dict[str, GroupStat]

    def to_json_dict(self) -> dict:
        return {
            "n_queries": self.n_queries,
            "hit_rate": self.hit_rate,
            "miss_count": self.miss_count,
            "per_group": {k: {"count": v.count, "rate": v.rate} for k, v in self.per_group.items()},
        }

    @classmethod
    def from_json_dict(cls, payload: dict) -> "ProbeReport":
        per_group = {
            k: GroupStat(int(v["count"]), float(v["rate"])) for k, v in payload["per_group"].items()
        }
        return cls(int(payload["n_queries"]), float(payload["hit_rate"]), int(payload["miss_count"]), per_group)


def run_probe(task: ProbeTask) -> ProbeReport:
    """Score every query against the full gallery.

    The retrieved object is the argmax-cosine gallery entry (lowest index on
    ties). Hits are attributed to the matching group; anything else is a miss.
    """
    task.validate()
    if len(task.query_store) == 0:
        raise ValueError("no queries to probe")
    counts: dict[str, int] = {}
    for qid in task.query_store.ids:  # group universe in first-seen order
        for _, key in task.query_groups[qid]:
            counts.setdefault(key, 0)
    indices = retrieve_indices(task.query_store, task.gallery_store)
    miss = 0
    for pos, qid in enumerate(task.query_store.ids):
        retrieved = task.gallery_object_of[task.gallery_store.ids[int(indices[pos])]]
        key = next((k for obj, k in task.query_groups[qid] if obj == retrieved), None)
        if key is None:
            miss += 1
        else:
            counts[key] += 1
    n = len(task.query_store)
    hits = n - miss
    per_group = {
        key: GroupStat(c, (c / hits) if hits else 0.0) for key, c in counts.items()
    }
    return ProbeReport(n, 1.0 - miss / n, miss, per_group)


def sweep_stores(tasks: Sequence[tuple[str, ProbeTask]]) -> list[tuple[str, ProbeReport]]:
    """run_probe over an ordered task list; failures carry the task label."""
    if not tasks:
        raise ValueError("sweep needs at least one task")
    out = []
    for label, task in tasks:
        try:
            out.append((label, run_probe(task)))
        except Exception as exc:
            raise type(exc)(f"[{label}] {exc}") from exc
    return out


# ---------------------------------------------------------------------------
# task builders for the standard probes
# ---------------------------------------------------------------------------


def position_groups(captions: Sequence[CaptionSpec]) -> dict[str, list[tuple[str, str]]]:
    return {
        c.caption_id: [(obj, f"pos{i + 1}") for i, obj in enumerate(c.objects)] for c in captions
    }


def size_role_groups(scenes: Sequence[SceneSpec]) -> dict[str, list[tuple[str, str]]]:
    groups: dict[str, list[tuple[str, str]]] = {}
    for scene in scenes:
        small_ix = 0
        entry = []
        for placement in scene.ordered():
            if placement.role == "large":
                entry.append((placement.object, "large"))
            else:
                small_ix += 1
                entry.append((placement.object, f"small_{small_ix}"))
        groups[scene.image_id] = entry
    return groups


def identity_gallery_map(gallery: EmbeddingStore) -> dict[str, str]:
    """For galleries whose record ids are the object names themselves."""
    return {gid: gid for gid in gallery.ids}


def tor_task(
    query_store: EmbeddingStore,
    gallery_store: EmbeddingStore,
    captions: Sequence[CaptionSpec],
    gallery_object_of: Mapping[str, str] | None = None,
) -> ProbeTask:
    return ProbeTask(
        query_store,
        gallery_store,
        dict(gallery_object_of) if gallery_object_of else identity_gallery_map(gallery_store),
        position_groups(captions),
    )


def ior_task(
    query_store: EmbeddingStore,
    gallery_store: EmbeddingStore,
    scenes: Sequence[SceneSpec],
    gallery_object_of: Mapping[str, str] | None = None,
) -> ProbeTask:
    return ProbeTask(
        query_store,
        gallery_store,
        dict(gallery_object_of) if gallery_object_of else identity_gallery_map(gallery_store),
        size_role_groups(scenes),
    )


def report_to_csv_row(label: str, report: ProbeReport, group_order: Sequence[str]) -> list[str]:
    row = [label, str(report.n_queries), f"{100.0 * report.hit_rate:.2f}"]
    for key in group_order:
        stat = report.per_group.get(key)
        row.append(f"{100.0 * stat.rate:.2f}" if stat else "")
    return row


def reports_to_csv(reports: Sequence[tuple[str, ProbeReport]]) -> str:
    """Comparison table: one row per store/model, one column per group."""
    group_order: list[str] = []
    for _, rep in reports:
        for key in rep.per_group:
            if key not in group_order:
                group_order.append(key)
    lines = [",".join(["store", "n_queries", "hit_rate_pct", *group_order])]
    for label, rep in reports:
        lines.append(",".join(report_to_csv_row(label, rep, group_order)))
    return "\n".join(lines) + "\n"


def report_to_json(label: str, report: ProbeReport) -> str:
    return json.dumps({"store": label, **report.to_json_dict()}, indent=2) + "\n"
