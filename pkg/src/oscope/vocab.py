"""Object vocabularies with size classes.

Three vocabularies ship as data files: the 90-object COCO-derived set, the
17-object geometric set, and the size-classed DomainNet set. Names must be
unique and must never contain the conjunction separator ``" and "``; that
keeps caption splitting and joining exactly inverse to each other.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

SIZE_CLASSES = ("small", "medium", "large", "unspecified")
BUILTIN = ("comco", "simco", "domainnet")
SEPARATOR = " and "


@dataclass(frozen=True)
class Vocabulary:
    name: str
    entries: tuple[tuple[str, str], ...]  # (object_name, size_class)

    def __post_init__(self):
        seen = set()
        for obj, size in self.entries:
            if not obj:
                raise ValueError("empty object name")
            if SEPARATOR in obj:
                raise ValueError(f"object name {obj!r} contains the caption separator")
            if size not in SIZE_CLASSES:
                raise ValueError(f"{obj!r}: unknown size class {size!r}")
            if obj in seen:
                raise ValueError(f"duplicate object {obj!r}")
            seen.add(obj)

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def objects(self) -> tuple[str, ...]:
        return tuple(obj for obj, _ in self.entries)

    def by_size(self, size_class: str) -> tuple[str, ...]:
        return tuple(obj for obj, size in self.entries if size == size_class)

    def __contains__(self, obj: str) -> bool:
        return obj in set(self.objects)


def _from_payload(payload: dict) -> Vocabulary:
    entries = tuple((e["object"], e.get("size_class", "unspecified")) for e in payload["entries"])
    return Vocabulary(payload["name"], entries)


def load_vocabulary(name_or_path: str | Path) -> Vocabulary:
    """Load a built-in vocabulary by name, or any vocabulary JSON by path."""
    key = str(name_or_path)
    if key in BUILTIN:
        data = resources.files("oscope.data").joinpath(f"{key}.json").read_text("utf-8")
    else:
        data = Path(name_or_path).read_text("utf-8")
    return _from_payload(json.loads(data))


def default_long_fillers() -> tuple[str, ...]:
    """Filler phrases for the long caption template (configuration data)."""
    data = resources.files("oscope.data").joinpath("long_fillers.json").read_text("utf-8")
    return tuple(json.loads(data)["fillers"])
