"""Deterministic caption and scene generation.

Short captions join object names with `` and ``; the long template threads
configurable filler phrases after each mention. Scenes place distinct
objects into slots with exactly one large role. Everything is seeded and
replayable: the same inputs always produce the same manifests.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import UnsupportedError
from .vocab import SEPARATOR, Vocabulary, default_long_fillers

TEMPLATES = ("short", "long")
SIZE_ROLES = ("large", "small")
MAX_OBJECTS = 8


@dataclass(frozen=True)
class CaptionSpec:
    caption_id: str
    objects: tuple[str, ...]
    template: str
    text: str

    def __post_init__(self):
        if not 1 <= len(self.objects) <= MAX_OBJECTS:
            raise ValueError(f"{self.caption_id}: {len(self.objects)} objects outside 1..{MAX_OBJECTS}")
        if self.template not in TEMPLATES:
            raise ValueError(f"unknown template {self.template!r}")


@dataclass(frozen=True)
class Placement:
    object: str
    role: str  # large | small
    slot: int

    def __post_init__(self):
        if self.role not in SIZE_ROLES:
            raise ValueError(f"unknown size role {self.role!r}")


@dataclass(frozen=True)
class SceneSpec:
    image_id: str
    placements: tuple[Placement, ...]

    def __post_init__(self):
        slots = [p.slot for p in self.placements]
        if len(set(slots)) != len(slots):
            raise ValueError(f"{self.image_id}: slot indices not unique")

    def ordered(self) -> tuple[Placement, ...]:
        return tuple(sorted(self.placements, key=lambda p: p.slot))

    def objects_in_slot_order(self) -> tuple[str, ...]:
        return tuple(p.object for p in self.ordered())

    def large_object(self) -> str:
        large = [p.object for p in self.placements if p.role == "large"]
        if len(large) != 1:
            raise ValueError(f"{self.image_id}: expected exactly one large placement, found {len(large)}")
        return large[0]


@dataclass(frozen=True)
class ScenarioPair:
    image_id: str
    correct: CaptionSpec
    incorrect: CaptionSpec
    scenario: str  # one | two
    absent_object: str


def caption_text(objects: Sequence[str], template: str, long_fillers: Sequence[str] | None = None) -> str:
    if template == "short":
        return SEPARATOR.join(objects)
    fillers = tuple(long_fillers) if long_fillers else default_long_fillers()
    if not fillers:
        raise ValueError("long template requires at least one filler phrase")
    pieces = []
    for i, obj in enumerate(objects):
        pieces.append(obj)
        pieces.append(fillers[i % len(fillers)])  # fillers cycle when shorter
    return " ".join(pieces)


def make_caption(
    objects: Sequence[str],
    template: str = "short",
    long_fillers: Sequence[str] | None = None,
    caption_id: str | None = None,
) -> CaptionSpec:
    """Build a caption whose text is a pure function of (objects, template)."""
    objects = tuple(objects)
    if not objects:
        raise ValueError("caption needs at least one object")
    text = caption_text(objects, template, long_fillers)
    return CaptionSpec(caption_id or text, objects, template, text)


def permute_first(objects: Sequence[str], first_index: int) -> tuple[str, ...]:
    """Move the chosen object to the front, keeping the rest in order."""
    objects = tuple(objects)
    if not 0 <= first_index < len(objects):
        raise IndexError(f"first_index {first_index} out of range for {len(objects)} objects")
    return (objects[first_index],) + objects[:first_index] + objects[first_index + 1 :]


def split_caption(caption: CaptionSpec) -> list[CaptionSpec]:
    """One single-object caption per mention, in mention order."""
    if caption.template != "short":
        raise UnsupportedError("splitting is defined only for the conjunction template")
    return [
        CaptionSpec(f"{caption.caption_id}/{i}", (obj,), "short", obj)
        for i, obj in enumerate(caption.objects)
    ]


def make_scenario_pair(scene: SceneSpec, absent: str, scenario: str) -> ScenarioPair:
    """Correct/incorrect caption pair for the two matching scenarios.

    Scenario one puts the large object (resp. the absent substitute) first;
    scenario two puts it last. The incorrect caption always differs from the
    correct one by that single substitution.
    """
    if scenario not in ("one", "two"):
        raise ValueError(f"unknown scenario {scenario!r}")
    ordered = scene.objects_in_slot_order()
    if absent in ordered:
        raise ValueError(f"absent object {absent!r} is present in scene {scene.image_id}")
    large = scene.large_object()
    rest = tuple(o for o in ordered if o != large)
    if scenario == "one":
        correct_objs = (large,) + rest
        incorrect_objs = (absent,) + rest
    else:
        correct_objs = rest + (large,)
        incorrect_objs = rest + (absent,)
    correct = make_caption(correct_objs, "short", caption_id=f"{scene.image_id}-s{scenario}-correct")
    incorrect = make_caption(incorrect_objs, "short", caption_id=f"{scene.image_id}-s{scenario}-incorrect")
    return ScenarioPair(scene.image_id, correct, incorrect, scenario, absent)


def gen_manifests(
    vocab: Vocabulary,
    n_objects: int,
    count: int,
    seed: int,
    id_prefix: str | None = None,
    template: str = "short",
    long_fillers: Sequence[str] | None = None,
) -> tuple[list[SceneSpec], list[CaptionSpec]]:
    """Seeded scenes (distinct objects, one uniformly placed large role) with paired captions."""
    if not 2 <= n_objects <= 5:
        raise ValueError(f"n_objects must be in 2..5, got {n_objects}")
    if count < 1:
        raise ValueError("count must be >= 1")
    if n_objects > len(vocab):
        raise ValueError(f"vocabulary {vocab.name!r} has {len(vocab)} objects, need {n_objects}")
    rng = np.random.default_rng(seed)
    names = vocab.objects
    prefix = id_prefix or f"{vocab.name}-{n_objects}obj"
    scenes: list[SceneSpec] = []
    captions: list[CaptionSpec] = []
    for i in range(count):
        chosen = rng.choice(len(names), size=n_objects, replace=False)
        large_slot = int(rng.integers(n_objects))
        placements = tuple(
            Placement(names[int(obj)], "large" if slot == large_slot else "small", slot)
            for slot, obj in enumerate(chosen)
        )
        scene = SceneSpec(f"{prefix}-{i:06d}", placements)
        scenes.append(scene)
        captions.append(
            make_caption(
                scene.objects_in_slot_order(), template, long_fillers,
                caption_id=f"{prefix}-{i:06d}-cap",
            )
        )
    return scenes, captions


def gen_scenario_trials(
    vocab: Vocabulary,
    n_objects: int,
    count: int,
    seed: int,
    scenarios: Sequence[str] = ("one", "two"),
) -> tuple[list[SceneSpec], list[CaptionSpec], list[ScenarioPair]]:
    """Scenes plus correct/incorrect caption pairs for the matching evaluation."""
    scenes, _ = gen_manifests(vocab, n_objects, count, seed, id_prefix=f"{vocab.name}-match{n_objects}")
    rng = np.random.default_rng(seed + 1)
    names = vocab.objects
    captions: list[CaptionSpec] = []
    pairs: list[ScenarioPair] = []
    for scene in scenes:
        present = set(scene.objects_in_slot_order())
        candidates = [n for n in names if n not in present]
        absent = candidates[int(rng.integers(len(candidates)))]
        for sc in scenarios:
            pair = make_scenario_pair(scene, absent, sc)
            captions.extend([pair.correct, pair.incorrect])
            pairs.append(pair)
    return scenes, captions, pairs


def claim1_sentence_sets(
    vocab: Vocabulary, count: int, seed: int
) -> tuple[list[CaptionSpec], list[CaptionSpec]]:
    """Caption sets opening with a large-class vs a small-class object.

    Each caption holds four objects: the size-classed opener followed by
    three distinct medium-class objects drawn without replacement.
    """
    if count < 0:
        raise ValueError("count must be >= 0")
    large = vocab.by_size("large")
    small = vocab.by_size("small")
    medium = vocab.by_size("medium")
    if not large or not small or len(medium) < 3:
        raise ValueError(
            f"vocabulary {vocab.name!r} needs >=1 large, >=1 small and >=3 medium entries"
        )
    rng = np.random.default_rng(seed)
    set_a: list[CaptionSpec] = []
    set_b: list[CaptionSpec] = []
    for i in range(count):
        first_a = large[int(rng.integers(len(large)))]
        first_b = small[int(rng.integers(len(small)))]
        mids_a = [medium[int(j)] for j in rng.choice(len(medium), size=3, replace=False)]
        mids_b = [medium[int(j)] for j in rng.choice(len(medium), size=3, replace=False)]
        set_a.append(make_caption([first_a, *mids_a], "short", caption_id=f"claim1-large-{i:05d}"))
        set_b.append(make_caption([first_b, *mids_b], "short", caption_id=f"claim1-small-{i:05d}"))
    return set_a, set_b


# ---------------------------------------------------------------------------
# manifest JSONL
# ---------------------------------------------------------------------------


def scenes_to_jsonl(scenes: Iterable[SceneSpec]) -> str:
    lines = []
    for s in scenes:
        lines.append(
            json.dumps(
                {
                    "image_id": s.image_id,
                    "placements": [
                        {"object": p.object, "role": p.role, "slot": p.slot} for p in s.ordered()
                    ],
                },
                ensure_ascii=False,
            )
        )
    return "\n".join(lines) + ("\n" if lines else "")


def captions_to_jsonl(captions: Iterable[CaptionSpec]) -> str:
    lines = [
        json.dumps(
            {"caption_id": c.caption_id, "objects": list(c.objects), "template": c.template, "text": c.text},
            ensure_ascii=False,
        )
        for c in captions
    ]
    return "\n".join(lines) + ("\n" if lines else "")


def read_scenes(path: str | Path) -> list[SceneSpec]:
    scenes = []
    for line in Path(path).read_text("utf-8").splitlines():
        if not line.strip():
            continue
        rec = json.loads(line)
        placements = tuple(
            Placement(p["object"], p["role"], int(p["slot"])) for p in rec["placements"]
        )
        scenes.append(SceneSpec(rec["image_id"], placements))
    return scenes


def read_captions(path: str | Path) -> list[CaptionSpec]:
    captions = []
    for line in Path(path).read_text("utf-8").splitlines():
        if not line.strip():
            continue
        rec = json.loads(line)
        captions.append(
            CaptionSpec(rec["caption_id"], tuple(rec["objects"]), rec["template"], rec["text"])
        )
    return captions


def write_scenes(scenes: Iterable[SceneSpec], path: str | Path) -> None:
    Path(path).write_text(scenes_to_jsonl(scenes), encoding="utf-8")


def write_captions(captions: Iterable[CaptionSpec], path: str | Path) -> None:
    Path(path).write_text(captions_to_jsonl(captions), encoding="utf-8")
