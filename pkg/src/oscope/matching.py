"""Image-text matching trials and the split-caption mitigation.

A trial scores 1 when the image is closer to the correct caption than to
the incorrect one, 0 when farther, and 0.5 on an exact tie (which keeps
swap-antisymmetry exact). The mitigation replaces a caption embedding with
the renormalized mean of its single-object sub-caption embeddings; the mean
is accumulated in sorted-object order, so it is exactly order-invariant.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .errors import DimError
from .forge import CaptionSpec, split_caption
from .store import EmbeddingStore


@dataclass(frozen=True)
class MatchTrial:
    image_id: str
    correct_caption_id: str
    incorrect_caption_id: str
    scenario: str = ""


@dataclass(frozen=True)
class TrialOutcome:
    trial: MatchTrial
    sim_correct: float
    sim_incorrect: float
    score: float  # 1, 0.5, or 0


def _unit(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    n = np.linalg.norm(v)
    if n == 0.0:
        raise ValueError("zero vector has no direction")
    return v / n


def _cos(a: np.ndarray, b: np.ndarray) -> float:
    return float(_unit(a) @ _unit(b))


def _score(sim_correct: float, sim_incorrect: float) -> float:
    if sim_correct > sim_incorrect:
        return 1.0
    if sim_correct < sim_incorrect:
        return 0.0
    return 0.5


def evaluate_matching(
    trials: Sequence[MatchTrial],
    image_store: EmbeddingStore,
    text_store: EmbeddingStore,
) -> tuple[float, list[TrialOutcome]]:
    """Mean trial score plus per-trial detail; missing ids raise KeyError."""
    if not trials:
        raise ValueError("no trials to evaluate")
    if image_store.dim != text_store.dim:
        raise DimError(f"image dim {image_store.dim} != text dim {text_store.dim}")
    outcomes = []
    for trial in trials:
        img = image_store.vector(trial.image_id)
        sim_c = _cos(img, text_store.vector(trial.correct_caption_id))
        sim_i = _cos(img, text_store.vector(trial.incorrect_caption_id))
        outcomes.append(TrialOutcome(trial, sim_c, sim_i, _score(sim_c, sim_i)))
    accuracy = float(np.mean([o.score for o in outcomes]))
    return accuracy, outcomes


def aggregate_split_embedding(
    caption: CaptionSpec,
    text_source: EmbeddingStore | Callable[[str], np.ndarray],
) -> np.ndarray:
    """Renormalized mean of the sub-caption embeddings (order-invariant).

    ``text_source`` maps a single-object caption text (= the object name) to
    its embedding: either a store keyed that way or a callable.
    """
    subs = split_caption(caption)
    texts = sorted(sub.text for sub in subs)  # canonical order -> exact invariance
    acc = None
    for text in texts:
        if callable(text_source):
            vec = np.asarray(text_source(text), dtype=np.float64)
        else:
            try:
                vec = text_source.vector(text).astype(np.float64)
            except KeyError:
                raise KeyError(f"no single-object embedding for object {text!r}")
        acc = vec if acc is None else acc + vec
    mean = acc / len(texts)
    return _unit(mean)


def evaluate_with_mitigation(
    trials: Sequence[MatchTrial],
    image_store: EmbeddingStore,
    text_store: EmbeddingStore,
    per_object_text: EmbeddingStore | Callable[[str], np.ndarray],
    captions: Mapping[str, CaptionSpec],
) -> tuple[float, float]:
    """Accuracy with original caption embeddings vs split-caption aggregates."""
    accuracy_original, _ = evaluate_matching(trials, image_store, text_store)
    cache: dict[str, np.ndarray] = {}

    def aggregate(caption_id: str) -> np.ndarray:
        if caption_id not in cache:
            cache[caption_id] = aggregate_split_embedding(captions[caption_id], per_object_text)
        return cache[caption_id]

    scores = []
    for trial in trials:
        img = image_store.vector(trial.image_id)
        sim_c = _cos(img, aggregate(trial.correct_caption_id))
        sim_i = _cos(img, aggregate(trial.incorrect_caption_id))
        scores.append(_score(sim_c, sim_i))
    return accuracy_original, float(np.mean(scores))


# ---------------------------------------------------------------------------
# trials JSONL
# ---------------------------------------------------------------------------


def trials_to_jsonl(trials: Iterable[MatchTrial]) -> str:
    lines = [
        json.dumps(
            {
                "image_id": t.image_id,
                "correct": t.correct_caption_id,
                "incorrect": t.incorrect_caption_id,
                "scenario": t.scenario,
            },
            ensure_ascii=False,
        )
        for t in trials
    ]
    return "\n".join(lines) + ("\n" if lines else "")


def read_trials(path: str | Path) -> list[MatchTrial]:
    trials = []
    for line in Path(path).read_text("utf-8").splitlines():
        if not line.strip():
            continue
        rec = json.loads(line)
        trials.append(MatchTrial(rec["image_id"], rec["correct"], rec["incorrect"], rec.get("scenario", "")))
    return trials


def write_trials(trials: Iterable[MatchTrial], path: str | Path) -> None:
    Path(path).write_text(trials_to_jsonl(trials), encoding="utf-8")
