"""Pixel-mask to patch-grid assignment (majority vote per patch)."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np


def read_mask_records(path: str | Path) -> dict[str, tuple[np.ndarray, dict[int, str]]]:
    """Mask lines: {"image_id", "grid": [[int]], "labels": {"1": name, ...}}.

    Grid cells hold integer labels; 0 is background.
    """
    out = {}
    for line in Path(path).read_text("utf-8").splitlines():
        if not line.strip():
            continue
        rec = json.loads(line)
        grid = np.asarray(rec["grid"], dtype=np.int64)
        labels = {int(k): v for k, v in rec["labels"].items()}
        out[rec["image_id"]] = (grid, labels)
    return out


def patch_assignment(
    grid: np.ndarray, labels: dict[int, str], patch_grid: int
) -> dict[str, list[int]]:
    """Assign each of patch_grid^2 patches to the majority label of its pixels.

    Background (label 0) patches stay unassigned. Patch indices are row-major,
    matching the vision transformer's patch ordering.
    """
    h, w = grid.shape
    assignment: dict[str, list[int]] = {name: [] for name in labels.values()}
    for row in range(patch_grid):
        y0 = row * h // patch_grid
        y1 = (row + 1) * h // patch_grid
        for col in range(patch_grid):
            x0 = col * w // patch_grid
            x1 = (col + 1) * w // patch_grid
            cell = grid[y0:y1, x0:x1]
            if cell.size == 0:
                continue
            values, counts = np.unique(cell, return_counts=True)
            winner = int(values[np.argmax(counts)])  # ties: lowest label wins
            if winner != 0 and winner in labels:
                assignment[labels[winner]].append(row * patch_grid + col)
    return {name: patches for name, patches in assignment.items() if patches}
