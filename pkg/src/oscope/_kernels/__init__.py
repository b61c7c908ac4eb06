"""Kernel backend selection.

The compiled extension is preferred when importable; the numpy fallback is
otherwise used transparently. ``OSCOPE_BACKEND=python`` forces the fallback,
``OSCOPE_BACKEND=compiled`` makes a missing extension a hard error (useful
for benchmarks and CI).
"""

from __future__ import annotations

import os

import numpy as np

from . import pyfallback
from .tables import F_TABLE, X_TABLE

_requested = os.environ.get("OSCOPE_BACKEND", "").strip().lower()

_compiled = None
if _requested != "python":
    try:
        from . import _ckernels as _compiled  # type: ignore[no-redef]
    except ImportError:
        if _requested == "compiled":
            raise
        _compiled = None

BACKEND = "compiled" if _compiled is not None else "python"


def unit_rows(x: np.ndarray) -> tuple[np.ndarray, int]:
    x = np.ascontiguousarray(x, dtype=np.float32)
    if _compiled is not None:
        return _compiled.unit_rows(x)
    return pyfallback.unit_rows(x)


def cosine_kernel(qn: np.ndarray, gn: np.ndarray) -> np.ndarray:
    if _compiled is not None:
        return _compiled.cosine_kernel(qn, gn)
    return pyfallback.cosine_kernel(qn, gn)


def retrieve_kernel(qn: np.ndarray, gn: np.ndarray) -> np.ndarray:
    if _compiled is not None:
        return _compiled.retrieve_kernel(qn, gn)
    return pyfallback.retrieve_kernel(qn, gn)


def mc_pair_pass(
    seed: int, partition: int, trials: int, d: int, k: int, b: int, rademacher: bool
) -> tuple[np.ndarray, np.ndarray]:
    if _compiled is not None:
        return _compiled.mc_pair_pass(
            seed, partition, trials, d, k, b, rademacher, X_TABLE, F_TABLE
        )
    return pyfallback.mc_pair_pass(seed, partition, trials, d, k, b, rademacher)


def normal_fill(seed: int, partition: int, n: int) -> np.ndarray:
    if _compiled is not None:
        return _compiled.normal_fill(seed, partition, n, X_TABLE, F_TABLE)
    return pyfallback.normal_fill(seed, partition, n)


def uniform_fill(seed: int, partition: int, n: int) -> np.ndarray:
    if _compiled is not None:
        return _compiled.uniform_fill(seed, partition, n)
    return pyfallback.uniform_fill(seed, partition, n)
