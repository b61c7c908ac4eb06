"""Ziggurat layer tables for the compiled normal sampler.

256 equal-area layers over f(x) = exp(-x^2/2). X[i] is the right edge of
layer i (X[0] is the virtual base width V/f(R), X[1] = R, X[256] = 0) and
F[i] = f(X[i]). Built once at import and handed to the extension.
"""

import math

import numpy as np

LAYERS = 256
R = 3.6541528853610088  # right edge of the base layer for 256 layers


def _f(x: float) -> float:
    return math.exp(-0.5 * x * x)


def build_tables() -> tuple[np.ndarray, np.ndarray]:
    tail = math.sqrt(math.pi / 2.0) * math.erfc(R / math.sqrt(2.0))
    v = R * _f(R) + tail  # common layer area

    x = np.zeros(LAYERS + 1, dtype=np.float64)
    x[0] = v / _f(R)
    x[1] = R
    for i in range(1, LAYERS - 1):
        x[i + 1] = math.sqrt(-2.0 * math.log(v / x[i] + _f(x[i])))
    x[LAYERS] = 0.0

    f = np.array([_f(val) for val in x], dtype=np.float64)
    # the recursion must close the area budget at the top layer
    top_area = x[LAYERS - 1] * (1.0 - f[LAYERS - 1])
    if abs(top_area - v) > 1e-9:
        raise AssertionError(f"ziggurat tables inconsistent: {top_area} vs {v}")
    return x, f


X_TABLE, F_TABLE = build_tables()
