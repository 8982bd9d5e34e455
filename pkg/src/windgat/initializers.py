"""Parameter initialization helpers."""

from __future__ import annotations

import numpy as np


def glorot_uniform(rng: np.random.Generator, shape: tuple[int, ...]) -> np.ndarray:
    """Glorot/Xavier uniform init.

    For matrices (out, in): fan_in = in, fan_out = out. Vectors are
    treated as fan_in = len, fan_out = 1.
    """
    if len(shape) == 2:
        fan_out, fan_in = shape
    elif len(shape) == 1:
        fan_in, fan_out = shape[0], 1
    else:
        raise ValueError(f"glorot_uniform supports 1-D/2-D shapes, got {shape}")
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)
