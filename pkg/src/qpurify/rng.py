"""Counter-based per-trajectory noise streams.

Each trajectory k of a run draws from its own Philox stream keyed by
(master_seed, k), so ensembles are reproducible bit-for-bit no matter how
the work is chunked across workers.  Gaussian increments come from a
Box-Muller transform of the raw uniform stream.
"""

from __future__ import annotations

import numpy as np


def trajectory_stream(master_seed: int, index: int) -> np.random.Generator:
    bg = np.random.Philox(key=(np.uint64(master_seed), np.uint64(index)))
    return np.random.Generator(bg)


def box_muller(gen: np.random.Generator, n: int) -> np.ndarray:
    """n standard normals from the uniform stream of ``gen``."""
    pairs = (n + 1) // 2
    u1 = 1.0 - gen.random(pairs)  # in (0, 1], keeps log finite
    u2 = gen.random(pairs)
    r = np.sqrt(-2.0 * np.log(u1))
    z = np.empty(2 * pairs)
    z[0::2] = r * np.cos(2 * np.pi * u2)
    z[1::2] = r * np.sin(2 * np.pi * u2)
    return z[:n]


def wiener_increments(master_seed: int, index: int, steps: int, dt: float,
                      channels: int = 1) -> np.ndarray:
    """dW array of shape (steps, channels) for one trajectory."""
    gen = trajectory_stream(master_seed, index)
    z = box_muller(gen, steps * channels)
    return np.sqrt(dt) * z.reshape(steps, channels)
