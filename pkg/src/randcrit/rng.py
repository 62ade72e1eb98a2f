"""Counter-based random number streams.

Every random draw in this package is a pure function of a (seed, index)
pair, realized with the Philox counter-based bit generator.  Stream k of a
run produces the same values whether the run is serial, sharded across
threads, or restarted, so all Monte Carlo results are reproducible
bit-for-bit regardless of execution order.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def stream(seed: int, index: int = 0) -> np.random.Generator:
    """Return the generator for substream `index` of the run keyed by `seed`.

    Distinct (seed, index) pairs give statistically independent Philox
    streams; the same pair always gives the same stream.
    """
    key = np.array([seed & _MASK64, index & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def complex_normals(rng: np.random.Generator, scales, size=None) -> np.ndarray:
    """Draw complex Gaussians c with E[c] = 0 and E|c|^2 = scales**2.

    c = scale * (g1 + i g2) / sqrt(2) with g1, g2 standard real normals.
    """
    scales = np.asarray(scales, dtype=float)
    shape = scales.shape if size is None else size
    g = rng.standard_normal((2,) + tuple(shape))
    return scales * (g[0] + 1j * g[1]) / np.sqrt(2.0)
