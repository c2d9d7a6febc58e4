"""Counter-based random streams keyed by ``(seed, stream)``.

Every sampler takes a seed and a stream id; two calls with the same pair
see the same numbers regardless of which thread or process runs them.
"""

import numpy as np

_MAX_SEED = 2**64 - 1


def generator(seed: int = 0, stream: int = 0) -> np.random.Generator:
    if not 0 <= int(seed) <= _MAX_SEED:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    if int(stream) < 0:
        raise ValueError(f"stream id must be non-negative, got {stream}")
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(stream),))
    return np.random.Generator(np.random.Philox(ss))


def open_uniform(rng: np.random.Generator, size) -> np.ndarray:
    """Uniforms on the open interval (0, 1), never exactly 0 or 1."""
    bits = rng.integers(0, 2**53, size=size, dtype=np.int64)
    return (bits.astype(np.float64) + 0.5) * (1.0 / 2**53)
