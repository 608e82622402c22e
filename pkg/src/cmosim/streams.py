"""Counter-based random substreams.

Every (seed, iteration, stream name) triple maps to its own Philox
generator: the key is hashed from the seed and the stream name, and the
iteration index is written into a high word of the 256-bit counter, so each
iteration owns a disjoint block of the counter space. Results therefore do
not depend on which worker runs an iteration or in what order.
"""
from __future__ import annotations

import zlib
from functools import lru_cache

import numpy as np

RATES = "rates"
RATES_INDEPENDENT = "rates:independent"


def credit_stream(model_value: str) -> str:
    return f"credit:{model_value}"


@lru_cache(maxsize=64)
def _key(seed: int, name: str) -> tuple[int, int]:
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(zlib.crc32(name.encode()),))
    k = ss.generate_state(2, dtype=np.uint64)
    return int(k[0]), int(k[1])


def substream(seed: int, iteration: int, name: str) -> np.random.Generator:
    k0, k1 = _key(seed, name)
    key = np.array([k0, k1], dtype=np.uint64)
    counter = np.array([0, 0, iteration, 0], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(counter=counter, key=key))


def open_uniforms(gen: np.random.Generator, size) -> np.ndarray:
    """Uniforms on the open interval (0, 1)."""
    u = gen.random(size)
    return np.where(u > 0.0, u, 2.0**-54)
