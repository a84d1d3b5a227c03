"""Per-replication seeds for counter-based (Philox) streams.

A replication's stream depends only on ``(master_seed, process_id,
replication)``, so results do not depend on how replications are
distributed over workers.
"""

from __future__ import annotations

import hashlib

import numpy as np

MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def stable_hash(text: str) -> int:
    return int.from_bytes(hashlib.sha256(text.encode()).digest()[:8], "little")


def derive_seed(master_seed: int, process_id: str, replication: int) -> int:
    h = splitmix64((master_seed & MASK64) ^ stable_hash(process_id))
    return splitmix64(h ^ splitmix64(replication & MASK64))


def generator(seed: int) -> np.random.Generator:
    """Philox stream keyed by a 64-bit seed, counter starting at zero."""
    return np.random.Generator(np.random.Philox(key=seed & MASK64))


def uniforms(seed: int, count: int) -> np.ndarray:
    return generator(seed).random(count)
