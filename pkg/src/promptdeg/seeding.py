"""Order-free derivation of independent per-record RNG streams.

Each record's stream is seeded by a SplitMix64 step: the 64-bit state
global_seed + (record_index + 1) * GOLDEN (mod 2^64) is passed through the
SplitMix64 avalanche finalizer. The finalizer is bijective and the golden
increment is odd, so distinct indices always produce distinct, decorrelated
seeds, and any worker can derive any record's stream without coordination.
"""

from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def splitmix64_mix(z: int) -> int:
    """SplitMix64 output finalizer (Steele, Lea & Flood 2014)."""
    z &= _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return (z ^ (z >> 31)) & _MASK


def derive_record_seed(global_seed: int, record_index: int) -> int:
    if record_index < 0:
        raise ValueError(f"record_index must be >= 0, got {record_index}")
    state = (global_seed + (record_index + 1) * _GOLDEN) & _MASK
    return splitmix64_mix(state)


def derive_record_rng(global_seed: int, record_index: int) -> np.random.Generator:
    """Independent PCG64 stream for one (global_seed, record_index) pair."""
    return np.random.Generator(np.random.PCG64(derive_record_seed(global_seed, record_index)))
