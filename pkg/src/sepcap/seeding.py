"""Deterministic seed derivation and generator construction.

All randomness in the library flows through numpy's PCG64 generator seeded
with explicit 64-bit integers.  Sub-streams (per trial, per layer, per chunk)
are derived with SplitMix64 so the derivation is stable across platforms and
independent of numpy's own spawning machinery.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    """One SplitMix64 step; a well-mixed 64-bit permutation of x."""
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    z = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9 & MASK64
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB & MASK64
    return (z ^ (z >> 31)) & MASK64


def derive_seed(seed: int, *indices: int) -> int:
    """Mix one or more stream indices into a master seed.

    derive_seed(s) != s in general; equal (seed, indices) always yield the
    same output, and distinct index paths practically never collide.
    """
    s = seed & MASK64
    for ix in indices:
        s = splitmix64(s ^ (ix & MASK64))
    return s


def make_rng(seed: int) -> np.random.Generator:
    """PCG64 generator for a 64-bit seed (the pinned generator family)."""
    return np.random.Generator(np.random.PCG64(seed & MASK64))
