"""Seeded, splittable random streams.

Every stochastic operation draws from a Philox generator so a 64-bit master
seed, recorded with each experiment, reproduces a run bit for bit. Child
seeds for channels and amplifiers are spawned from the master seed.
"""

from __future__ import annotations

import numpy as np

Seed = int | np.random.SeedSequence


def make_rng(seed: Seed) -> np.random.Generator:
    """Build a Philox-backed generator from a seed or seed sequence."""
    return np.random.Generator(np.random.Philox(seed))


def spawn_seeds(seed: int, count: int) -> list[int]:
    """Derive ``count`` independent 64-bit child seeds from a master seed.

    Args:
        seed: Master seed.
        count: Number of child seeds.

    Returns:
        Child seeds in a fixed order; the same master seed always yields
        the same list.
    """
    children = np.random.SeedSequence(seed).spawn(count)
    return [int(child.generate_state(1, dtype=np.uint64)[0]) for child in children]
