"""Seeded random streams.

All stochastic code takes a ``numpy.random.Generator`` built here. Parallel
workers receive independent children via ``SeedSequence.spawn`` so results do
not depend on how work is partitioned.
"""
from __future__ import annotations

import os

import numpy as np

SEED_ENV = "COBLAB_SEED"
DEFAULT_SEED = 0


def resolve_seed(seed: int | None = None) -> int:
    if seed is not None:
        return int(seed)
    env = os.environ.get(SEED_ENV)
    if env is not None and env.strip():
        return int(env)
    return DEFAULT_SEED


def make_rng(seed: int | np.random.Generator | None = None) -> np.random.Generator:
    """PCG64 generator from a 64-bit seed; generators pass through unchanged."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(resolve_seed(seed))))


def spawn(seed: int, count: int) -> list[np.random.Generator]:
    """``count`` independent streams derived from one root seed."""
    children = np.random.SeedSequence(seed).spawn(count)
    return [np.random.Generator(np.random.PCG64(s)) for s in children]


def kernel_seed(rng: np.random.Generator) -> np.uint64:
    """64-bit seed for a compiled kernel's inline generator."""
    return rng.integers(0, 2**64, dtype=np.uint64)


def derived(seed: int, tag: int) -> np.random.Generator:
    """A stream keyed by ``(seed, tag)``, disjoint from :func:`spawn` children."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([resolve_seed(seed), tag])))
