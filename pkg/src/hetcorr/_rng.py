"""Seed derivation for reproducible, order-independent random streams.

Every sampler in the package takes a ``seed`` that is either a plain
integer or a tuple ``(master_seed, *stream_path)``. Tuples map to
independent child streams of the master seed, so replicate-level work can
be scheduled in any order (or on any number of workers) without changing
the numbers produced.
"""

import numpy as np


def spawn_rng(master_seed, *path):
    """Generator for the stream identified by ``path`` under ``master_seed``."""
    key = tuple(int(p) for p in path)
    return np.random.default_rng(np.random.SeedSequence(int(master_seed), spawn_key=key))


def seed_rng(seed):
    """Generator from an integer seed or a ``(master, *path)`` tuple."""
    if isinstance(seed, tuple):
        return spawn_rng(*seed)
    return spawn_rng(seed)


def child_seed(seed, *path):
    """Extend a seed with further stream-path components."""
    if isinstance(seed, tuple):
        return seed + tuple(int(p) for p in path)
    return (int(seed),) + tuple(int(p) for p in path)
