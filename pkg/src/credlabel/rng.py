"""Deterministic derivation of independent random streams.

Every stochastic component takes a 64-bit seed; experiment code never shares
a Generator between tasks. A trial's stream is derived from the master seed
and an integer path (e.g. ``derive_rng(master, 2, trial, scheme)``), so
trials are mutually independent and reruns are bit-reproducible regardless
of execution order.
"""

from __future__ import annotations

import numpy as np


def derive_rng(master_seed: int, *path: int) -> np.random.Generator:
    """Return the generator for the substream named by ``path``.

    Identical ``(master_seed, path)`` pairs always yield identical streams;
    distinct paths yield statistically independent streams.
    """
    ss = np.random.SeedSequence(
        entropy=int(master_seed), spawn_key=tuple(int(p) for p in path)
    )
    return np.random.default_rng(ss)


def derive_seed(master_seed: int, *path: int) -> int:
    """A 63-bit integer seed for the substream named by ``path``.

    Use where an API takes a seed rather than a generator; derived seeds
    inherit the independence guarantees of derive_rng.
    """
    ss = np.random.SeedSequence(
        entropy=int(master_seed), spawn_key=tuple(int(p) for p in path)
    )
    return int(ss.generate_state(1, np.uint64)[0] >> 1)
