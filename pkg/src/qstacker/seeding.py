"""Deterministic seed derivation for parallel sampling jobs.

Seeds for independent jobs are derived from a master seed plus integer
coordinates (e.g. matrix element indices) through a splitmix64 mixing chain.
Each job then owns a counter-based Philox stream, so results never depend on
execution order or on how jobs are grouped into cycles.
"""

from __future__ import annotations

import numpy as np

_MASK = 0xFFFFFFFFFFFFFFFF
_INIT = 0x243F6A8885A308D3  # pi fractional bits, arbitrary nonzero start


def splitmix64(x: int) -> int:
    """One splitmix64 step: well-mixed 64-bit output for a 64-bit input."""
    z = (x + 0x9E3779B97F4A7C15) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return (z ^ (z >> 31)) & _MASK


def derive_seed(master: int, *coords: int) -> int:
    """Fold a master seed and integer coordinates into one 64-bit seed.

    Deterministic, order-sensitive, and well-separated: (m, i, j) and
    (m, j, i) yield unrelated streams.
    """
    state = splitmix64((_INIT ^ (master & _MASK)) & _MASK)
    for c in coords:
        state = splitmix64((state ^ (c & _MASK)) & _MASK)
    return state


def job_rng(seed: int) -> np.random.Generator:
    """Counter-based generator for one sampling job."""
    return np.random.Generator(np.random.Philox(key=seed & _MASK))
