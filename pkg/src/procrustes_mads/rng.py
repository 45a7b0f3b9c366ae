"""Index-addressable random streams.

Every stochastic unit of work (a Monte Carlo replicate, a bootstrap draw, a
multi-start) gets its own generator derived from ``(master seed, purpose
tag, indices)``, so results do not depend on execution order or on how work
is split across processes.
"""
from __future__ import annotations

import zlib

import numpy as np

__all__ = ["tag_id", "derive_seed", "derive_rng"]

_MASK64 = (1 << 64) - 1


def tag_id(tag: str) -> int:
    return zlib.crc32(tag.encode("utf-8"))


def derive_seed(master: int, tag: str, *indices: int) -> np.random.SeedSequence:
    entropy = [int(master) & _MASK64, tag_id(tag), *(int(i) for i in indices)]
    return np.random.SeedSequence(entropy)


def derive_rng(master: int, tag: str, *indices: int) -> np.random.Generator:
    """Generator for the substream ``(master, tag, *indices)``."""
    return np.random.default_rng(derive_seed(master, tag, *indices))
