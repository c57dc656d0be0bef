"""Deterministic named RNG substreams.

Every random quantity in the package flows from a single integer seed
through `substream(seed, *path)`, where the path mixes command names and
integer indices (trial, draw).  Identical (seed, path) pairs yield
bit-identical generators, which is what makes serial and parallel runs
agree.
"""

from __future__ import annotations

import zlib

import numpy as np


def _key(part) -> int:
    if isinstance(part, (int, np.integer)):
        if part < 0:
            raise ValueError("substream path integers must be nonnegative")
        return int(part)
    if isinstance(part, str):
        return zlib.crc32(part.encode("utf-8"))
    raise TypeError(f"unsupported substream path part: {part!r}")


def substream(seed: int, *path) -> np.random.Generator:
    """Return a Generator for the named substream of `seed`."""
    entropy = [int(seed)] + [_key(p) for p in path]
    return np.random.default_rng(np.random.SeedSequence(entropy))
