"""Seeded random streams.

Every random draw in neurosym comes from a numpy ``Generator`` on the PCG64 bit
generator. A run seed is combined with a stream name so that augmentation,
splitting, initialization and shuffling never share (or perturb) each other's
sequences. The stream key is a CRC-32 of the name, never Python's ``hash()``,
which is salted per process.
"""

from __future__ import annotations

import zlib

import numpy as np

_SEED_MASK = (1 << 64) - 1


def stream_key(stream: str) -> int:
    """Return the stable 32-bit key for a stream name."""

    return zlib.crc32(stream.encode("utf-8")) & 0xFFFFFFFF


def derive_rng(seed: int, stream: str) -> np.random.Generator:
    """Return an independent PCG64 generator for ``(seed, stream)``."""

    entropy = [int(seed) & _SEED_MASK, stream_key(stream)]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))
