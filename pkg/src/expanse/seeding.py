"""Reproducible random streams.

Every consumer of randomness asks for a generator by component name; streams
are derived from one 64-bit seed with numpy's SeedSequence, keyed by a CRC32
of the name, so adding a consumer never perturbs the others.
"""
import zlib

import numpy as np


def stream(seed: int, name: str) -> np.random.Generator:
    key = zlib.crc32(name.encode("utf-8"))
    seq = np.random.SeedSequence(entropy=int(seed) & 0xFFFFFFFFFFFFFFFF, spawn_key=(key,))
    return np.random.Generator(np.random.PCG64(seq))
