"""Splittable, schedule-independent random streams."""
from __future__ import annotations

import zlib
from dataclasses import dataclass

import numpy as np


def _key(part) -> int:
    if isinstance(part, (bool, np.bool_)):
        return int(part)
    if isinstance(part, (int, np.integer)):
        if part < 0:
            raise ValueError("seed keys must be nonnegative")
        return int(part)
    return zlib.crc32(str(part).encode("utf-8"))


@dataclass(frozen=True)
class SeedStream:
    """Deterministic randomness keyed by a master seed and a path of sub-keys.

    ``SeedStream(7).child("SMOTE", 3)`` always yields the same generator no
    matter which other streams were consumed before it, so jobs can run in
    any order or process.
    """

    master: int
    path: tuple = ()

    def child(self, *parts) -> "SeedStream":
        return SeedStream(self.master, self.path + tuple(_key(p) for p in parts))

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(entropy=self.master, spawn_key=self.path)
        return np.random.Generator(np.random.PCG64(seq))

    def integer(self) -> int:
        """A 31-bit integer seed for libraries that want an int."""
        return int(self.generator().integers(0, 2**31 - 1))


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, SeedStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)
