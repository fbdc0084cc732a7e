"""Seeded random streams addressed by named coordinates.

Every stochastic component receives its own ``numpy.random.Generator``
derived from a master seed and a tuple of coordinates such as
``(level, "coupled")`` or ``("cost", "MLPF", L, repetition)``. Adding a level
or a repetition never changes the draws of any other coordinate.
"""

import zlib
from dataclasses import dataclass
from typing import TypeAlias

import numpy as np

Coordinate: TypeAlias = int | str


def _coordinate_key(coordinate: Coordinate) -> int:
    """Map one coordinate to a non-negative integer spawn key."""
    if isinstance(coordinate, bool):
        raise TypeError("stream coordinates must be int or str, not bool")
    if isinstance(coordinate, int):
        if coordinate < 0:
            raise ValueError("integer stream coordinates must be non-negative")
        return coordinate
    return zlib.crc32(coordinate.encode("utf-8"))


@dataclass(frozen=True)
class StreamFactory:
    """Derive reproducible PCG64 generators from a master seed."""

    seed: int

    def generator(self, *coordinates: Coordinate) -> np.random.Generator:
        """Return the generator owned by ``coordinates``."""
        spawn_key = tuple(_coordinate_key(item) for item in coordinates)
        sequence = np.random.SeedSequence(self.seed, spawn_key=spawn_key)
        return np.random.Generator(np.random.PCG64(sequence))

    def child(self, *coordinates: Coordinate) -> "StreamFactory":
        """Return a factory whose seed is derived from ``coordinates``."""
        spawn_key = tuple(_coordinate_key(item) for item in coordinates)
        sequence = np.random.SeedSequence(self.seed, spawn_key=spawn_key)
        return StreamFactory(int(sequence.generate_state(1, dtype=np.uint64)[0]))
