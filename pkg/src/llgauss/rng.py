"""Reproducible random streams.

Every random draw in the package goes through a :class:`Seed`. A seed is a
64-bit master value plus a stream id; nested substreams are addressed by an
integer path. Each address maps to an independent PCG64 generator through
``numpy.random.SeedSequence`` spawn keys, so results depend only on the
address and never on the order in which work is scheduled.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class Seed:
    master: int
    stream: int = 0
    path: tuple[int, ...] = field(default=())

    def __post_init__(self):
        if self.stream < 0 or any(k < 0 for k in self.path):
            raise ParameterError("stream ids must be non-negative")
        object.__setattr__(self, "master", int(self.master) & _MASK64)

    def substream(self, *keys: int) -> "Seed":
        return Seed(self.master, self.stream, self.path + tuple(int(k) for k in keys))

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.master, spawn_key=(self.stream, *self.path))
        return np.random.Generator(np.random.PCG64(ss))

    def to_dict(self) -> dict:
        return {"master": self.master, "stream": self.stream, "path": list(self.path)}

    @classmethod
    def from_dict(cls, d: dict) -> "Seed":
        return cls(int(d["master"]), int(d.get("stream", 0)), tuple(d.get("path", ())))


def as_seed(seed) -> Seed:
    """Coerce an int, a ``(master, stream)`` pair or a Seed into a Seed."""
    if isinstance(seed, Seed):
        return seed
    if seed is None:
        return Seed(0)
    if isinstance(seed, tuple):
        return Seed(*seed)
    return Seed(int(seed))
