"""Counter-based, splittable random streams.

Every random draw in the package comes from a ``numpy.random.Philox``
generator keyed by ``(seed, stream_id)``.  The stream id is a tuple of
non-negative integers, so callers can carve out independent streams per
replication, per role (environment instance, reward noise) and per policy
without coordinating offsets.
"""
from __future__ import annotations

import zlib
from dataclasses import dataclass
from typing import Sequence

import numpy as np

# role tags used as the second component of a stream id
ENV_INSTANCE = 0
ENV_REWARD = 1
POLICY = 2

_CHUNK = 2048


def label_key(label: str) -> int:
    """Stable 32-bit key for a policy label (independent of PYTHONHASHSEED)."""
    return zlib.crc32(label.encode("utf-8"))


@dataclass(frozen=True)
class RngStream:
    """A named stream: identical ``(seed, stream_id)`` gives identical draws."""

    seed: int
    stream_id: tuple[int, ...] = ()

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=int(self.seed), spawn_key=tuple(int(s) for s in self.stream_id))
        return np.random.Generator(np.random.Philox(ss))

    def child(self, *keys: int) -> RngStream:
        return RngStream(self.seed, self.stream_id + tuple(int(k) for k in keys))


def as_generator(rng) -> np.random.Generator:
    if rng is None:
        return np.random.default_rng()
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def as_generators(rngs, n: int | None = None) -> list[np.random.Generator]:
    """Normalise ``rngs`` to a list of generators, one per replica."""
    if rngs is None:
        return [np.random.default_rng() for _ in range(1 if n is None else n)]
    if isinstance(rngs, (RngStream, np.random.Generator, int, np.integer)):
        if n not in (None, 1):
            raise ValueError("a single stream cannot feed several replicas")
        return [as_generator(rngs)]
    gens = [as_generator(r) for r in rngs]
    if n is not None and len(gens) != n:
        raise ValueError(f"expected {n} streams, got {len(gens)}")
    return gens


class BlockDraws:
    """Per-replica draws of a fixed width, fetched one round at a time.

    Each replica's values come only from its own generator, in chunks of a
    fixed size, so a replica's sequence does not depend on how many other
    replicas share the block.
    """

    def __init__(self, gens: Sequence[np.random.Generator], width: int, kind: str = "uniform",
                 chunk: int = _CHUNK):
        if kind not in ("uniform", "normal"):
            raise ValueError(f"unknown draw kind {kind!r}")
        self.gens = list(gens)
        self.width = int(width)
        self.kind = kind
        self.chunk = int(chunk)
        self._buf = None
        self._pos = self.chunk

    def _refill(self):
        if self.kind == "uniform":
            parts = [g.random((self.chunk, self.width)) for g in self.gens]
        else:
            parts = [g.standard_normal((self.chunk, self.width)) for g in self.gens]
        self._buf = np.stack(parts, axis=1)
        self._pos = 0

    def next(self) -> np.ndarray:
        """Return an ``(n_replicas, width)`` array of fresh draws."""
        if self._pos >= self.chunk:
            self._refill()
        out = self._buf[self._pos]
        self._pos += 1
        return out
