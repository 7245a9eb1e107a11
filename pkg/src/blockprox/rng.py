"""Seed derivation and per-node random streams.

Every stream is a PCG64 generator seeded from ``SeedSequence(seed,
spawn_key=(node, tag))`` so that streams for different nodes, purposes and
runs never overlap, and a run is fully determined by its master seed.
"""

from __future__ import annotations

import zlib

import numpy as np

_BATCH = 2048


def purpose_tag(name: str) -> int:
    """Stable integer id for a purpose string (e.g. ``"blockprox/component"``)."""
    return zlib.crc32(name.encode())


def stream(seed: int, tag: str, *key: int) -> np.random.Generator:
    """Independent generator for ``(seed, tag, *key)``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(purpose_tag(tag), *map(int, key)))
    return np.random.Generator(np.random.PCG64(ss))


class NodeStreams:
    """One uniform stream per node, read one column per iteration.

    Each node's generator is read in batches with ``Generator.random(size)``,
    which yields the same doubles as repeated ``random()`` calls; a node
    therefore consumes exactly one double per :meth:`next` call whether or not
    the value is used.
    """

    def __init__(self, seed: int, n: int, tag: str):
        self.n = n
        self._gens = [stream(seed, tag, i) for i in range(n)]
        self._buf = np.empty((n, 0))
        self._pos = 0

    def next(self) -> np.ndarray:
        """Vector of ``n`` doubles in [0, 1), entry ``i`` from node ``i``'s stream."""
        if self._pos >= self._buf.shape[1]:
            self._buf = np.stack([g.random(_BATCH) for g in self._gens]) if self.n else np.empty((0, _BATCH))
            self._pos = 0
        col = self._buf[:, self._pos]
        self._pos += 1
        return col
