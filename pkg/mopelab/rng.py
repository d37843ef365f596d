"""
Named, seeded random streams.

Every sampling site owns its own stream, keyed by the run seed, a stream id
and an optional path of integers (epoch, step, iteration, ...). Streams with
the same key always produce the same sequence, no matter which other streams
were used before them or on which worker they run.
"""
from typing import Optional, Sequence, Tuple

import numpy as np

# Stream ids of the agent loop
STREAM_MODEL_INIT = 0
STREAM_RESET = 1
STREAM_WARMUP = 2
STREAM_PLAN = 3
STREAM_TRAIN = 4
STREAM_EVAL = 5
STREAM_NOISE = 6


class RngStream:

    def __init__(self, seed: int, streamId: int = 0, path: Sequence[int] = ()):
        self.seed = int(seed)
        self.streamId = int(streamId)
        self.path: Tuple[int, ...] = tuple(int(x) for x in path)
        self._gen: Optional[np.random.Generator] = None

    @property
    def generator(self) -> np.random.Generator:
        if self._gen is None:
            seq = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.streamId, *self.path))
            self._gen = np.random.Generator(np.random.PCG64(seq))
        return self._gen

    def substream(self, *ids: int) -> 'RngStream':
        """
        Derives an independent child stream, the parent's position does not matter
        """
        return RngStream(self.seed, self.streamId, self.path + tuple(ids))

    def standardNormal(self, size) -> np.ndarray:
        return self.generator.standard_normal(size)

    def uniform(self, low, high, size=None) -> np.ndarray:
        return self.generator.uniform(low, high, size)

    def integers(self, low: int, high: int, size=None) -> np.ndarray:
        return self.generator.integers(low, high, size)

    def permutation(self, x) -> np.ndarray:
        return self.generator.permutation(x)

    def dirichlet(self, alpha, size=None) -> np.ndarray:
        return self.generator.dirichlet(alpha, size)

    def __str__(self) -> str:
        return f'RngStream(seed: {self.seed}, id: {self.streamId}, path: {self.path})'
