"""Replay buffer storage."""

import numpy as np
import pytest

from mopelab.buffer import ReplayBuffer
from mopelab.errors import ShapeError


class TestReplayBuffer:

    def test_insertion_order(self):
        buf = ReplayBuffer(2, 1)
        for i in range(5):
            buf.add([i, i], [0.1 * i], [i + 1, i + 1], float(i))
        batch = buf.batch()
        assert len(buf) == 5
        np.testing.assert_array_equal(batch.rewards, np.arange(5.0))
        np.testing.assert_array_equal(batch.states[:, 0], np.arange(5.0))

    def test_capacity_drops_oldest(self):
        buf = ReplayBuffer(1, 1, capacity=3)
        for i in range(5):
            buf.add([i], [0.0], [i], 0.0)
        np.testing.assert_array_equal(buf.batch().states[:, 0], [2.0, 3.0, 4.0])

    def test_tail(self):
        buf = ReplayBuffer(1, 1)
        for i in range(6):
            buf.add([i], [0.0], [i], float(i))
        np.testing.assert_array_equal(buf.tail(2).rewards, [4.0, 5.0])
        assert len(buf.tail(100)) == 6

    def test_batch_refreshes_after_add(self):
        buf = ReplayBuffer(1, 1)
        buf.add([0.0], [0.0], [1.0], 0.0)
        assert len(buf.batch()) == 1
        buf.add([1.0], [0.0], [2.0], 0.0)
        assert len(buf.batch()) == 2

    def test_empty(self):
        buf = ReplayBuffer(3, 2)
        assert buf.batch().states.shape == (0, 3)

    def test_shape_checks(self):
        buf = ReplayBuffer(2, 1)
        with pytest.raises(ShapeError):
            buf.add([0.0], [0.0], [0.0, 0.0], 0.0)
        with pytest.raises(ShapeError):
            buf.add([0.0, 0.0], [0.0, 1.0], [0.0, 0.0], 0.0)
