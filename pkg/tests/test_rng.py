"""Named seeded streams."""

import numpy as np

from mopelab.rng import STREAM_PLAN, STREAM_WARMUP, RngStream


class TestStreamDeterminism:

    def test_same_key_same_sequence(self):
        a = RngStream(42, STREAM_PLAN, (3, 7)).standardNormal(100)
        b = RngStream(42, STREAM_PLAN, (3, 7)).standardNormal(100)
        np.testing.assert_array_equal(a, b)

    def test_different_keys_differ(self):
        base = RngStream(42, STREAM_PLAN, (3, 7)).standardNormal(100)
        assert not np.array_equal(base, RngStream(43, STREAM_PLAN, (3, 7)).standardNormal(100))
        assert not np.array_equal(base, RngStream(42, STREAM_WARMUP, (3, 7)).standardNormal(100))
        assert not np.array_equal(base, RngStream(42, STREAM_PLAN, (3, 8)).standardNormal(100))

    def test_substream_independent_of_parent_use(self):
        parent = RngStream(5, 1)
        fresh = parent.substream(2).uniform(0, 1, 10)
        parent.standardNormal(1000)
        again = parent.substream(2).uniform(0, 1, 10)
        np.testing.assert_array_equal(fresh, again)

    def test_substream_equals_explicit_path(self):
        a = RngStream(9, 4, (1,)).substream(2, 3).integers(0, 1000, 20)
        b = RngStream(9, 4, (1, 2, 3)).integers(0, 1000, 20)
        np.testing.assert_array_equal(a, b)
