import zlib

import numpy as np
import pytest

from nsbandit.rng import BlockDraws, RngStream, as_generators, label_key


class TestRngStream:
    def test_same_id_same_draws(self):
        a = RngStream(7, (3, 1)).generator().random(50)
        b = RngStream(7, (3, 1)).generator().random(50)
        np.testing.assert_array_equal(a, b)

    def test_distinct_ids_differ(self):
        a = RngStream(7, (3, 1)).generator().random(50)
        b = RngStream(7, (3, 2)).generator().random(50)
        c = RngStream(8, (3, 1)).generator().random(50)
        assert not np.array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_child_extends_id(self):
        s = RngStream(1, (2,)).child(5, 6)
        assert s.stream_id == (2, 5, 6)

    def test_streams_look_independent(self):
        x = RngStream(0, (0,)).generator().random(20000)
        y = RngStream(0, (1,)).generator().random(20000)
        assert abs(np.corrcoef(x, y)[0, 1]) < 0.03

    def test_label_key_is_crc32(self):
        assert label_key("ds-ts") == zlib.crc32(b"ds-ts")


class TestAsGenerators:
    def test_none_gives_n(self):
        assert len(as_generators(None, 4)) == 4

    def test_single_stream_cannot_feed_many(self):
        with pytest.raises(ValueError):
            as_generators(RngStream(0), 3)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            as_generators([1, 2], 3)


class TestBlockDraws:
    def test_replica_sequence_independent_of_batch(self):
        solo = BlockDraws([RngStream(0, (5,)).generator()], 3, chunk=16)
        batch = BlockDraws([RngStream(0, (k,)).generator() for k in range(4, 8)], 3, chunk=16)
        for _ in range(40):
            np.testing.assert_array_equal(solo.next()[0], batch.next()[1])

    def test_shapes_and_range(self):
        d = BlockDraws([np.random.default_rng(k) for k in range(3)], 5, "uniform", chunk=8)
        for _ in range(20):
            u = d.next()
            assert u.shape == (3, 5)
            assert np.all((u >= 0) & (u < 1))

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            BlockDraws([np.random.default_rng()], 1, "cauchy")
