import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pawl_tempering.partition import (
    RungMedianTracker,
    SplitPolicy,
    TemperatureLadder,
    maybe_split,
    neighbors,
    rung_index,
)

LADDER = TemperatureLadder.arithmetic(10, 10)
ON = SplitPolicy(enabled=True, skew_threshold=0.75, min_samples=200, max_rungs=20)


class TestLadder:
    def test_arithmetic(self):
        assert LADDER.temps == tuple(float(T) for T in range(1, 11))
        assert LADDER.d == 10

    @pytest.mark.parametrize("temps", [(2.0, 3.0), (1.0, 1.0), (1.0, 3.0, 2.0), ()])
    def test_invalid(self, temps):
        with pytest.raises(ValueError):
            TemperatureLadder(temps)

    def test_rung_index_identity(self):
        assert rung_index(LADDER, 0) == 0
        assert rung_index(LADDER, 9) == 9
        with pytest.raises(IndexError):
            rung_index(LADDER, 10)
        with pytest.raises(IndexError):
            rung_index(LADDER, -1)

    def test_neighbors(self):
        assert neighbors(LADDER, 0) == {1}
        assert neighbors(LADDER, 9) == {8}
        assert neighbors(LADDER, 4) == {3, 5}
        with pytest.raises(IndexError):
            neighbors(LADDER, 10)


class TestSplitPolicy:
    def test_validation(self):
        with pytest.raises(ValueError):
            SplitPolicy(skew_threshold=0.5)
        with pytest.raises(ValueError):
            SplitPolicy(skew_threshold=1.0)
        with pytest.raises(ValueError):
            SplitPolicy(min_samples=9)


class TestMaybeSplit:
    def test_disabled_policy(self):
        counts = [(1000, 0)] * 10
        res = maybe_split(LADDER, SplitPolicy(enabled=False), counts)
        assert not res.split
        assert res.ladder == LADDER
        assert res.mapping == tuple(range(10))

    def test_two_rung_midpoint(self):
        ladder = TemperatureLadder((1.0, 10.0))
        res = maybe_split(ladder, ON, [(300, 10), (100, 100)])
        assert res.split
        assert res.ladder.temps == (1.0, 5.5, 10.0)
        assert res.mapping == (0, 2)
        assert (res.parent, res.new_rung) == (0, 1)

    def test_below_min_samples(self):
        res = maybe_split(LADDER, ON, [(150, 0)] * 10)
        assert not res.split and res.ladder == LADDER

    def test_lowest_qualifying_rung_wins(self):
        counts = [(100, 100)] * 10
        counts[3] = (10, 290)
        counts[6] = (290, 10)
        res = maybe_split(LADDER, ON, counts)
        assert res.ladder.temps[:6] == (1.0, 2.0, 3.0, 4.0, 4.5, 5.0)
        assert res.mapping == (0, 1, 2, 3, 5, 6, 7, 8, 9, 10)

    def test_top_rung_splits_lower_gap(self):
        counts = [(100, 100)] * 10
        counts[9] = (0, 400)
        res = maybe_split(LADDER, ON, counts)
        assert res.ladder.temps[-3:] == (9.0, 9.5, 10.0)
        assert res.mapping[-1] == 10
        assert res.new_rung == 9 and res.parent == 9

    def test_respects_max_rungs(self):
        policy = SplitPolicy(enabled=True, max_rungs=10)
        res = maybe_split(LADDER, policy, [(1000, 0)] * 10)
        assert not res.split

    def test_count_length_mismatch(self):
        with pytest.raises(ValueError):
            maybe_split(LADDER, ON, [(1, 1)] * 9)

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.integers(0, 9), min_size=1, max_size=25), st.integers(2, 30))
    def test_repeated_splits_keep_invariants(self, rungs, max_rungs):
        policy = SplitPolicy(enabled=True, min_samples=10, max_rungs=max(max_rungs, 10))
        ladder = LADDER
        for k in rungs:
            counts = np.full((ladder.d, 2), 5)
            counts[k % ladder.d] = (0, 50)
            res = maybe_split(ladder, policy, counts)
            m = np.asarray(res.mapping)
            assert len(set(res.mapping)) == ladder.d
            assert np.all(np.diff(m) > 0)
            ladder = res.ladder
            assert ladder.temps[0] == 1.0
            assert all(b > a for a, b in zip(ladder.temps, ladder.temps[1:]))
            assert ladder.d <= policy.max_rungs


class TestMedianTracker:
    def test_tracks_median_and_counts(self):
        rng = np.random.default_rng(0)
        tr = RungMedianTracker(2)
        for _ in range(20_000):
            tr.observe(np.array([0, 1]), np.abs(rng.normal([15.0, 0.0], [1.0, 1.0])))
        assert tr.median[0] == pytest.approx(15.0, abs=0.1)
        assert tr.median[1] == pytest.approx(0.6745, abs=0.05)
        assert tr.half_counts.sum() == 40_000
        frac = tr.half_counts[:, 1] / tr.half_counts.sum(axis=1)
        np.testing.assert_allclose(frac, 0.5, atol=0.05)

    def test_remap_copies_parent(self):
        tr = RungMedianTracker(2)
        tr.median[:] = [3.0, 7.0]
        tr.remap((0, 2), parent=0, new_rung=1)
        np.testing.assert_array_equal(tr.median, [3.0, 3.0, 7.0])
        assert tr.half_counts.shape == (3, 2)
