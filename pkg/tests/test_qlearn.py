import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from homeorl.errors import DivergenceError
from homeorl.qlearn import (
    EpsilonSchedule,
    ReplayBuffer,
    Transition,
    epsilon_at,
    select_epsilon_greedy,
    should_sync_target,
    td_target,
)


def _tr(k: int, dim: int = 3) -> Transition:
    return Transition(np.full(dim, float(k)), k % 4, np.array([k, -k], dtype=float), 0.5 * k, np.full(dim, k + 1.0))


def _within_3_sigma(count: int, n: int, p: float) -> bool:
    sd = np.sqrt(n * p * (1 - p))
    return abs(count - n * p) <= 3 * sd


class TestReplayBuffer:
    def test_capacity_and_fifo_eviction(self):
        buf = ReplayBuffer(30_000, 3, 2)
        for k in range(30_001):
            buf.push(_tr(k))
        assert buf.size == 30_000
        items = list(buf)
        assert items[0].obs[0] == 1.0  # item #0 evicted
        assert items[-1].obs[0] == 30_000.0

    def test_single_push(self):
        buf = ReplayBuffer(10, 3, 2)
        buf.push(_tr(7))
        assert len(buf) == 1
        (t,) = list(buf)
        assert t.action == 3 and t.reward_mono == 3.5
        np.testing.assert_array_equal(t.rewards, [7, -7])
        np.testing.assert_array_equal(t.next_obs, [8, 8, 8])

    def test_insertion_order_before_eviction(self):
        buf = ReplayBuffer(10, 3, 2)
        for k in range(6):
            buf.push(_tr(k))
        assert [t.obs[0] for t in buf] == [0, 1, 2, 3, 4, 5]

    @settings(max_examples=30, deadline=None)
    @given(st.integers(1, 20), st.integers(0, 80))
    def test_never_exceeds_capacity_and_keeps_newest(self, cap, n):
        buf = ReplayBuffer(cap, 3, 2)
        for k in range(n):
            buf.push(_tr(k))
        assert buf.size == min(n, cap)
        assert [t.obs[0] for t in buf] == list(range(max(0, n - cap), n))

    def test_exhaustive_batch_is_permutation(self):
        buf = ReplayBuffer(1000, 3, 2)
        for k in range(512):
            buf.push(_tr(k))
        b = buf.sample(512, np.random.default_rng(0))
        assert sorted(b.obs[:, 0]) == list(range(512))

    def test_sample_is_reproducible(self):
        buf = ReplayBuffer(100, 3, 2)
        for k in range(100):
            buf.push(_tr(k))
        a = buf.sample(16, np.random.default_rng(4))
        b = buf.sample(16, np.random.default_rng(4))
        np.testing.assert_array_equal(a.obs, b.obs)

    def test_no_replacement_within_batch(self):
        buf = ReplayBuffer(100, 3, 2)
        for k in range(70):
            buf.push(_tr(k))
        rng = np.random.default_rng(1)
        for _ in range(20):
            idx = buf.sample_indices(64, rng)
            assert len(set(idx.tolist())) == 64

    def test_uniform_draw_frequencies(self):
        buf = ReplayBuffer(1000, 1, 1)
        for k in range(1000):
            buf.push(Transition(np.array([k], float), 0, np.zeros(1), 0.0, np.zeros(1)))
        rng = np.random.default_rng(123)
        counts = np.zeros(1000, dtype=int)
        n_batches, batch = 10_000, 10
        for _ in range(n_batches):
            counts[buf.sample_indices(batch, rng)] += 1
        n = n_batches  # each index appears at most once per batch
        p = batch / 1000
        # per-index counts within 3 sigma for the vast majority; total exact
        ok = sum(_within_3_sigma(c, n, p) for c in counts)
        assert ok >= 990
        assert counts.sum() == n_batches * batch

    def test_sample_requires_enough_items(self):
        buf = ReplayBuffer(100, 3, 2)
        for k in range(10):
            buf.push(_tr(k))
        with pytest.raises(ValueError):
            buf.sample(11, np.random.default_rng(0))


class TestEpsilon:
    def test_k1_is_final_from_start(self):
        s = EpsilonSchedule(1.0, 0.01, 1)
        assert epsilon_at(s, 0) == 0.01
        assert epsilon_at(s, 10_000) == 0.01

    def test_endpoints_k10000(self):
        s = EpsilonSchedule(1.0, 0.01, 10_000)
        assert epsilon_at(s, 0) == 1.0
        assert epsilon_at(s, 9_999) == 0.01
        assert epsilon_at(s, 25_000) == 0.01

    def test_midpoint_linearity(self):
        s = EpsilonSchedule(1.0, 0.01, 10_000)
        assert epsilon_at(s, 4999.5) == pytest.approx(0.505, abs=1e-6)
        assert epsilon_at(s, 5000) == pytest.approx(1.0 - 0.99 * 5000 / 9999, abs=1e-12)

    @pytest.mark.parametrize("k", [1, 2, 10, 100, 1000, 5000, 10_000])
    def test_monotone_nonincreasing(self, k):
        s = EpsilonSchedule(1.0, 0.01, k)
        eps = np.array([epsilon_at(s, t) for t in range(k + 50)])
        assert np.all(np.diff(eps) <= 0)
        assert np.all(eps[k - 1 :] == 0.01)
        if k > 1:
            assert eps[0] == 1.0

    def test_rejects_zero_anneal(self):
        with pytest.raises(ValueError):
            EpsilonSchedule(1.0, 0.01, 0)


class TestSelection:
    def test_greedy_argmax(self):
        assert select_epsilon_greedy(np.array([1.0, 2.0, 0.0, 0.0]), 0.0, np.random.default_rng(0)) == 1

    def test_uniform_when_eps_one(self):
        rng = np.random.default_rng(7)
        n = 100_000
        counts = np.bincount([select_epsilon_greedy(np.array([9.0, 0, 0, 0]), 1.0, rng) for _ in range(n)], minlength=4)
        assert all(_within_3_sigma(c, n, 0.25) for c in counts)

    def test_ties_broken_uniformly(self):
        rng = np.random.default_rng(8)
        n = 100_000
        counts = np.bincount([select_epsilon_greedy(np.array([3.0, 3.0, 0, 0]), 0.0, rng) for _ in range(n)], minlength=4)
        assert counts[2] == counts[3] == 0
        assert _within_3_sigma(counts[0], n, 0.5)

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(-100, 100), min_size=4, max_size=4, unique=True), st.floats(-50, 50))
    def test_argmax_invariant_under_shift(self, q, c):
        q = np.array(q)
        shifted = q + c
        if len(set(shifted.tolist())) < 4:
            return  # shift collapsed two values
        a = select_epsilon_greedy(q, 0.0, np.random.default_rng(0))
        b = select_epsilon_greedy(shifted, 0.0, np.random.default_rng(1))
        assert a == b == int(np.argmax(q))

    def test_non_finite_raises(self):
        with pytest.raises(DivergenceError):
            select_epsilon_greedy(np.array([0.0, np.nan, 1.0, 0.0]), 0.0, np.random.default_rng(0))


class TestTargets:
    def test_zero(self):
        assert td_target(0.0, 0.5, np.zeros(4)) == 0.0

    def test_hand_value(self):
        assert td_target(1.0, 0.5, np.array([2.0, 4.0, 0.0, 1.0])) == 3.0

    def test_myopic(self):
        assert td_target(-0.37, 0.0, np.array([5.0, 1.0, 2.0, 3.0])) == -0.37

    def test_batched(self):
        q = np.array([[2.0, 4.0, 0.0, 1.0], [-1.0, -2.0, -3.0, -4.0]])
        np.testing.assert_array_equal(td_target(np.array([1.0, 0.0]), 0.5, q), [3.0, -0.5])

    @pytest.mark.parametrize("t,expect", [(200, True), (0, False), (399, False), (400, True), (199, False)])
    def test_sync_cadence(self, t, expect):
        assert should_sync_target(t, 200) is expect
