import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from homeorl.config import RunConfig, preset_config
from homeorl.envgrid import (
    Action,
    EnvState,
    InternalStats,
    ResourceGrid,
    ResourceKernel,
    apply_clamp,
    build_resource_grid,
    initial_state,
    observe,
    step,
)
from homeorl.errors import ConfigError


@pytest.fixture(scope="module")
def default_grid():
    c = RunConfig()
    return build_resource_grid(c.kernels(), c.grid_width, c.grid_height)


def _state(x, y, h=(0.5, 0.5, 0.5, 0.5)):
    stats = InternalStats(h=np.array(h, dtype=float), setpoints=np.full(len(h), 5.0))
    return EnvState(pos_x=x, pos_y=y, stats=stats)


def _zero_grid(n=4, size=11):
    return ResourceGrid(size, size, np.zeros((n, size, size)))


class TestResourceGrid:
    def test_peak_density_at_mean(self):
        g = build_resource_grid([ResourceKernel(0, 0)], 11, 11)
        assert g.values[0, 0, 0] == pytest.approx(1 / (2 * math.pi), rel=1e-15)
        assert g.values[0, 0, 0] == pytest.approx(0.159155, abs=1e-6)

    def test_far_corner_is_negligible(self):
        g = build_resource_grid([ResourceKernel(0, 0)], 11, 11)
        assert g.values[0, 10, 10] == pytest.approx(math.exp(-100) / (2 * math.pi), rel=1e-12)
        assert g.values[0, 10, 10] < 1e-40

    def test_symmetric_about_mean(self):
        g = build_resource_grid([ResourceKernel(5, 5)], 11, 11)
        assert g.values[0, 5, 4] == g.values[0, 5, 6]
        assert g.values[0, 4, 5] == g.values[0, 6, 5]

    def test_not_renormalised_over_grid(self, default_grid):
        # a corner mean keeps roughly a quarter of the mass inside the grid
        assert 0.2 < default_grid.values[0].sum() < 0.5

    def test_anisotropic_density_matches_closed_form(self):
        cov = ((2.0, 0.5), (0.5, 1.0))
        g = build_resource_grid([ResourceKernel(3, 4, cov)], 8, 8)
        c = np.array(cov)
        d = np.array([6 - 3, 2 - 4])
        want = math.exp(-0.5 * d @ np.linalg.inv(c) @ d) / (2 * math.pi * math.sqrt(np.linalg.det(c)))
        assert g.values[0, 2, 6] == pytest.approx(want, rel=1e-12)

    def test_layer_invariants(self, default_grid):
        assert default_grid.n_resources == 4
        assert np.all(default_grid.values >= 0)
        for i, k in enumerate(RunConfig().kernels()):
            y, x = np.unravel_index(np.argmax(default_grid.values[i]), default_grid.values[i].shape)
            assert (x, y) == (round(k.mean_x), round(k.mean_y))

    @pytest.mark.parametrize(
        "cov",
        [((1.0, 2.0), (2.0, 1.0)), ((0.0, 0.0), (0.0, 1.0)), ((-1.0, 0.0), (0.0, 1.0)), ((1.0, 0.3), (0.1, 1.0))],
    )
    def test_rejects_bad_covariance_naming_kernel(self, cov):
        with pytest.raises(ConfigError, match="kernel 1"):
            build_resource_grid([ResourceKernel(0, 0), ResourceKernel(5, 5, cov)], 11, 11)

    def test_rejects_tiny_grid_and_no_kernels(self):
        with pytest.raises(ConfigError):
            build_resource_grid([ResourceKernel(0, 0)], 2, 11)
        with pytest.raises(ConfigError):
            build_resource_grid([], 11, 11)


class TestInitialState:
    def test_centre_start(self):
        s = initial_state(RunConfig())
        assert (s.pos_x, s.pos_y) == (5, 5)
        assert s.t == 0

    def test_default_stats_and_no_clamps(self):
        s = initial_state(RunConfig())
        np.testing.assert_array_equal(s.stats.h, [0.5, 0.5, 0.5, 0.5])
        np.testing.assert_array_equal(s.stats.setpoints, [5, 5, 5, 5])
        assert not s.stats.clamped.any()

    def test_even_grid_uses_floor(self):
        c = preset_config("paper", grid_width=12, grid_height=8)
        s = initial_state(c)
        assert (s.pos_x, s.pos_y) == (6, 4)


class TestStep:
    def test_action_index_mapping(self):
        assert [int(a) for a in (Action.NORTH, Action.SOUTH, Action.EAST, Action.WEST)] == [0, 1, 2, 3]

    @pytest.mark.parametrize(
        "action,expect", [(Action.NORTH, (5, 6)), (Action.SOUTH, (5, 4)), (Action.EAST, (6, 5)), (Action.WEST, (4, 5))]
    )
    def test_moves(self, default_grid, action, expect):
        s = step(_state(5, 5), action, default_grid, 0.004)
        assert (s.pos_x, s.pos_y) == expect
        assert s.t == 1

    def test_blocked_move_at_wall(self, default_grid):
        s0 = _state(0, 5)
        s1 = step(s0, Action.WEST, default_grid, 0.004)
        assert (s1.pos_x, s1.pos_y) == (0, 5)
        np.testing.assert_array_equal(s1.stats.h, s0.stats.h + default_grid.values[:, 5, 0] - 0.004)

    def test_blocked_move_on_zero_layer(self):
        s1 = step(_state(0, 5), Action.WEST, _zero_grid(), 0.004)
        assert (s1.pos_x, s1.pos_y) == (0, 5)
        np.testing.assert_array_equal(s1.stats.h, np.full(4, 0.5 - 0.004))

    def test_intake_at_next_location(self, default_grid):
        s1 = step(_state(1, 0), Action.WEST, default_grid, 0.004)
        np.testing.assert_array_equal(s1.stats.h, 0.5 + default_grid.values[:, 0, 0] - 0.004)

    def test_clamped_stat_is_frozen(self, default_grid):
        s = apply_clamp(_state(0, 0), 3, 20.0)
        for a in (0, 1, 2, 3):
            assert step(s, a, default_grid, 0.004).stats.h[3] == 20.0

    def test_step_does_not_mutate_input(self, default_grid):
        s0 = _state(0, 0)
        before = s0.stats.h.copy()
        step(s0, Action.NORTH, default_grid, 0.004)
        np.testing.assert_array_equal(s0.stats.h, before)

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.integers(0, 3), min_size=1, max_size=200))
    def test_conservation_and_boundary_closure(self, default_grid, actions):
        s = _state(5, 5)
        for a in actions:
            nxt = step(s, a, default_grid, 0.004)
            assert 0 <= nxt.pos_x < 11 and 0 <= nxt.pos_y < 11
            intake = default_grid.values[:, nxt.pos_y, nxt.pos_x]
            np.testing.assert_array_equal(nxt.stats.h, (s.stats.h + intake) - 0.004)
            assert nxt.t == s.t + 1
            s = nxt


class TestObserve:
    def test_length_and_stats_tail(self, default_grid):
        o = observe(_state(5, 5), default_grid)
        assert o.shape == (40,)
        assert np.all(np.isfinite(o))
        np.testing.assert_array_equal(o[-4:], [0.5] * 4)

    def test_window_ordering(self, default_grid):
        o = observe(_state(4, 6), default_grid)
        for i in range(4):
            win = o[9 * i : 9 * i + 9].reshape(3, 3)
            for r in range(3):
                for c in range(3):
                    assert win[r, c] == default_grid.values[i, 6 + 1 - r, 4 - 1 + c]

    @pytest.mark.parametrize("x,y,padded", [(0, 0, 5), (10, 0, 5), (0, 10, 5), (10, 10, 5), (0, 5, 3), (5, 10, 3), (5, 5, 0)])
    def test_zero_padding_counts(self, x, y, padded):
        grid = ResourceGrid(11, 11, np.ones((4, 11, 11)))
        o = observe(_state(x, y), grid)
        for i in range(4):
            assert np.sum(o[9 * i : 9 * i + 9] == 0.0) == padded

    def test_corner_reads(self, default_grid):
        o = observe(_state(0, 0), default_grid)
        win = o[0:9].reshape(3, 3)
        # rows y=1, 0, -1; cols x=-1, 0, 1
        np.testing.assert_array_equal(win[2], [0, 0, 0])
        np.testing.assert_array_equal(win[:, 0], [0, 0, 0])
        assert win[1, 1] == default_grid.values[0, 0, 0]

    def test_pure(self, default_grid):
        s = _state(3, 7, (1.0, 2.0, 3.0, 4.0))
        np.testing.assert_array_equal(observe(s, default_grid), observe(s, default_grid))


class TestClamp:
    def test_clamp_sets_value_immediately(self, default_grid):
        s = apply_clamp(_state(5, 5), 3, 20.0)
        assert observe(s, default_grid)[-1] == 20.0
        assert s.stats.clamped[3] and s.stats.clamp_values[3] == 20.0

    def test_clamp_at_current_value_is_fixed_point(self, default_grid):
        s = _state(0, 0, (1.25, 0.5, 0.5, 0.5))
        s = apply_clamp(s, 0, s.stats.h[0])
        for _ in range(10):
            s = step(s, Action.NORTH, default_grid, 0.004)
        assert s.stats.h[0] == 1.25

    def test_clamp_survives_many_steps(self, default_grid):
        rng = np.random.default_rng(3)
        s = apply_clamp(_state(5, 5), 2, 7.5)
        for a in rng.integers(0, 4, size=100):
            s = step(s, int(a), default_grid, 0.004)
            assert s.stats.h[2] == 7.5

    def test_clamp_does_not_mutate_previous_state(self):
        s0 = _state(5, 5)
        apply_clamp(s0, 1, 9.0)
        assert not s0.stats.clamped.any()
        assert s0.stats.h[1] == 0.5

    @pytest.mark.parametrize("idx", [-1, 4])
    def test_clamp_index_out_of_range(self, idx):
        with pytest.raises(IndexError):
            apply_clamp(_state(5, 5), idx, 20.0)
