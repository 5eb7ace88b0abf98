import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nsbandit.environments import (
    AbruptEnv,
    GapEnv,
    RewardFamily,
    SmoothEnv,
    abrupt_generate,
    equal_breakpoints,
    gap,
    gap_generate,
    optimal_mean,
    sample_reward,
    smooth_mean,
)
from nsbandit.rng import RngStream


class TestAbrupt:
    def test_single_phase(self):
        env = abrupt_generate(3, 50, 1, rng=0)
        np.testing.assert_array_equal(env.breakpoints, [1])
        m = env.means_matrix()
        assert np.all(m == m[0])

    def test_equal_phase_breakpoints(self):
        env = abrupt_generate(5, 100_000, 10, rng=0)
        np.testing.assert_array_equal(env.breakpoints, 1 + 10_000 * np.arange(10))

    def test_last_phase_absorbs_remainder(self):
        np.testing.assert_array_equal(equal_breakpoints(10, 3), [1, 4, 7])

    def test_too_many_phases(self):
        with pytest.raises(ValueError):
            abrupt_generate(2, 5, 6, rng=0)

    def test_mu_max_cap(self):
        env = abrupt_generate(10, 10_000, 1000, rng=1, mu_max_cap=0.7)
        assert env.phase_means.max() <= 0.7
        assert env.phase_means.min() >= 0.0

    def test_constant_within_phase_and_changes_at_breakpoints(self):
        env = abrupt_generate(4, 1000, 7, rng=2)
        m = env.means_matrix()
        moved = np.flatnonzero(np.any(m[1:] != m[:-1], axis=1)) + 2
        np.testing.assert_array_equal(moved, env.breakpoints[1:])

    def test_optimal_mean_piecewise_constant(self):
        env = abrupt_generate(3, 300, 3, rng=3)
        opt = np.array([optimal_mean(env, t) for t in range(1, 301)])
        for k, b in enumerate(env.breakpoints):
            stop = env.breakpoints[k + 1] if k + 1 < len(env.breakpoints) else 301
            assert np.all(opt[b - 1: stop - 1] == opt[b - 1])

    def test_rejects_bad_breakpoints(self):
        with pytest.raises(ValueError):
            AbruptEnv(2, 10, [2, 5], np.full((2, 2), 0.5))
        with pytest.raises(ValueError):
            AbruptEnv(2, 10, [1, 5], np.full((2, 2), 1.5))


class TestGap:
    def test_gap_exact(self):
        env = gap_generate(5, 1000, 5, 0.2, rng=0)
        for t in (1, 250, 999):
            mu = env.means_at(t)
            best = int(np.argmax(mu))
            for i in range(5):
                if i != best:
                    assert gap(env, t, i) == pytest.approx(0.2, abs=1e-15)

    def test_best_arm_moves(self):
        env = gap_generate(2, 1000, 10, 0.1, rng=4)
        assert np.all(env.best_arms[1:] != env.best_arms[:-1])

    def test_bounds(self):
        with pytest.raises(ValueError):
            GapEnv(2, 10, [1], [0], 0.5, base=0.1)


class TestSmooth:
    def test_extrema(self):
        env = SmoothEnv(5, 10, sigma=1.0)
        t = math.pi / 2
        assert smooth_mean(env, t, 4) == pytest.approx(0.8, abs=1e-15)
        assert smooth_mean(env, t, 0) == pytest.approx(0.0, abs=1e-15)
        t = 3 * math.pi / 2
        assert smooth_mean(env, t, 0) == pytest.approx(0.8, abs=1e-15)
        assert smooth_mean(env, t, 4) == pytest.approx(0.0, abs=1e-15)

    def test_scaled_peak(self):
        env = SmoothEnv.scaled(5, 10, sigma=1.0)
        assert env.scale == pytest.approx(0.625)
        assert smooth_mean(env, math.pi / 2, 4) == pytest.approx(0.5, abs=1e-15)
        assert env.mu_max_cap == pytest.approx(0.5)

    def test_matrix_matches_pointwise(self):
        env = SmoothEnv(4, 200, sigma=0.05)
        m = env.means_matrix()
        for t in (1, 17, 200):
            np.testing.assert_allclose(m[t - 1], [smooth_mean(env, t, i) for i in range(4)], atol=1e-15)
            np.testing.assert_allclose(m[t - 1], env.means_at(t), atol=0)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(2, 12), st.floats(1e-4, 0.5))
    def test_lipschitz(self, K, sigma):
        env = SmoothEnv(K, 400, sigma)
        m = env.means_matrix()
        step = np.abs(np.diff(m, axis=0)).max()
        assert step <= (K - 1) * sigma / (2 * K) + 1e-15
        assert step <= sigma
        assert m.min() >= 0 and m.max() <= (K - 1) / K + 1e-15

    def test_optimal_mean_at_peak(self):
        for env in (SmoothEnv(5, 10, sigma=1.0), SmoothEnv.scaled(5, 10, sigma=1.0)):
            assert optimal_mean(env, math.pi / 2) == pytest.approx(0.8 * env.scale)


class TestRewards:
    def test_degenerate_means(self):
        for kind in ("bernoulli", "beta"):
            fam = RewardFamily(kind)
            u = np.random.default_rng(0).random(1000)
            assert np.all(fam.transform(0.0, u) == 0.0)
            assert np.all(fam.transform(1.0, u) == 1.0)

    def test_bernoulli_mean(self):
        u = RngStream(1, (0,)).generator().random(100_000)
        x = RewardFamily("bernoulli").transform(0.3, u)
        assert abs(x.mean() - 0.3) < 0.005

    def test_beta_moments(self):
        u = RngStream(1, (1,)).generator().random(100_000)
        x = RewardFamily("beta", 4.0).transform(0.5, u)
        assert x.min() >= 0 and x.max() <= 1
        assert abs(x.mean() - 0.5) < 0.01
        # Beta(2, 2) variance 1/20
        assert abs(x.var() - 0.05) < 0.002

    @settings(max_examples=50, deadline=None)
    @given(st.floats(0, 1), st.floats(0, 1, exclude_max=True), st.sampled_from(["bernoulli", "beta"]))
    def test_rewards_in_unit_interval(self, mu, u, kind):
        x = RewardFamily(kind).transform(mu, u)
        assert 0.0 <= x <= 1.0

    def test_sample_reward_function(self):
        env = AbruptEnv(2, 10, [1], [[0.0, 1.0]])
        assert sample_reward(env, 3, 0, rng=0) == 0.0
        assert sample_reward(env, 3, 1, rng=0) == 1.0

    def test_unknown_family(self):
        with pytest.raises(ValueError):
            RewardFamily("gauss")
