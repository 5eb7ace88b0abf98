import numpy as np
import pytest

from nsbandit.core import BatchMeans, RunTrace, run_batch, run_episode
from nsbandit.environments import AbruptEnv, SmoothEnv, abrupt_generate
from nsbandit.policies import DiscountedTS, Oracle, UniformRandom, make_policy
from nsbandit.rng import RngStream


def two_arm():
    return AbruptEnv(2, 500, [1], [[0.9, 0.1]])


class TestRunEpisode:
    def test_oracle_zero_regret(self):
        env = abrupt_generate(4, 1000, 5, rng=0)
        trace = run_episode(Oracle(4, [env]), env, rng=RngStream(0))
        assert trace.cum_regret[-1] == 0.0

    def test_random_expected_regret(self):
        env = two_arm()
        finals = []
        for r in range(200):
            pol = UniformRandom(2, rngs=RngStream(1, (r, 2)))
            finals.append(run_episode(pol, env, rng=RngStream(1, (r, 1))).cum_regret[-1])
        finals = np.array(finals)
        se = finals.std(ddof=1) / np.sqrt(len(finals))
        assert abs(finals.mean() - 0.4 * 500) <= 3 * se

    def test_deterministic(self):
        env = abrupt_generate(3, 400, 4, rng=1)
        a = run_episode(DiscountedTS(3, 0.95, rngs=RngStream(5, (2,))), env, rng=RngStream(5, (1,)))
        b = run_episode(DiscountedTS(3, 0.95, rngs=RngStream(5, (2,))), env, rng=RngStream(5, (1,)))
        assert a == b

    def test_trace_invariants(self):
        env = SmoothEnv(3, 600, 0.02)
        tr = run_episode(DiscountedTS(3, 0.9, rngs=RngStream(2)), env, rng=RngStream(3))
        assert np.all(tr.inst_regret >= 0)
        assert np.all(np.diff(tr.cum_regret) >= 0)
        assert np.all(tr.cum_regret <= np.arange(1, 601))
        np.testing.assert_allclose(tr.cum_regret, np.cumsum(tr.inst_regret))
        m = env.means_matrix()
        best = m.max(axis=1)
        np.testing.assert_array_equal(tr.inst_regret, best - m[np.arange(600), tr.chosen])
        assert np.all(tr.inst_regret[m[np.arange(600), tr.chosen] == best] == 0)

    def test_partial_horizon(self):
        env = two_arm()
        tr = run_episode(UniformRandom(2, rngs=RngStream(0)), env, T=50, rng=RngStream(1))
        assert len(tr.chosen) == 50

    def test_rejects_batched_policy(self):
        with pytest.raises(ValueError):
            run_episode(UniformRandom(2, rngs=[1, 2]), two_arm())


class TestRunBatch:
    def test_adding_a_policy_does_not_perturb_others(self):
        envs = [abrupt_generate(3, 300, 3, rng=k) for k in range(4)]
        noise = [RngStream(0, (k, 1)) for k in range(4)]

        def ds():
            return make_policy("ds-ts", 3, {"gamma": 0.95}, rngs=[RngStream(0, (k, 2, 7)) for k in range(4)])
        alone, _ = run_batch([ds()], envs, 300, noise)
        rand = make_policy("random", 3, {}, rngs=[RngStream(0, (k, 2, 9)) for k in range(4)])
        both, _ = run_batch([rand, ds()], envs, 300, noise)
        np.testing.assert_array_equal(alone[0], both[1])

    def test_batch_equals_single_episodes(self):
        envs = [abrupt_generate(3, 200, 2, rng=k) for k in range(3)]
        pol = DiscountedTS(3, 0.9, rngs=[RngStream(4, (k,)) for k in range(3)])
        inst, chosen = run_batch([pol], envs, 200, [RngStream(5, (k,)) for k in range(3)], record_arms=True)
        for k in range(3):
            tr = run_episode(DiscountedTS(3, 0.9, rngs=RngStream(4, (k,))), envs[k], rng=RngStream(5, (k,)))
            np.testing.assert_array_equal(tr.chosen, chosen[0][k])
            np.testing.assert_array_equal(tr.inst_regret, inst[0][k])

    def test_shape_checks(self):
        env = two_arm()
        with pytest.raises(ValueError):
            run_batch([UniformRandom(3, rngs=[0])], [env], 10, [0])
        with pytest.raises(ValueError):
            run_batch([UniformRandom(2, rngs=[0])], [env], 1000, [0])


class TestBatchMeans:
    def test_mixed_breakpoints_fall_back(self):
        a = AbruptEnv(2, 10, [1, 5], [[0.1, 0.2], [0.3, 0.4]])
        b = AbruptEnv(2, 10, [1, 3], [[0.5, 0.6], [0.7, 0.8]])
        bm = BatchMeans([a, b])
        for t in range(1, 11):
            np.testing.assert_array_equal(bm.at(t), np.stack([a.means_at(t), b.means_at(t)]))

    def test_smooth_shared(self):
        envs = [SmoothEnv(3, 50, 0.1) for _ in range(2)]
        bm = BatchMeans(envs)
        np.testing.assert_array_equal(bm.at(7)[1], envs[0].means_at(7))


def test_runtrace_from_arrays():
    tr = RunTrace.from_arrays([0, 1], [0.0, 0.5])
    np.testing.assert_array_equal(tr.cum_regret, [0.0, 0.5])
