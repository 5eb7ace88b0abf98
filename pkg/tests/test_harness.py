import json
import math

import numpy as np
import pytest

from nsbandit import harness
from nsbandit.config import ConfigError, parse_config


def config(**kw):
    tree = {"T": 200, "runs": 3, "master_seed": 4, "env": {"kind": "abrupt", "K": 3, "B_T": 2},
            "policies": ["ds-ts", "random"]}
    tree.update(kw)
    return parse_config(tree)


class TestAutoTune:
    def meta(self, setting="abrupt", T=100_000, K=5, B_T=10, mu_max=1.0):
        return harness.EnvMeta(setting, T, K, B_T, mu_max)

    def test_dsts(self):
        p, notes = harness.auto_tune("ds-ts", self.meta())
        assert p["gamma"] == pytest.approx(0.99, abs=1e-15)
        assert p["tau_max"] == 0.2
        assert "gamma" in notes

    def test_dsucb(self):
        p, _ = harness.auto_tune("ds-ucb", self.meta())
        assert p["gamma"] == pytest.approx(0.9975, abs=1e-15)
        assert (p["B"], p["xi"]) == (1.0, 2 / 3)

    def test_swts_window(self):
        p, notes = harness.auto_tune("sw-ts", self.meta())
        assert p["window"] == 679
        assert "678.61" in notes["window"]
        assert harness.auto_tune("sw-ts", self.meta(T=20_000, B_T=5))[0]["window"] == 398

    def test_smooth_gamma(self):
        p, _ = harness.auto_tune("ds-ts", self.meta("smooth", T=10_000, B_T=1))
        assert p["gamma"] == pytest.approx(0.9, abs=1e-15)

    def test_mucb(self):
        p, _ = harness.auto_tune("m-ucb", self.meta())
        assert p["window"] == 800
        assert p["threshold"] == pytest.approx(math.sqrt(400 * math.log(2 * 5 * 1e10)))
        assert p["explore_frac"] == pytest.approx(math.sqrt(5 * 10 * math.log(1e5) / 1e5))

    def test_exp3s(self):
        p, _ = harness.auto_tune("exp3s", self.meta())
        assert p["alpha"] == 1e-5 and p["gamma_mix"] == 1.0
        p, _ = harness.auto_tune("exp3s", self.meta(), {"grouping": "auer"})
        want = math.sqrt(5 * (math.e + 10 * math.log(5e5)) / ((math.e - 1) * 1e5))
        assert p["gamma_mix"] == pytest.approx(want)
        assert "grouping" not in p

    def test_given_values_win(self):
        p, notes = harness.auto_tune("ds-ts", self.meta(), {"gamma": 0.95})
        assert p["gamma"] == 0.95 and "gamma" not in notes

    def test_mu_max_from_env(self):
        cfg = parse_config({"T": 100, "env": {"kind": "smooth", "K": 5, "sigma": 0.01, "scaled": True},
                            "policies": ["ds-ts"]})
        assert harness.resolve_policies(cfg)["ds-ts"][1]["tau_max"] == pytest.approx(0.1)


class TestRunExperiment:
    def test_single_run_zero_width(self):
        res = harness.run_experiment(config(runs=1))
        for c in res.curves.values():
            np.testing.assert_array_equal(c.ci_low, c.mean)
            np.testing.assert_array_equal(c.ci_high, c.mean)

    def test_oracle_curve_zero(self):
        res = harness.run_experiment(config(policies=["oracle", "random"]))
        assert np.all(res.curves["oracle"].mean == 0)

    def test_curve_invariants(self):
        res = harness.run_experiment(config(runs=7))
        for c in res.curves.values():
            assert np.all(c.ci_low <= c.mean) and np.all(c.mean <= c.ci_high)
            assert np.all(np.diff(c.mean) >= 0)

    def test_aggregation_matches_direct(self):
        cfg = config(runs=9, batch_size=4)
        res = harness.run_experiment(cfg)
        finals = res.final_regrets["ds-ts"]
        assert len(finals) == 9
        c = res.curves["ds-ts"]
        assert c.mean[-1] == pytest.approx(finals.mean(), rel=1e-12)
        assert c.se[-1] == pytest.approx(finals.std(ddof=1) / 3, rel=1e-9)

    def test_run_values_independent_of_chunking(self):
        a = harness.run_experiment(config(runs=6, batch_size=2)).final_regrets["ds-ts"]
        b = harness.run_experiment(config(runs=6, batch_size=6)).final_regrets["ds-ts"]
        np.testing.assert_array_equal(a, b)

    def test_jobs_invariance(self):
        cfg = config(runs=5, batch_size=2)
        a = harness.run_experiment(cfg, jobs=1)
        b = harness.run_experiment(cfg, jobs=3)
        for k in a.curves:
            np.testing.assert_array_equal(a.curves[k].mean, b.curves[k].mean)
            np.testing.assert_array_equal(a.curves[k].se, b.curves[k].se)

    def test_fixed_instance(self):
        res = harness.run_experiment(config(fixed_instance=True, policies=["oracle"]))
        assert "env_instance" in res.metadata

    def test_metadata_records_every_tuned_value(self):
        cfg = config(policies=["ds-ts", "sw-ts", "ds-ucb", "m-ucb", "exp3s", "ts", "random"], T=2000)
        md = harness._metadata(cfg, harness.resolve_policies(cfg))
        assert md["policies"]["sw-ts"]["params"]["window"] == round(2 * math.sqrt(2000 * math.log(2000) / 2))
        assert md["log_base"] == "natural"
        assert set(md["policies"]["ds-ts"]["params"]) == {"gamma", "tau_max"}
        json.dumps(md)


class TestDeltaSweep:
    def cfg(self, runs=10):
        return parse_config({"T": 400, "runs": runs, "env": {"kind": "gap", "K": 3, "B_T": 2, "gap": 0.1},
                             "policies": ["random", "oracle"]})

    def test_grid_rows(self):
        rows = harness.delta_sweep(self.cfg(), [0.05, 0.2])
        assert [(r["delta"], r["policy"]) for r in rows] == [
            (0.05, "random"), (0.05, "oracle"), (0.2, "random"), (0.2, "oracle")]

    def test_random_closed_form(self):
        for r in harness.delta_sweep(self.cfg(40), [0.05, 0.2]):
            if r["policy"] == "random":
                assert abs(r["final_mean"] - r["delta"] * 400 * 2 / 3) <= 3 * r["se"]
            else:
                assert r["final_mean"] == 0

    def test_small_gap_limit(self):
        rows = harness.delta_sweep(self.cfg(), [1e-6])
        assert all(r["final_mean"] <= 400 * 1e-6 for r in rows)

    def test_needs_gap_env(self):
        with pytest.raises(ConfigError):
            harness.delta_sweep(config(), [0.1])


def test_ci_coverage():
    cfg = parse_config({"T": 100, "runs": 100, "env": {"kind": "gap", "K": 2, "B_T": 1, "gap": 0.2},
                        "policies": ["random"], "batch_size": 100})
    hits = 0
    for seed in range(100):
        cfg.master_seed = seed
        c = harness.run_experiment(cfg).curves["random"]
        hits += c.ci_low[-1] <= 0.2 * 100 / 2 <= c.ci_high[-1]
    assert hits >= 90


class TestPreconditions:
    def test_smooth_feasible_and_not(self):
        tree = {"T": 10_000, "env": {"kind": "smooth", "K": 5, "sigma": 0.001}, "policies": ["ds-ts"]}
        assert harness.theory_preconditions(parse_config(tree)) == []
        tree["policies"] = [{"name": "ds-ts", "gamma": 0.99}]
        (msg,) = harness.theory_preconditions(parse_config(tree))
        assert "2*sigma*D(gamma) >= Delta/3" in msg

    def test_gamma_domain(self):
        cfg = config(T=4, env={"K": 2, "B_T": 1})
        (msg,) = harness.theory_preconditions(cfg)
        assert "gamma" in msg

    def test_tau_floor(self):
        cfg = config(policies=[{"name": "ds-ts", "tau_max": 0.01, "gamma": 0.9}])
        (msg,) = harness.theory_preconditions(cfg)
        assert "tau_max" in msg


class TestBundle:
    def test_files(self, tmp_path):
        res = harness.run_experiment(config())
        paths = harness.write_bundle(res, tmp_path, 7)
        lines = paths["curves"].read_text().split("\n")
        assert lines[0] == "t,policy,mean_regret,ci_low,ci_high"
        ts = list(range(7, 201, 7)) + [200]
        assert len(lines) - 2 == 2 * len(ts)
        assert [int(l.split(",")[0]) for l in lines[1:1 + len(ts)]] == ts
        summary = json.loads(paths["summary"].read_text())
        assert summary["random"]["final_mean_regret"] == res.curves["random"].final
        assert b"\r" not in paths["curves"].read_bytes()
