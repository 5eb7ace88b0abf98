"""Fuzz suites over the deterministic checkers in :mod:`nsbandit.theory`.

``lemma_suite`` draws random instances (arm count, horizon, discount,
breakpoints, means and a pull sequence) and runs the counting lemma, the
mean-drift inequality in both settings and the size bound on the
non-pseudo-stationary rounds.  ``env_suite`` checks the regularity
assumptions of the sinusoidal environment.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import theory
from .core import run_episode
from .environments import AbruptEnv, SmoothEnv
from .policies import DiscountedTS
from .rng import RngStream

__all__ = ["SuiteResult", "fuzz_instance", "lemma_suite", "env_suite"]


@dataclass
class SuiteResult:
    """Outcome per check name: number of checked items and the first counterexample."""

    checked: dict = field(default_factory=dict)
    failures: dict = field(default_factory=dict)
    lines: list = field(default_factory=list)

    def record(self, name, n, counterexample=None, where=""):
        self.checked[name] = self.checked.get(name, 0) + n
        if counterexample is not None and name not in self.failures:
            self.failures[name] = (where, counterexample)

    @property
    def ok(self) -> bool:
        return not self.failures


def _pulls(kind, K, T, rng, env=None, gamma=None, seed_stream=None):
    if kind == "uniform":
        return rng.integers(K, size=T)
    if kind == "sticky":
        # long runs on one arm make the discounted counts large and the drift bound tight
        out = np.empty(T, dtype=np.int64)
        arm = rng.integers(K)
        switch = rng.random(T) < rng.uniform(0.001, 0.05)
        fresh = rng.integers(K, size=T)
        for t in range(T):
            if switch[t]:
                arm = fresh[t]
            out[t] = arm
        return out
    pol = DiscountedTS(K, gamma, 0.2, rngs=[seed_stream.child(0)])
    return run_episode(pol, env, rng=seed_stream.child(1)).chosen


def fuzz_instance(seed: int, k: int):
    """Instance ``k`` of the suite: ``(env, gamma, pulls, A)``.  Abrupt for even ``k``, smooth otherwise."""
    stream = RngStream(seed, (k,))
    rng = stream.generator()
    K = int(rng.integers(2, 7))
    T = int(rng.integers(200, 2501))
    gamma = float(rng.uniform(theory.GAMMA_MIN + 0.01, 0.995))
    if k % 2 == 0:
        n_bp = int(rng.integers(0, 8))
        bp = np.unique(np.concatenate([[1], rng.integers(2, T + 1, size=n_bp)]))
        pm = rng.random((len(bp), K))
        env = AbruptEnv(K, T, bp, pm)
    else:
        env = SmoothEnv(K, T, float(10 ** rng.uniform(-4, -1.5)))
    kind = ("uniform", "sticky", "policy")[int(rng.integers(3))]
    pulls = _pulls(kind, K, T, rng, env, gamma, stream.child(9))
    # thresholds span the tiny regime and the analysis value
    A = float(rng.choice([rng.uniform(0.01, 2.0), rng.uniform(2.0, 50.0),
                          theory.a_gamma(gamma, float(rng.uniform(0.05, 0.5)))]))
    return env, gamma, pulls, A


def lemma_suite(n_instances: int = 100, seed: int = 0) -> SuiteResult:
    res = SuiteResult()
    for k in range(n_instances):
        env, gamma, pulls, A = fuzz_instance(seed, k)
        tag = f"instance {k} (K={env.K}, T={env.T}, gamma={gamma:.6g})"
        means = env.means_matrix()
        rep = theory.check_counting_lemma(pulls, env.K, gamma, A)
        res.record("counting lemma", rep.checked, rep.first(), tag)
        if env.setting == "smooth":
            rep = theory.check_lemma_mean_drift(pulls, env, gamma, setting="smooth")
            res.record("mean drift (smooth)", rep.checked, rep.first(), tag)
            continue
        rep = theory.check_lemma_mean_drift(pulls, means, gamma, setting="abrupt")
        res.record("mean drift (abrupt)", rep.checked, rep.first(), tag)
        cps = theory.change_points(means)
        pss = theory.pseudo_stationary_set(cps, env.T, gamma)
        size, cap = len(pss.S), len(cps) * pss.D
        res.record("non-stationary set size", 1,
                   None if size <= cap else (env.T, -1, float(size), cap), tag)
    for name, n in res.checked.items():
        bad = res.failures.get(name)
        if bad is None:
            res.lines.append(f"PASS {name}: {n} checks")
        else:
            where, (t, i, lhs, rhs) = bad
            res.lines.append(f"FAIL {name}: {where}: t={t}, i={i}, lhs={lhs!r}, rhs={rhs!r}")
    return res


def env_suite(K: int = 5, T: int = 10_000, sigma: float = 0.001, deltas=(0.05, 0.1, 0.2),
              beta: float = 1.0, delta0: float = 1.0 / 3.0, scaled: bool = False) -> SuiteResult:
    """Lipschitz scan and the near-tie count bound with ``F = 4K / (sigma (K-1))``."""
    env = SmoothEnv.scaled(K, T, sigma) if scaled else SmoothEnv(K, T, sigma)
    res = SuiteResult()
    step = theory.lipschitz_scan(env)
    ok = step <= sigma * (1 + 1e-12)
    res.record("Lipschitz", T - 1, None if ok else (int(T), -1, step, sigma))
    res.lines.append(f"{'PASS' if ok else 'FAIL'} Lipschitz: max one-round change {step:.6e} <= sigma {sigma:.6e}")
    F = 4 * K / (sigma * (K - 1))
    rep = theory.check_assumption2(env, deltas, F, beta, delta0)
    for d, size, cap, good in rep.rows:
        res.record("near-tie rounds", 1, None if good else (int(T), -1, float(size), cap), f"delta={d}")
        res.lines.append(f"{'PASS' if good else 'FAIL'} near-tie rounds: delta={d}: |H|={size} <= "
                         f"F*delta*T^beta={cap:.6e}")
    res.lines.append(f"info: order flips = {theory.sign_change_count(env)}, F = {F:.6e}, "
                     f"beta = {beta}, Delta_0 = {delta0:.6g}")
    return res
