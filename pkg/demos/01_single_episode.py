"""Play one episode of several policies on the same piecewise-stationary instance.

Every policy sees the same reward for a given (round, arm), so the differences
below come from the policies alone.
"""
import numpy as np

from nsbandit import abrupt_generate, make_policy, run_episode
from nsbandit.rng import RngStream

K, T, B_T = 5, 20_000, 5
env = abrupt_generate(K, T, B_T, rng=RngStream(2024, (0,)))
print("phase starts:", env.breakpoints.tolist())
print("best arm per phase:", env.phase_means.argmax(axis=1).tolist())

policies = {
    "ds-ts": {"gamma": 1 - np.sqrt(B_T / T), "tau_max": 0.2},
    "ts": {},
    "sw-ts": {"window": 398},
    "random": {},
}
for name, params in policies.items():
    pol = make_policy(name, K, params, rngs=RngStream(2024, (2, len(name))))
    trace = run_episode(pol, env, rng=RngStream(2024, (1,)))
    at_changes = [trace.cum_regret[b - 2] for b in env.breakpoints[1:]]
    print(f"{name:7s} final regret {trace.cum_regret[-1]:8.1f}   at phase ends "
          + " ".join(f"{r:6.0f}" for r in at_changes))

# DS-TS forgets: right after a change its discounted counts shrink and the
# sampling spread grows back towards tau_max.
pol = make_policy("ds-ts", K, policies["ds-ts"], rngs=RngStream(7))
run_episode(pol, env, T=env.breakpoints[1] - 1, rng=RngStream(8))
print("discounted counts at the first change:", np.round(pol.posterior.N[0], 1))
print("sampling std-devs:", np.round(pol.posterior.tau[0], 3))
