"""Run the fuzzed lemma checks and the smooth-environment assumption checks.

These inequalities hold for every pull sequence, so any reported
counterexample points at a bug in the implementation being checked.
"""
from nsbandit import checks

print("lemma suite (100 random instances):")
for line in checks.lemma_suite(100).lines:
    print("  " + line)

print("\nsinusoidal environment, K=5, T=1e4, sigma=1e-3:")
for line in checks.env_suite().lines:
    print("  " + line)
