"""Evaluate the closed-form regret bounds and see which discount factors they admit.

The constants are astronomically large at any practical horizon; what is
informative is the structure: how the terms scale and when the smooth-setting
condition on gamma fails.
"""
import math

from nsbandit import theory

p = theory.TheoryParams(gamma=theory.gamma_for_abrupt(100_000, 10), T=100_000, B_T=10, Delta_T=0.1)
rep = theory.theorem1_bound(p)
print("abrupt setting, gamma = 1 - sqrt(B_T/T) =", p.gamma)
for k, v in rep.components.items():
    print(f"  {k:22s} {v:.4e}")

print("\nshrinking the gap inflates the growth term as 1/Delta_T^2:")
for d in (0.4, 0.2, 0.1, 0.05):
    v = theory.theorem1_bound(theory.TheoryParams(gamma=0.99, T=100_000, B_T=10, Delta_T=d)).value
    print(f"  Delta_T={d:<5} bound={v:.3e}")

print("\nsmooth setting, T=1e4, sigma=1e-3: which discount factors are admissible?")
T, sigma = 10_000, 1e-3
for label, g in (("1 - 1/sqrt(T)", 1 - 1 / math.sqrt(T)), ("1 - 10/sqrt(T)", 1 - 10 / math.sqrt(T))):
    lhs = 2 * sigma * theory.d_gamma(g)
    try:
        v = theory.theorem2_bound(theory.TheoryParams(gamma=g, T=T, sigma=sigma, Delta=0.3, beta=1.0,
                                                      F_a2=4 * 5 / (sigma * 4))).value
        verdict = f"feasible, bound {v:.3e}"
    except theory.InfeasibleParameters as e:
        verdict = f"infeasible ({e.condition})"
    print(f"  gamma = {label:15s} 2 sigma D(gamma) = {lhs:.4f}  -> {verdict}")

lo, hi = theory.beta_feasible_range(0.3, 1e-4, 100_000, 5, 10)
print(f"\nadmissible beta for Delta=0.3, sigma=1e-4, T=1e5: [{lo:.4f}, {hi}]")
