"""Final regret as the minimal gap grows, on gap-controlled instances.

Uniform play loses exactly gap * T * (K-1)/K in expectation, which the sweep
reproduces within Monte-Carlo error.
"""
from pathlib import Path

from nsbandit import harness
from nsbandit.config import load_config

cfg = load_config(Path(__file__).parent / "configs" / "gap.json", ["runs=10"])
rows = harness.delta_sweep(cfg, [0.02, 0.05, 0.1, 0.2, 0.3])
K, T = cfg.env.K, cfg.T
print(f"{'gap':>5s} {'policy':>8s} {'final':>9s} {'se':>7s}  uniform-play expectation")
for r in rows:
    exp = r["delta"] * T * (K - 1) / K
    print(f"{r['delta']:5.2f} {r['policy']:>8s} {r['final_mean']:9.1f} {r['se']:7.1f}  {exp:9.1f}")
