"""Monte-Carlo regret curves with confidence bands, then the same run through the CLI.

    python demos/02_regret_experiment.py

The full 100-run, T = 100000 setting is in configs/abrupt_k5_b10.toml; this
script uses the desk-scale config so it finishes in seconds.
"""
from pathlib import Path

from nsbandit import cli, harness
from nsbandit.config import load_config

here = Path(__file__).parent
cfg = load_config(here / "configs" / "abrupt_desk.toml", ["runs=20"])
result = harness.run_experiment(cfg)

print("tuned parameters:")
for label, info in result.metadata["policies"].items():
    print(f"  {label:6s} {info['params']}")
print("\nmean cumulative regret (95% band):")
for t in (1000, 5000, 10_000, 20_000):
    cells = [f"{label} {c.mean[t - 1]:7.1f} [{c.ci_low[t - 1]:.0f}, {c.ci_high[t - 1]:.0f}]"
             for label, c in result.curves.items()]
    print(f"  t={t:6d}  " + "   ".join(cells))

# The CLI writes curves.csv / summary.json / metadata.json; rerunning gives identical bytes.
out = here / "results" / "demo_run"
cli.main(["run", str(here / "configs" / "abrupt_desk.toml"), "runs=20", "--out", str(out), "--jobs", "1"])
print("\nplot with e.g.: pandas.read_csv('curves.csv').pivot(index='t', columns='policy', "
      "values='mean_regret').plot()")
