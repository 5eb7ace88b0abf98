"""Monte-Carlo regret experiments.

Replications are simulated in fixed chunks of ``batch_size`` runs.  Each
chunk is reduced to per-round sums and centred sums of squares of the
cumulative regret, and chunks are merged in run-index order.  Chunking does
not depend on the number of worker processes, so ``jobs`` never changes a
result.

Stream layout for run ``r`` (seed = ``master_seed``):

* ``(r, ENV_INSTANCE)`` draws the environment instance (run 0's stream when
  ``fixed_instance``),
* ``(r, ENV_REWARD)`` draws the reward noise shared by all policies,
* ``(r, POLICY, crc32(label))`` drives one policy.
"""
from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import __version__, theory
from .config import ConfigError, ExperimentConfig
from .core import run_batch
from .environments import RewardFamily, SmoothEnv, abrupt_generate, gap_generate
from .policies import make_policy
from .rng import ENV_INSTANCE, ENV_REWARD, POLICY, RngStream, label_key

__all__ = [
    "EnvMeta",
    "AggregateCurve",
    "ExperimentResult",
    "env_meta",
    "build_env",
    "auto_tune",
    "resolve_policies",
    "theory_preconditions",
    "run_experiment",
    "delta_sweep",
    "write_bundle",
]

Z95 = 1.96


@dataclass(frozen=True)
class EnvMeta:
    """What tuning rules may know about the environment."""

    setting: str
    T: int
    K: int
    B_T: int
    mu_max: float


def env_meta(cfg: ExperimentConfig) -> EnvMeta:
    e = cfg.env
    if e.kind == "smooth":
        cap = 0.5 if e.scaled else 1.0
        return EnvMeta("smooth", cfg.T, e.K, 1, cap)
    cap = e.mu_max_cap if e.kind == "abrupt" else 1.0
    return EnvMeta("abrupt", cfg.T, e.K, e.B_T, cap)


def build_env(cfg: ExperimentConfig, rng):
    e = cfg.env
    family = RewardFamily(e.reward, e.concentration)
    if e.kind == "abrupt":
        return abrupt_generate(e.K, cfg.T, e.B_T, rng, mu_max_cap=e.mu_max_cap, family=family)
    if e.kind == "gap":
        return gap_generate(e.K, cfg.T, e.B_T, e.gap, rng, base=e.base, family=family)
    if e.scaled:
        return SmoothEnv.scaled(e.K, cfg.T, e.sigma, family=family)
    return SmoothEnv(e.K, cfg.T, e.sigma, family=family)


def _exp3s_gamma(K, T, B_T, grouping):
    lkt = math.log(K * T)
    if grouping == "literal":
        val = math.sqrt(K * (math.e + B_T * lkt / ((math.e - 1) * T)))
    elif grouping == "auer":
        val = math.sqrt(K * (math.e + B_T * lkt) / ((math.e - 1) * T))
    else:
        raise ValueError("grouping must be 'literal' or 'auer'")
    return min(1.0, val)


def auto_tune(name: str, meta: EnvMeta, given: dict | None = None):
    """Fill unspecified parameters of policy ``name`` from the horizon and breakpoint count.

    Returns ``(params, notes)``; ``notes`` records formulas and roundings.
    Logarithms are natural.
    """
    given = dict(given or {})
    T, K, B = meta.T, meta.K, meta.B_T
    notes = {}
    out = {}
    if name == "ds-ts":
        if meta.setting == "smooth":
            out["gamma"] = 1.0 - 10.0 / math.sqrt(T)
            notes["gamma"] = "1 - 10/sqrt(T)"
        else:
            out["gamma"] = 1.0 - math.sqrt(B / T)
            notes["gamma"] = "1 - sqrt(B_T/T)"
        out["tau_max"] = meta.mu_max / 5.0
        notes["tau_max"] = f"mu_max/5 with mu_max={meta.mu_max}"
    elif name == "ds-ucb":
        out.update(gamma=1.0 - math.sqrt(B / T) / 4.0, B=1.0, xi=2.0 / 3.0)
        notes["gamma"] = "1 - sqrt(B_T/T)/4"
    elif name == "sw-ts":
        raw = 2.0 * math.sqrt(T * math.log(T) / B)
        out["window"] = max(1, round(raw))
        notes["window"] = f"round(2 sqrt(T ln T / B_T)) = round({raw:.6f})"
    elif name == "m-ucb":
        w = int(given.get("window", 800))
        out["window"] = 800
        out["threshold"] = math.sqrt(w / 2.0 * math.log(2.0 * K * T * T))
        frac = math.sqrt(K * B * math.log(T) / T)
        out["explore_frac"] = min(frac, 0.5)
        notes["threshold"] = "sqrt((w/2) ln(2 K T^2))"
        notes["explore_frac"] = "sqrt(K B_T ln T / T)" + (" clipped to 0.5" if frac > 0.5 else "")
    elif name == "exp3s":
        grouping = given.pop("grouping", "literal")
        out["alpha"] = 1.0 / T
        out["gamma_mix"] = _exp3s_gamma(K, T, B, grouping)
        notes["gamma_mix"] = f"min(1, ...) with {grouping} grouping"
    given.pop("grouping", None)
    out.update(given)
    for k in given:
        notes.pop(k, None)
    return out, notes


def resolve_policies(cfg: ExperimentConfig):
    """``{label: (name, params, notes)}`` with every tuned value concrete."""
    meta = env_meta(cfg)
    return {p.label: (p.name, *auto_tune(p.name, meta, p.params)) for p in cfg.policies}


def theory_preconditions(cfg: ExperimentConfig, resolved=None) -> list:
    """Failed theorem preconditions for the DS-TS policies in ``cfg`` (empty when all hold)."""
    resolved = resolved or resolve_policies(cfg)
    failures = []
    for label, (name, params, _) in resolved.items():
        if name != "ds-ts":
            continue
        g, tau = params["gamma"], params["tau_max"]
        if not theory.GAMMA_MIN < g < 1:
            failures.append(f"{label}: gamma={g:.6g} not in (1 - 1/e, 1)")
            continue
        if tau < theory.TAU_MIN:
            failures.append(f"{label}: tau_max={tau:.6g} < 1/(12 sqrt 2)")
        if cfg.env.kind == "smooth":
            # some Delta with 2 sigma D(gamma) < Delta/3 <= Delta_0 = 1/3 must exist
            lhs = 2.0 * cfg.env.sigma * theory.d_gamma(g)
            if not lhs < 1.0 / 3.0:
                failures.append(f"{label}: 2*sigma*D(gamma) >= Delta/3 for every Delta <= 3*Delta_0 "
                                f"(2*sigma*D(gamma) = {lhs:.6g})")
    return failures


@dataclass
class AggregateCurve:
    """Pointwise mean cumulative regret over runs with a 95% normal-approximation band."""

    mean: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray
    se: np.ndarray
    runs: int

    @classmethod
    def from_moments(cls, n, total, m2):
        mean = total / n
        if n > 1:
            se = np.sqrt(np.maximum(m2, 0.0) / (n - 1)) / math.sqrt(n)
        else:
            se = np.zeros_like(mean)
        return cls(mean, mean - Z95 * se, mean + Z95 * se, se, n)

    @property
    def final(self) -> float:
        return float(self.mean[-1])


@dataclass
class ExperimentResult:
    curves: dict
    final_regrets: dict
    metadata: dict


def _chunk_worker(args):
    cfg, resolved, runs = args
    seed = cfg.master_seed
    envs = [build_env(cfg, RngStream(seed, (0 if cfg.fixed_instance else r, ENV_INSTANCE)))
            for r in runs]
    reward_rngs = [RngStream(seed, (r, ENV_REWARD)) for r in runs]
    policies = []
    for label, (name, params, _) in resolved.items():
        rngs = [RngStream(seed, (r, POLICY, label_key(label))) for r in runs]
        policies.append(make_policy(name, cfg.env.K, params, rngs=rngs, envs=envs))
    inst, _ = run_batch(policies, envs, cfg.T, reward_rngs)
    out = {}
    for label, x in zip(resolved, inst):
        np.cumsum(x, axis=1, out=x)
        total = x.sum(axis=0)
        m2 = ((x - total / len(runs)) ** 2).sum(axis=0)
        out[label] = (len(runs), total, m2, x[:, -1].copy())
    return out


def _merge(acc, part):
    if acc is None:
        return part
    n_a, s_a, m_a, f_a = acc
    n_b, s_b, m_b, f_b = part
    n = n_a + n_b
    delta = s_b / n_b - s_a / n_a
    return n, s_a + s_b, m_a + m_b + delta * delta * (n_a * n_b / n), np.concatenate([f_a, f_b])


def run_experiment(cfg: ExperimentConfig, jobs: int = 1) -> ExperimentResult:
    """Run every configured policy ``cfg.runs`` times and aggregate the regret curves."""
    resolved = resolve_policies(cfg)
    chunks = [list(range(s, min(s + cfg.batch_size, cfg.runs))) for s in range(0, cfg.runs, cfg.batch_size)]
    tasks = [(cfg, resolved, c) for c in chunks]
    acc = {label: None for label in resolved}
    if jobs > 1 and len(chunks) > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, len(chunks))) as pool:
            parts = pool.map(_chunk_worker, tasks)
            for part in parts:
                for label in acc:
                    acc[label] = _merge(acc[label], part[label])
    else:
        for task in tasks:
            part = _chunk_worker(task)
            for label in acc:
                acc[label] = _merge(acc[label], part[label])
    curves = {label: AggregateCurve.from_moments(n, s, m2) for label, (n, s, m2, _) in acc.items()}
    finals = {label: v[3] for label, v in acc.items()}
    return ExperimentResult(curves, finals, _metadata(cfg, resolved))


def _metadata(cfg, resolved):
    meta = {
        "tool": "nsbandit",
        "version": __version__,
        "config": cfg.to_dict(),
        "env_meta": vars(env_meta(cfg)),
        "policies": {label: {"name": name, "params": params, "tuning": notes}
                     for label, (name, params, notes) in resolved.items()},
        "seeds": {
            "master_seed": cfg.master_seed,
            "generator": "numpy Philox keyed by SeedSequence(master_seed, spawn_key=stream_id)",
            "streams": {"env_instance": "(run, 0)", "env_reward": "(run, 1)",
                        "policy": "(run, 2, crc32(label))"},
        },
        "log_base": "natural",
        "ci": "normal approximation: mean +/- 1.96 * sd/sqrt(runs), sd with ddof=1",
        "rounding": "integer-valued tuned parameters are rounded to nearest",
        "emit_every": cfg.thinning,
        "batch_size": cfg.batch_size,
    }
    if cfg.fixed_instance:
        env = build_env(cfg, RngStream(cfg.master_seed, (0, ENV_INSTANCE)))
        meta["env_instance"] = env.describe()
    return meta


def delta_sweep(cfg: ExperimentConfig, deltas, jobs: int = 1) -> list:
    """Final mean regret per policy for each gap on the grid (gap environments only).

    Rows are ``{"delta", "policy", "final_mean", "se", "runs"}`` in grid order.
    """
    if cfg.env.kind != "gap":
        raise ConfigError("env.kind", "delta_sweep needs a gap environment")
    rows = []
    for d in deltas:
        c = replace(cfg, env=replace(cfg.env, gap=float(d)))
        res = run_experiment(c, jobs=jobs)
        for label, curve in res.curves.items():
            rows.append({"delta": float(d), "policy": label, "final_mean": curve.final,
                         "se": float(curve.se[-1]), "runs": curve.runs})
    return rows


def _fmt(x) -> str:
    return format(float(x), ".17g")


def _emitted_rounds(T, every):
    ts = list(range(every, T + 1, every))
    if not ts or ts[-1] != T:
        ts.append(T)
    return ts


def write_bundle(result: ExperimentResult, out_dir, emit_every: int | None = None) -> dict:
    """Write ``curves.csv``, ``summary.json`` and ``metadata.json``; returns their paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    every = emit_every or result.metadata["emit_every"]
    T = len(next(iter(result.curves.values())).mean)
    ts = _emitted_rounds(T, every)
    paths = {"curves": out / "curves.csv", "summary": out / "summary.json", "metadata": out / "metadata.json"}
    with open(paths["curves"], "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "policy", "mean_regret", "ci_low", "ci_high"])
        for label, c in result.curves.items():
            for t in ts:
                i = t - 1
                w.writerow([t, label, _fmt(c.mean[i]), _fmt(c.ci_low[i]), _fmt(c.ci_high[i])])
    summary = {label: {"final_mean_regret": c.final, "ci_low": float(c.ci_low[-1]),
                       "ci_high": float(c.ci_high[-1]), "se": float(c.se[-1]), "runs": c.runs}
               for label, c in result.curves.items()}
    for key, obj in (("summary", summary), ("metadata", result.metadata)):
        with open(paths[key], "w", newline="\n", encoding="utf-8") as fh:
            json.dump(obj, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return paths
