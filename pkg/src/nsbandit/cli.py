"""Command-line front end.

Subcommands::

    nsbandit run CONFIG [key.path=value ...] [--seed S] [--jobs N] [--out DIR]
    nsbandit bound [--setting abrupt|smooth] [--gamma G] [--t T] ...
    nsbandit gamma --t T (--bt B | --beta BETA)
    nsbandit check (--lemmas | --env)
    nsbandit dump-means CONFIG [overrides] [--seed S] [--run R] [--out FILE]

Exit codes: 0 success, 1 check failure, 2 usage or config error, 3 infeasible
parameters.
"""
from __future__ import annotations

import argparse
import csv
import math
import os
import sys
import warnings

from . import __version__, checks, harness, theory
from .config import ConfigError, ConfigParseError, apply_overrides, load_tree, parse_config
from .rng import ENV_INSTANCE, RngStream

EXIT_OK, EXIT_CHECK, EXIT_USAGE, EXIT_INFEASIBLE = 0, 1, 2, 3

SEED_ENV = "NSBANDIT_SEED"

# dependence of each algorithm's regret bound on the minimal gap
DELTA_T_SCALING = (
    ("CUSUM", "B_T/Delta_T^2 + sqrt(T B_T)"),
    ("SW-TS", "sqrt(T B_T)/Delta_T"),
    ("DS-UCB", "sqrt(T B_T)/Delta_T^2"),
    ("DS-TS", "sqrt(T B_T)/Delta_T^2"),
)

ABRUPT_ONLY = ("bt", "delta_t", "lemma_l")
SMOOTH_ONLY = ("delta", "sigma", "beta", "f", "delta0")


class UsageError(Exception):
    pass


def _err(msg):
    print(f"nsbandit: error: {msg}", file=sys.stderr)


def _sci(x):
    return format(x, ".6e")


def _load(path, overrides, seed=None):
    tree = load_tree(path)
    apply_overrides(tree, overrides)
    if seed is None and os.environ.get(SEED_ENV):
        seed = os.environ[SEED_ENV]
    if seed is not None:
        try:
            tree["master_seed"] = int(seed)
        except ValueError:
            raise ConfigError("master_seed", f"seed must be an integer, got {seed!r}") from None
    return parse_config(tree)


def cmd_run(args) -> int:
    cfg = _load(args.config, args.overrides, args.seed)
    if args.emit_every is not None:
        cfg.emit_every = args.emit_every
    resolved = harness.resolve_policies(cfg)
    failed = harness.theory_preconditions(cfg, resolved)
    for f in failed:
        print(f"theory precondition violated: {f}", file=sys.stderr)
    if failed and args.strict_theory:
        return EXIT_INFEASIBLE
    jobs = args.jobs if args.jobs is not None else (os.cpu_count() or 1)
    result = harness.run_experiment(cfg, jobs=max(1, jobs))
    out = args.out or cfg.out_dir
    paths = harness.write_bundle(result, out, cfg.thinning)
    for label, c in result.curves.items():
        print(f"{label:>10s}  final mean regret {c.final:.6g}  "
              f"95% CI [{c.ci_low[-1]:.6g}, {c.ci_high[-1]:.6g}]")
    print("wrote " + ", ".join(str(p) for p in paths.values()))
    return EXIT_OK


def _bound_params(args):
    setting = args.setting
    given = {k for k in ABRUPT_ONLY + SMOOTH_ONLY if getattr(args, k) not in (None, False)}
    wrong = given & set(SMOOTH_ONLY if setting == "abrupt" else ABRUPT_ONLY)
    if wrong:
        flags = ", ".join("--" + k.replace("_", "-") for k in sorted(wrong))
        raise UsageError(f"{flags} not valid with --setting {setting}")
    if setting == "abrupt":
        T = args.t if args.t is not None else 100_000
        B_T = args.bt if args.bt is not None else 10
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            gamma = args.gamma if args.gamma is not None else theory.gamma_for_abrupt(T, B_T)
        return theory.TheoryParams(gamma=gamma, T=T, B_T=B_T,
                                   Delta_T=args.delta_t if args.delta_t is not None else 0.1,
                                   mu_max=args.mumax, tau_max=args.taumax)
    T = args.t if args.t is not None else 10_000
    sigma = args.sigma if args.sigma is not None else 1e-3
    K = args.k
    gamma = args.gamma if args.gamma is not None else 1.0 - 10.0 / math.sqrt(T)
    F = args.f if args.f is not None else 4 * K / (sigma * (K - 1))
    return theory.TheoryParams(gamma=gamma, T=T, sigma=sigma, F_a2=F,
                               Delta=args.delta if args.delta is not None else 0.3,
                               beta=args.beta if args.beta is not None else 1.0,
                               Delta_0=args.delta0 if args.delta0 is not None else 1.0 / 3.0,
                               mu_max=args.mumax, tau_max=args.taumax)


def cmd_bound(args) -> int:
    p = _bound_params(args)
    print(f"setting: {args.setting}  gamma={p.gamma!r}  T={p.T}  K={args.k}")
    if not theory.GAMMA_MIN < p.gamma < 1:
        print(f"D(gamma) = undefined (gamma outside (1 - 1/e, 1))")
        print("infeasible: gamma <= 1 - 1/e", file=sys.stderr)
        return EXIT_INFEASIBLE
    print(f"D(gamma) = {_sci(theory.d_gamma(p.gamma))}")
    try:
        rep = theory.theorem1_bound(p, lemma_l=args.lemma_l) if args.setting == "abrupt" \
            else theory.theorem2_bound(p)
    except theory.InfeasibleParameters as e:
        print(f"infeasible: {e.condition}: {e.detail}", file=sys.stderr)
        print(f"infeasible: {e.condition}")
        return EXIT_INFEASIBLE
    except theory.DomainError as e:
        print(f"infeasible: {e}", file=sys.stderr)
        return EXIT_INFEASIBLE
    for name, val in rep.components.items():
        if name != "D(gamma)":
            print(f"{name} = {_sci(val)}")
    print(f"per-arm bound = {_sci(rep.value)}")
    print(f"regret bound (K={args.k}) = {_sci(rep.regret_bound(args.k))}")
    print("feasibility:")
    print(f"  gamma in (1 - 1/e, 1): ok")
    print(f"  tau_max >= 1/(12 sqrt 2) = {theory.TAU_MIN:.6g}: ok")
    if args.setting == "abrupt":
        need = theory.tau_max_condition(p.gamma, p.Delta_T)
        print(f"  tau_max >= Delta_T/(n sqrt(log(1/(1-gamma)))) = {need:.6g}: "
              f"{'ok' if p.tau_max >= need else 'not met'}")
        print("Delta_T scaling of known bounds:")
        for name, tag in DELTA_T_SCALING:
            print(f"  {name:7s} O~({tag})")
    else:
        print(f"  2*sigma*D(gamma) = {rep.components['2*sigma*D(gamma)']:.6g} < Delta/3 = {p.Delta / 3:.6g}"
              f" <= Delta_0 = {p.Delta_0:.6g}: ok")
    return EXIT_OK


def cmd_gamma(args) -> int:
    if (args.bt is None) == (args.beta is None):
        raise UsageError("give exactly one of --bt (abrupt) or --beta (smooth)")
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", theory.GammaDomainWarning)
        g = theory.gamma_for_abrupt(args.t, args.bt) if args.bt is not None \
            else theory.gamma_for_smooth(args.t, args.beta)
    print(repr(g))
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    return EXIT_OK


def cmd_check(args) -> int:
    if args.lemmas:
        res = checks.lemma_suite(args.instances, args.seed)
    else:
        res = checks.env_suite(args.k, args.t, args.sigma, tuple(args.deltas), args.beta, scaled=args.scaled)
    for line in res.lines:
        print(line)
    if res.ok:
        return EXIT_OK
    name, (where, (t, i, lhs, rhs)) = next(iter(res.failures.items()))
    print(f"first counterexample ({name}, {where}): t={t} i={i} lhs={lhs!r} rhs={rhs!r}", file=sys.stderr)
    return EXIT_CHECK


def cmd_dump_means(args) -> int:
    cfg = _load(args.config, args.overrides, args.seed)
    env = harness.build_env(cfg, RngStream(cfg.master_seed, (args.run, ENV_INSTANCE)))
    means = env.means_matrix()
    fh = open(args.out, "w", newline="", encoding="utf-8") if args.out else sys.stdout
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t"] + [f"mu_{i + 1}" for i in range(env.K)])
        for t, row in enumerate(means, start=1):
            w.writerow([t] + [format(float(x), ".17g") for x in row])
    finally:
        if fh is not sys.stdout:
            fh.close()
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nsbandit", description="Non-stationary bandit experiments and bounds.")
    ap.add_argument("--version", action="version", version=f"nsbandit {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def config_args(p):
        p.add_argument("config", help="TOML or JSON experiment config")
        p.add_argument("overrides", nargs="*", help="dotted-key overrides, e.g. env.K=3 runs=10")
        p.add_argument("--seed", help=f"master seed (beats ${SEED_ENV} and the config)")

    p = sub.add_parser("run", help="run an experiment and write curves.csv, summary.json, metadata.json")
    config_args(p)
    p.add_argument("--jobs", type=int, help="worker processes (default: all cores)")
    p.add_argument("--out", help="output directory (default: config out_dir)")
    p.add_argument("--emit-every", type=int, help="CSV thinning interval")
    p.add_argument("--strict-theory", action="store_true",
                   help="exit 3 if a DS-TS policy violates a theorem precondition")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("bound", help="evaluate the regret bound and its components")
    p.add_argument("--setting", choices=("abrupt", "smooth"), default="abrupt")
    p.add_argument("--gamma", type=float)
    p.add_argument("--t", type=int)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--bt", type=int, help="number of breakpoints (abrupt)")
    p.add_argument("--delta-t", type=float, help="minimal gap at breakpoints (abrupt)")
    p.add_argument("--lemma-l", action="store_true", help="use L without the gamma^(1/(1-gamma)) factor")
    p.add_argument("--delta", type=float, help="gap threshold (smooth)")
    p.add_argument("--sigma", type=float, help="drift rate (smooth)")
    p.add_argument("--beta", type=float, help="near-tie growth exponent (smooth)")
    p.add_argument("--f", type=float, help="near-tie constant F (smooth)")
    p.add_argument("--delta0", type=float, help="largest admissible Delta/3 (smooth)")
    p.add_argument("--mumax", type=float, default=1.0)
    p.add_argument("--taumax", type=float, default=0.2)
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("gamma", help="discount factor suggested for a horizon")
    p.add_argument("--t", type=int, required=True)
    p.add_argument("--bt", type=int)
    p.add_argument("--beta", type=float)
    p.set_defaults(func=cmd_gamma)

    p = sub.add_parser("check", help="run deterministic checker suites")
    mode = p.add_mutually_exclusive_group(required=True)
    mode.add_argument("--lemmas", action="store_true", help="fuzz the deterministic inequalities")
    mode.add_argument("--env", action="store_true", help="check the smooth environment's assumptions")
    p.add_argument("--instances", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--t", type=int, default=10_000)
    p.add_argument("--sigma", type=float, default=0.001)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--deltas", type=float, nargs="+", default=[0.05, 0.1, 0.2])
    p.add_argument("--scaled", action="store_true")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("dump-means", help="write the T x K mean matrix as CSV")
    config_args(p)
    p.add_argument("--run", type=int, default=0, help="which run's instance to dump")
    p.add_argument("--out", help="output file (default: stdout)")
    p.set_defaults(func=cmd_dump_means)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as e:
        parser.print_usage(sys.stderr)
        _err(str(e))
        return EXIT_USAGE
    except ConfigParseError as e:
        _err(str(e))
        return EXIT_USAGE
    except ConfigError as e:
        _err(f"invalid config: {e}")
        return EXIT_USAGE
    except FileNotFoundError as e:
        _err(str(e))
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
