"""Experiment configuration: file loading, dotted overrides and validation.

A config is a TOML or JSON tree::

    T = 20000
    runs = 50
    master_seed = 1
    fixed_instance = false     # one environment instance shared by all runs
    batch_size = 20            # replications simulated together (part of the result)
    emit_every = 20            # CSV thinning; default max(1, T // 1000)
    out_dir = "results"

    [env]
    kind = "abrupt"            # abrupt | smooth | gap
    K = 5
    B_T = 5                    # abrupt / gap: number of phases
    reward = "bernoulli"       # bernoulli | beta
    concentration = 4.0        # beta only
    mu_max_cap = 1.0           # abrupt only
    # sigma = 0.001, scaled = false      (smooth)
    # gap = 0.1, base = 0.5              (gap)

    [[policies]]
    name = "ds-ts"             # parameters left out are auto-tuned
    [[policies]]
    name = "sw-ts"
    window = 400

``policies`` may also be a list of bare names.
"""
from __future__ import annotations

import json
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

__all__ = [
    "ConfigError",
    "ConfigParseError",
    "EnvSpec",
    "PolicySpec",
    "ExperimentConfig",
    "load_tree",
    "apply_overrides",
    "parse_config",
    "load_config",
]

ENV_KINDS = ("abrupt", "smooth", "gap")


class ConfigError(ValueError):
    """Invalid configuration; ``field`` is the dotted path of the offending entry."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class ConfigParseError(ValueError):
    def __init__(self, path, message, line=None, column=None):
        self.line = line
        self.column = column
        where = f" at line {line}, column {column}" if line is not None else ""
        super().__init__(f"cannot parse {path}{where}: {message}")


@dataclass
class EnvSpec:
    kind: str = "abrupt"
    K: int = 5
    B_T: int = 1
    reward: str = "bernoulli"
    concentration: float = 4.0
    mu_max_cap: float = 1.0
    sigma: float | None = None
    scaled: bool = False
    gap: float | None = None
    base: float = 0.5


@dataclass
class PolicySpec:
    name: str
    label: str
    params: dict = field(default_factory=dict)


@dataclass
class ExperimentConfig:
    T: int
    env: EnvSpec
    policies: list
    runs: int = 100
    master_seed: int = 0
    fixed_instance: bool = False
    batch_size: int = 20
    emit_every: int | None = None
    out_dir: str = "results"

    @property
    def thinning(self) -> int:
        return self.emit_every if self.emit_every is not None else max(1, self.T // 1000)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["policies"] = [{"name": p.name, "label": p.label, **p.params} for p in self.policies]
        return d


def load_tree(path) -> dict:
    """Read a TOML (``.toml``) or JSON file into a dict."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix.lower() == ".json":
        try:
            return json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigParseError(path, e.msg, e.lineno, e.colno) from None
    try:
        return tomllib.loads(text)
    except tomllib.TOMLDecodeError as e:
        line, col = _toml_position(e, text)
        raise ConfigParseError(path, str(e).split(" (at")[0], line, col) from None


def _toml_position(err, text):
    if getattr(err, "lineno", None) is not None:
        return err.lineno, err.colno
    import re

    m = re.search(r"line (\d+), column (\d+)", str(err))
    if m:
        return int(m.group(1)), int(m.group(2))
    return None, None


def _parse_value(raw: str):
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        low = raw.lower()
        if low in ("true", "false"):
            return low == "true"
        return raw


def apply_overrides(tree: dict, overrides) -> dict:
    """Apply ``a.b.c=value`` overrides in place; values are parsed as JSON when possible."""
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(item, "override must look like key.path=value")
        key, raw = item.split("=", 1)
        parts = key.strip().split(".")
        node = tree
        for i, part in enumerate(parts[:-1]):
            nxt = parts[i + 1]
            if isinstance(node, list):
                j = _index(node, part, key)
                if isinstance(node[j], str):
                    node[j] = {"name": node[j]}
                node = node[j]
                continue
            if part not in node or not isinstance(node[part], (dict, list)):
                node[part] = [] if nxt.isdigit() else {}
            node = node[part]
        last = parts[-1]
        if isinstance(node, list):
            node[_index(node, last, key)] = _parse_value(raw)
        elif not isinstance(node, dict):
            raise ConfigError(key, "cannot set a key below a scalar")
        else:
            node[last] = _parse_value(raw)
    return tree


def _index(seq, part, key):
    if not part.isdigit() or int(part) >= len(seq):
        raise ConfigError(key, f"no list element {part!r}")
    return int(part)


def _int(tree, key, default=None, *, minimum=None, where=""):
    v = tree.get(key, default)
    name = where + key
    if v is None:
        raise ConfigError(name, "is required")
    if isinstance(v, bool) or not isinstance(v, (int, float)) or int(v) != v:
        raise ConfigError(name, f"must be an integer, got {v!r}")
    v = int(v)
    if minimum is not None and v < minimum:
        raise ConfigError(name, f"must be >= {minimum}")
    return v


def _float(tree, key, default=None, *, where=""):
    v = tree.get(key, default)
    if v is None:
        return None
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(where + key, f"must be a number, got {v!r}")
    return float(v)


def _env(tree: dict, T: int) -> EnvSpec:
    if not isinstance(tree, dict):
        raise ConfigError("env", "must be a table")
    known = set(EnvSpec.__dataclass_fields__)
    extra = set(tree) - known
    if extra:
        raise ConfigError("env." + sorted(extra)[0], "unknown key")
    kind = tree.get("kind", "abrupt")
    if kind not in ENV_KINDS:
        raise ConfigError("env.kind", f"must be one of {ENV_KINDS}")
    spec = EnvSpec(
        kind=kind,
        K=_int(tree, "K", 5, minimum=2, where="env."),
        B_T=_int(tree, "B_T", 1, minimum=1, where="env."),
        reward=tree.get("reward", "bernoulli"),
        concentration=_float(tree, "concentration", 4.0, where="env."),
        mu_max_cap=_float(tree, "mu_max_cap", 1.0, where="env."),
        sigma=_float(tree, "sigma", None, where="env."),
        scaled=bool(tree.get("scaled", False)),
        gap=_float(tree, "gap", None, where="env."),
        base=_float(tree, "base", 0.5, where="env."),
    )
    if spec.reward not in ("bernoulli", "beta"):
        raise ConfigError("env.reward", "must be 'bernoulli' or 'beta'")
    if not spec.concentration > 0:
        raise ConfigError("env.concentration", "must be positive")
    if spec.B_T > T:
        raise ConfigError("env.B_T", f"exceeds the horizon T={T}")
    if not 0 < spec.mu_max_cap <= 1:
        raise ConfigError("env.mu_max_cap", "must lie in (0, 1]")
    if kind == "smooth":
        if spec.sigma is None or not spec.sigma > 0:
            raise ConfigError("env.sigma", "smooth environments need sigma > 0")
        if "B_T" in tree and spec.B_T != 1:
            raise ConfigError("env.B_T", "smooth environments have no breakpoints")
    if kind == "gap":
        if spec.gap is None or not 0 < spec.gap < 1:
            raise ConfigError("env.gap", "gap environments need gap in (0, 1)")
        if spec.base - spec.gap / 2 < 0 or spec.base + spec.gap / 2 > 1:
            raise ConfigError("env.base", "base +/- gap/2 must stay inside [0, 1]")
    return spec


def _policies(items) -> list:
    from .policies import POLICIES

    if not isinstance(items, list) or not items:
        raise ConfigError("policies", "must be a non-empty list")
    specs = []
    for k, item in enumerate(items):
        where = f"policies.{k}"
        if isinstance(item, str):
            item = {"name": item}
        if not isinstance(item, dict) or "name" not in item:
            raise ConfigError(where, "must be a name or a table with 'name'")
        item = dict(item)
        name = item.pop("name")
        if name not in POLICIES:
            raise ConfigError(where + ".name", f"unknown policy {name!r}; choose from {sorted(POLICIES)}")
        label = str(item.pop("label", name))
        params = item.pop("params", {})
        params.update(item)
        specs.append(PolicySpec(name, label, params))
    labels = [p.label for p in specs]
    if len(set(labels)) != len(labels):
        raise ConfigError("policies", "labels must be unique (set 'label' to run a policy twice)")
    return specs


def parse_config(tree: dict) -> ExperimentConfig:
    """Validate a config tree; raises :class:`ConfigError` naming the bad field."""
    if not isinstance(tree, dict):
        raise ConfigError("<root>", "must be a table")
    known = set(ExperimentConfig.__dataclass_fields__)
    extra = set(tree) - known
    if extra:
        raise ConfigError(sorted(extra)[0], "unknown key")
    T = _int(tree, "T", minimum=1)
    cfg = ExperimentConfig(
        T=T,
        env=_env(tree.get("env", {}), T),
        policies=_policies(tree.get("policies")),
        runs=_int(tree, "runs", 100, minimum=1),
        master_seed=_int(tree, "master_seed", 0, minimum=0),
        fixed_instance=bool(tree.get("fixed_instance", False)),
        batch_size=_int(tree, "batch_size", 20, minimum=1),
        emit_every=None if tree.get("emit_every") is None else _int(tree, "emit_every", minimum=1),
        out_dir=str(tree.get("out_dir", "results")),
    )
    return cfg


def load_config(path, overrides=()) -> ExperimentConfig:
    return parse_config(apply_overrides(load_tree(path), overrides))
