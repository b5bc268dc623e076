"""Flat dotted-key run configuration: parsing, overrides, hashing.

A config file is plain text, one `key = value` per line, `#` comments.
Dotted prefixes group options: `lgso.*`, `numdiff.*`, `score_fn.*`,
`surrogate.*`, `problem.*`, `bias.*`. Values use JSON literals where they
parse as such, otherwise bare strings.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import replace

from .baselines import NumDiffConfig, ScoreFnConfig, run_numdiff, run_score_fn
from .loop import LgsoConfig, default_config_for, run_lgso
from .problems import get_problem, list_problems
from .surrogate import SurrogateConfig

OUTPUT_DIR_ENV = "LGSO_OUTPUT_DIR"

TOP_KEYS = {"problem", "method", "seed", "budget", "output_dir", "parallelism", "label"}
SECTIONS = {"problem", "lgso", "numdiff", "score_fn", "surrogate", "bias", "sweep"}
METHODS = {"lgso", "numdiff", "score_fn"}


class ConfigError(ValueError):
    """Bad run configuration; the CLI turns this into exit code 1."""


def parse_value(text):
    text = text.strip()
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def load_config_file(path):
    """Read `key = value` lines into a flat dict, keeping file order."""
    cfg = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
            key, _, value = line.partition("=")
            key = key.strip()
            if not key:
                raise ConfigError(f"{path}:{lineno}: empty key")
            cfg[key] = parse_value(value)
    return cfg


def apply_overrides(cfg, sets):
    """Apply `key=value` override strings in order."""
    out = dict(cfg)
    for item in sets or []:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        key, _, value = item.partition("=")
        key = key.strip()
        if not key:
            raise ConfigError(f"override {item!r} has an empty key")
        out[key] = parse_value(value)
    return out


# keys that cannot change results, excluded from the hash so reruns with a
# different output location or fan-out degree keep the same provenance id
NON_SEMANTIC_KEYS = {"output_dir", "label", "parallelism"}


def config_hash(cfg):
    """Stable short hash of the result-determining part of the config."""
    semantic = {k: v for k, v in cfg.items() if k not in NON_SEMANTIC_KEYS}
    canon = json.dumps(semantic, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(canon.encode()).hexdigest()[:12]


def section(cfg, name):
    prefix = name + "."
    return {k[len(prefix):]: v for k, v in cfg.items() if k.startswith(prefix)}


def _validate_keys(cfg):
    for key in cfg:
        head = key.partition(".")[0]
        if "." in key:
            if head not in SECTIONS:
                raise ConfigError(f"unknown config section {head!r} in {key!r}")
        elif key not in TOP_KEYS:
            raise ConfigError(f"unknown config key {key!r}")


def _build_dataclass(cls, defaults, options, *, what):
    fields = cls.__dataclass_fields__
    for key in options:
        if key not in fields:
            raise ConfigError(f"unknown {what} option {key!r}")
    try:
        return replace(defaults, **options) if options else defaults
    except (TypeError, ValueError) as err:
        raise ConfigError(f"bad {what} option: {err}") from err


class Run:
    """A fully resolved run: problem, method config, runner callable."""

    def __init__(self, cfg):
        _validate_keys(cfg)
        self.raw = dict(cfg)
        self.hash = config_hash(self.raw)
        name = cfg.get("problem")
        if not name:
            raise ConfigError("config is missing 'problem'")
        if name not in list_problems():
            raise ConfigError(
                f"unknown problem {name!r}, available: {', '.join(list_problems())}")
        try:
            self.problem = get_problem(name, **section(cfg, "problem"))
        except (TypeError, ValueError) as err:
            raise ConfigError(f"bad problem options: {err}") from err

        self.method = cfg.get("method", "lgso")
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}, expected one of {sorted(METHODS)}")
        self.seed = cfg.get("seed", 0)
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError(f"seed must be a non-negative integer, got {self.seed!r}")
        self.budget = cfg.get("budget")
        if self.budget is not None and not (isinstance(self.budget, (int, float)) and self.budget >= 0):
            raise ConfigError(f"budget must be a non-negative number, got {self.budget!r}")
        self.parallelism = cfg.get("parallelism", 1)
        if not isinstance(self.parallelism, int) or self.parallelism < 1:
            raise ConfigError(f"parallelism must be a positive integer, got {self.parallelism!r}")
        self.output_dir = os.environ.get(OUTPUT_DIR_ENV) or cfg.get("output_dir", ".")
        self.label = cfg.get("label") or f"{self.method}_{self.problem.name}_seed{self.seed}"
        self.config = self._method_config(cfg)

    def _method_config(self, cfg):
        common = {"seed": self.seed, "budget": self.budget}
        if self.method == "lgso":
            surrogate = _build_dataclass(SurrogateConfig, SurrogateConfig(),
                                         section(cfg, "surrogate"), what="surrogate")
            defaults = replace(default_config_for(self.problem), surrogate=surrogate, **common)
            return _build_dataclass(LgsoConfig, defaults, section(cfg, "lgso"), what="lgso")
        if self.method == "numdiff":
            defaults = NumDiffConfig(**common)
            return _build_dataclass(NumDiffConfig, defaults, section(cfg, "numdiff"), what="numdiff")
        defaults = ScoreFnConfig(**common)
        return _build_dataclass(ScoreFnConfig, defaults, section(cfg, "score_fn"), what="score_fn")

    def execute(self):
        runner = {"lgso": run_lgso, "numdiff": run_numdiff, "score_fn": run_score_fn}[self.method]
        return runner(self.problem, self.config, self.parallelism)
