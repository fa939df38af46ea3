"""
Delib Config — Experiment Configuration
=========================================

Reads TOML-shaped experiment files with the lark grammar in
config.lark and resolves them into an ExperimentConfig:

  # full-scale setup
  replications = 10000
  strategies = ["homogeneous", "random", "iter_golfer"]
  rules = ["av", "cc", "pav", "mes"]

  [population]
  n_maj = 80
  n_min = 20
  phi = 0.2

Overrides use the same value syntax: `replications=100`,
`population.phi=0.5` (or just `phi=0.5`), `strategies=[large, random]`.
"""

import os
import re
from enum import Enum
from dataclasses import dataclass, field, fields, replace
from typing import Any, Dict, Iterable, List, Optional, Tuple

from lark import Lark, Transformer, v_args
from lark.exceptions import UnexpectedInput

from delib.population import PopulationConfig
from delib.types import (
    CcTie, ConfigError, InvalidInputError, MesCompletion, MinorityRule, ParamSampling,
    RuleName, SpeechMode, Strategy, TiePolicy, parse_rule, parse_strategy,
)

__all__ = [
    "ConfigError", "ExperimentConfig", "apply_overrides", "load_config",
    "parse_config", "parse_value",
]

_GRAMMAR_PATH = os.path.join(os.path.dirname(__file__), "config.lark")

OUT_DIR_ENV = "DELIB_OUT_DIR"
DEFAULT_OUT_DIR = "results"
MAX_SEED = 2 ** 64


def _get_parser() -> Lark:
    with open(_GRAMMAR_PATH, "r") as f:
        grammar = f.read()
    return Lark(grammar, parser="lalr", start=["start", "override"], maybe_placeholders=True)


_parser = _get_parser()


# ── Transformer: parse-tree → entries ───────────────────────
@v_args(inline=True)
class ConfigTransformer(Transformer):
    """Turns the parse tree into ("section", name, line) / ("pair", key, value, line) tuples."""

    def start(self, *entries):
        return [e for e in entries if e is not None]

    def override(self, value):
        return value

    def section(self, name):
        return ("section", str(name), name.line)

    def pair(self, key, value):
        return ("pair", str(key), value, key.line)

    def string(self, tok):
        return str(tok)[1:-1].replace('\\"', '"').replace("\\\\", "\\")

    def number(self, tok):
        text = str(tok)
        if any(ch in text for ch in ".eE"):
            return float(text)
        return int(text)

    def true_lit(self):
        return True

    def false_lit(self):
        return False

    def bare(self, tok):
        return str(tok)

    def array(self, *items):
        return [item for item in items if item is not None]


def _syntax_error(err: UnexpectedInput, source_name: str) -> ConfigError:
    return ConfigError(f"{source_name}:{err.line}:{err.column}: syntax error")


def parse_config(text: str, source_name: str = "<config>") -> List[Tuple]:
    try:
        tree = _parser.parse(text + "\n", start="start")
    except UnexpectedInput as err:
        raise _syntax_error(err, source_name) from err
    return ConfigTransformer().transform(tree)


def parse_value(text: str) -> Any:
    """Parse one config value, e.g. `0.5`, `true`, `[av, cc]`, `"out dir"`."""
    try:
        tree = _parser.parse(text.strip(), start="override")
    except UnexpectedInput as err:
        raise ConfigError(f"cannot parse value {text!r}") from err
    return ConfigTransformer().transform(tree)


# ── ExperimentConfig ─────────────────────────────────────────

def _default_out_dir() -> str:
    return os.environ.get(OUT_DIR_ENV, DEFAULT_OUT_DIR)


@dataclass
class ExperimentConfig:
    population: PopulationConfig = field(default_factory=PopulationConfig)
    g: int = 10
    rounds: int = 5
    strategies: List[Strategy] = field(default_factory=lambda: [
        Strategy.HOMOGENEOUS, Strategy.HETEROGENEOUS, Strategy.RANDOM,
        Strategy.LARGE, Strategy.ITER_RANDOM, Strategy.ITER_GOLFER,
    ])
    rules: List[RuleName] = field(default_factory=lambda: list(RuleName))
    replications: int = 10000
    master_seed: int = 20230101
    eligibility_threshold: float = 0.9
    eligibility_cap: int = 1000
    mes_completion: MesCompletion = MesCompletion.AV
    cc_tie: CcTie = CcTie.AV
    tie_policy: TiePolicy = TiePolicy.RANDOM
    minority_rule: MinorityRule = MinorityRule.STRICT
    speech_mode: SpeechMode = SpeechMode.IMMEDIATE
    golfer_swap_passes: int = 50
    threads: int = 1
    record_timing: bool = False
    out_dir: str = field(default_factory=_default_out_dir)

    @property
    def k(self) -> int:
        return self.population.k

    def validate(self) -> "ExperimentConfig":
        self.population.validate()
        n = self.population.n
        if self.replications < 1:
            raise ConfigError(f"replications must be >= 1, got {self.replications}")
        if not 0.0 < self.eligibility_threshold <= 1.0:
            raise ConfigError(f"eligibility_threshold must lie in (0, 1], got {self.eligibility_threshold}")
        if self.eligibility_cap < 1:
            raise ConfigError(f"eligibility_cap must be >= 1, got {self.eligibility_cap}")
        if not 1 <= self.g <= n:
            raise ConfigError(f"g must lie in [1, {n}], got {self.g}")
        if self.rounds < 0:
            raise ConfigError(f"rounds must be >= 0, got {self.rounds}")
        if Strategy.HOMOGENEOUS in self.strategies and self.g < 2:
            raise ConfigError("homogeneous grouping needs g >= 2")
        if not self.strategies:
            raise ConfigError("at least one strategy is required")
        if not self.rules:
            raise ConfigError("at least one rule is required")
        if len(set(self.strategies)) != len(self.strategies):
            raise ConfigError("strategies contain duplicates")
        if len(set(self.rules)) != len(self.rules):
            raise ConfigError("rules contain duplicates")
        if not 0 <= self.master_seed < MAX_SEED:
            raise ConfigError(f"master_seed must be a 64-bit unsigned integer, got {self.master_seed}")
        if self.golfer_swap_passes < 0:
            raise ConfigError(f"golfer_swap_passes must be >= 0, got {self.golfer_swap_passes}")
        if self.threads < 1:
            raise ConfigError(f"threads must be >= 1, got {self.threads}")
        return self

    def to_dict(self) -> Dict[str, Any]:
        """Plain values, the shape written into aggregate reports."""
        out: Dict[str, Any] = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if f.name == "population":
                value = {p.name: _plain(getattr(value, p.name)) for p in fields(value)}
            out[f.name] = _plain(value)
        return out


def _plain(value: Any) -> Any:
    if isinstance(value, list):
        return [_plain(v) for v in value]
    if isinstance(value, Enum):
        return value.value
    return value


# ── Coercion ─────────────────────────────────────────────────

def _as_int(key: str, value: Any) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{key}: expected an integer, got {value!r}")
    return value


def _as_float(key: str, value: Any) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{key}: expected a number, got {value!r}")
    return float(value)


def _as_bool(key: str, value: Any) -> bool:
    if not isinstance(value, bool):
        raise ConfigError(f"{key}: expected true or false, got {value!r}")
    return value


def _as_str(key: str, value: Any) -> str:
    if not isinstance(value, str):
        raise ConfigError(f"{key}: expected a string, got {value!r}")
    return value


def _as_enum(enum_cls):
    def coerce(key: str, value: Any):
        try:
            return enum_cls(_as_str(key, value))
        except ValueError:
            valid = ", ".join(e.value for e in enum_cls)
            raise ConfigError(f"{key}: unknown value {value!r} (expected one of: {valid})")
    return coerce


def _as_list_of(parse_one):
    def coerce(key: str, value: Any):
        items = value if isinstance(value, list) else [value]
        try:
            return [parse_one(_as_str(key, item)) for item in items]
        except InvalidInputError as err:
            raise ConfigError(f"{key}: {err}")
    return coerce


_TOP_KEYS = {
    "g": _as_int,
    "rounds": _as_int,
    "strategies": _as_list_of(parse_strategy),
    "rules": _as_list_of(parse_rule),
    "replications": _as_int,
    "master_seed": _as_int,
    "eligibility_threshold": _as_float,
    "eligibility_cap": _as_int,
    "mes_completion": _as_enum(MesCompletion),
    "cc_tie": _as_enum(CcTie),
    "tie_policy": _as_enum(TiePolicy),
    "minority_rule": _as_enum(MinorityRule),
    "speech_mode": _as_enum(SpeechMode),
    "golfer_swap_passes": _as_int,
    "threads": _as_int,
    "record_timing": _as_bool,
    "out_dir": _as_str,
}

_POPULATION_KEYS = {
    "n_maj": _as_int,
    "n_min": _as_int,
    "m": _as_int,
    "phi": _as_float,
    "k": _as_int,
    "param_sampling": _as_enum(ParamSampling),
}

_SECTIONS = {"population": _POPULATION_KEYS}


def _set(cfg: ExperimentConfig, section: Optional[str], key: str, value: Any,
         where: str) -> ExperimentConfig:
    if section is None and key in _POPULATION_KEYS:
        section = "population"
    if section is None:
        coerce = _TOP_KEYS.get(key)
        if coerce is None:
            raise ConfigError(f"{where}: unknown key '{key}'")
        return replace(cfg, **{key: coerce(key, value)})
    coerce = _SECTIONS[section].get(key)
    if coerce is None:
        raise ConfigError(f"{where}: unknown key '{section}.{key}'")
    population = replace(cfg.population, **{key: coerce(f"{section}.{key}", value)})
    return replace(cfg, population=population)


def config_from_entries(entries: Iterable[Tuple], source_name: str = "<config>",
                        base: Optional[ExperimentConfig] = None) -> ExperimentConfig:
    cfg = base if base is not None else ExperimentConfig()
    section: Optional[str] = None
    seen = set()
    for entry in entries:
        if entry[0] == "section":
            _, name, line = entry
            if name not in _SECTIONS:
                raise ConfigError(f"{source_name}:{line}: unknown section [{name}]")
            section = name
            continue
        _, key, value, line = entry
        qualified = (section, key)
        if qualified in seen:
            raise ConfigError(f"{source_name}:{line}: duplicate key '{key}'")
        seen.add(qualified)
        cfg = _set(cfg, section, key, value, f"{source_name}:{line}")
    return cfg


def load_config(path: str) -> ExperimentConfig:
    """Read, resolve and validate a config file."""
    try:
        with open(path, "r", encoding="utf-8") as f:
            text = f.read()
    except OSError as err:
        raise ConfigError(f"cannot read config {path}: {err.strerror or err}") from err
    return config_from_entries(parse_config(text, path), path).validate()


_PATH_LIKE = re.compile(r"^[A-Za-z0-9_.~/\\:\-]+$")


def _override_value(raw: str) -> Any:
    """Like parse_value, but an unquoted path such as `/tmp/out` is taken as a string."""
    try:
        return parse_value(raw)
    except ConfigError:
        text = raw.strip()
        if _PATH_LIKE.match(text):
            return text
        raise


def apply_overrides(cfg: ExperimentConfig, overrides: Iterable[str]) -> ExperimentConfig:
    """Apply `key=value` strings on top of cfg and re-validate."""
    for item in overrides:
        key, sep, raw = item.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        value = _override_value(raw)
        section, _, name = key.rpartition(".")
        if section and section not in _SECTIONS:
            raise ConfigError(f"override {item!r}: unknown section '{section}'")
        cfg = _set(cfg, section or None, name, value, f"override {item!r}")
    return cfg.validate()
