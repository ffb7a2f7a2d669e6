"""Experiment configuration: a flat ``key = value`` file with a profile switch.

Lines are ``key = value``; ``#`` starts a comment. Values are parsed as
Python literals when possible (numbers, booleans as True/False) and kept as
strings otherwise. Unknown keys are errors.
"""
from __future__ import annotations

import ast
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from .fl import FAST_PROFILE, PAPER_PROFILE, FLConfig
from .game import GameCosts
from .signals import ChannelConfig

PROFILES = {"fast": FAST_PROFILE, "paper": PAPER_PROFILE}


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    profile: str = "fast"
    n: int = 5
    trials: int = 5
    workers: int = 1
    costs: GameCosts = field(default_factory=GameCosts)
    channel: ChannelConfig = field(default_factory=ChannelConfig)
    fl: FLConfig = field(default_factory=lambda: FLConfig(**FAST_PROFILE))
    output_dir: Path = Path("out")
    master_seed: int = 0


_TOP = {"profile", "n", "trials", "workers", "output_dir", "seed"}
_COSTS = {"c_A", "c_D"}
_CHANNEL = {f.name for f in fields(ChannelConfig) if f.name != "seed"}
_CHANNEL_ALIASES = {"channel_seed": "seed"}
_FL = {f.name for f in fields(FLConfig) if f.name not in ("master_seed", "arch")}
KNOWN_KEYS = _TOP | _COSTS | _CHANNEL | set(_CHANNEL_ALIASES) | _FL


def parse_text(text: str, source: str = "<config>") -> dict:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigError(f"{source}: line {lineno}: expected 'key = value'")
        try:
            values[key] = ast.literal_eval(value)
        except (ValueError, SyntaxError):
            values[key] = value
    return values


def load_config_file(path) -> dict:
    path = Path(path)
    return parse_text(path.read_text(), str(path))


def build_config(values: dict) -> ExperimentConfig:
    """Validate raw key/values; the profile overrides round and sample counts."""
    unknown = sorted(set(values) - KNOWN_KEYS)
    if unknown:
        raise ConfigError("unknown config keys: " + ", ".join(unknown))
    profile = values.get("profile", "fast")
    if profile not in PROFILES:
        raise ConfigError(f"profile must be one of {sorted(PROFILES)}, got {profile!r}")
    clash = sorted(k for k, v in PROFILES[profile].items() if k in values and values[k] != v)
    if clash:
        raise ConfigError(f"profile {profile!r} fixes " + ", ".join(f"{k}={PROFILES[profile][k]}" for k in clash))
    seed = int(values.get("seed", 0))
    try:
        channel = ChannelConfig(**{k: values[k] for k in _CHANNEL if k in values},
                                **{v: values[k] for k, v in _CHANNEL_ALIASES.items() if k in values})
        fl_kw = {k: values[k] for k in _FL if k in values}
        fl_kw.update(PROFILES[profile])
        fl = FLConfig(master_seed=seed, **fl_kw)
        costs = GameCosts(**{k: float(values[k]) for k in _COSTS if k in values})
        cfg = ExperimentConfig(
            profile=profile,
            n=int(values.get("n", 5)),
            trials=int(values.get("trials", 5)),
            workers=int(values.get("workers", 1)),
            costs=costs, channel=channel, fl=fl,
            output_dir=Path(values.get("output_dir", "out")),
            master_seed=seed,
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    if cfg.n < 1 or cfg.trials < 1 or cfg.workers < 1:
        raise ConfigError("n, trials and workers must be >= 1")
    return cfg


def with_seed(cfg: ExperimentConfig, seed: int) -> ExperimentConfig:
    return replace(cfg, master_seed=seed, fl=replace(cfg.fl, master_seed=seed))


def describe(cfg: ExperimentConfig) -> dict:
    d = asdict(cfg)
    d["output_dir"] = str(cfg.output_dir)
    d["fl"].pop("arch", None)
    return d
