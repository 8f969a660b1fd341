"""Experiment configuration files.

Same lexical rules as manifests: UTF-8, ``#`` comments, one ``key = value``
per line. Every key is optional except ``game``; :func:`dump_config` writes a
fully resolved file that loads back to an identical config.
"""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from ..env import EnvConfig, Game
from ..errors import ConfigError, SyntaxConfigError
from ..kvfile import format_float, parse_lines
from ..learn import LearnerConfig, UpdateRule


class Mode(str, Enum):
    HIERARCHICAL = "hier"
    FLAT = "flat"


@dataclass(frozen=True)
class ExperimentConfig:
    env: EnvConfig = field(default_factory=EnvConfig)
    learner: LearnerConfig = field(default_factory=LearnerConfig)
    manifest_path: str | None = None  # None -> built-in default manifest for the game
    dynamics_path: str | None = None  # None -> analytic paddle dynamics
    mode: Mode = Mode.HIERARCHICAL
    episodes: int = 200
    seeds: tuple[int, ...] = (0,)
    output_dir: str = "runs"
    eval_every: int = 10
    eval_points: int = 20
    max_steps: int = 0  # training env-step budget per seed; 0 = episodes only
    fourier_order: int = 3
    max_features: int | None = 512
    pretrain_samples: int = 50_000
    ridge: float = 1e-12

    def __post_init__(self) -> None:
        object.__setattr__(self, "mode", Mode(self.mode))
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        if self.episodes < 1:
            raise ConfigError("episodes", f"must be >= 1, got {self.episodes}")
        if not self.seeds:
            raise ConfigError("seeds", "at least one seed is required")
        if any(s < 0 for s in self.seeds):
            raise ConfigError("seeds", "seeds must be unsigned integers")
        if len(set(self.seeds)) != len(self.seeds):
            raise ConfigError("seeds", "duplicate seed")
        if self.eval_every < 1:
            raise ConfigError("eval_every", "must be >= 1")
        if self.eval_points < 1:
            raise ConfigError("eval_points", "must be >= 1")
        if self.max_steps < 0:
            raise ConfigError("max_steps", "must be >= 0")
        if self.fourier_order < 0:
            raise ConfigError("fourier_order", "must be >= 0")
        if self.max_features is not None and self.max_features < 1:
            raise ConfigError("max_features", "must be >= 1 or 'none'")
        if self.pretrain_samples < 1:
            raise ConfigError("pretrain_samples", "must be >= 1")
        if self.ridge < 0:
            raise ConfigError("ridge", "must be >= 0")

    @property
    def game(self) -> Game:
        return self.env.game


def _bool(value: str) -> bool:
    v = value.lower()
    if v in ("on", "true", "yes", "1"):
        return True
    if v in ("off", "false", "no", "0"):
        return False
    raise ValueError(value)


def _optional_int(value: str) -> int | None:
    return None if value.lower() == "none" else int(value)


def _optional_path(value: str) -> str | None:
    return None if value.lower() in ("default", "analytic", "") else value


def _seeds(value: str) -> tuple[int, ...]:
    return tuple(int(v) for v in value.split(",") if v.strip())


# key -> (section, attribute, parser)
_KEYS = {
    "game": ("env", "game", lambda v: Game(v.lower())),
    "paddle_height": ("env", "paddle_height", float),
    "ball_height": ("env", "ball_height", float),
    "paddle_step": ("env", "paddle_step", float),
    "paddle_momentum": ("env", "paddle_momentum", float),
    "paddle_noise_std": ("env", "paddle_noise_std", float),
    "ball_speed": ("env", "ball_speed", float),
    "angle_gain": ("env", "angle_gain", float),
    "opponent_speed": ("env", "opponent_speed", float),
    "opponent_reaction_lag": ("env", "opponent_reaction_lag", int),
    "points_to_win": ("env", "points_to_win", int),
    "depth_base": ("env", "depth_base", float),
    "depth_gain": ("env", "depth_gain", float),
    "max_point_steps": ("env", "max_point_steps", int),
    "alpha": ("learner", "alpha", float),
    "gamma": ("learner", "gamma", float),
    "lambda": ("learner", "lam", float),
    "epsilon_start": ("learner", "epsilon_start", float),
    "epsilon_min": ("learner", "epsilon_min", float),
    "epsilon_decay": ("learner", "epsilon_decay", float),
    "update_rule": ("learner", "update_rule", lambda v: UpdateRule(v.lower())),
    "literal_return": ("learner", "literal_return", _bool),
    "lr_scaling": ("learner", "lr_scaling", _bool),
    "fourier_order": ("top", "fourier_order", int),
    "max_features": ("top", "max_features", _optional_int),
    "manifest": ("top", "manifest_path", _optional_path),
    "dynamics": ("top", "dynamics_path", _optional_path),
    "mode": ("top", "mode", lambda v: Mode(v.lower())),
    "episodes": ("top", "episodes", int),
    "seeds": ("top", "seeds", _seeds),
    "output_dir": ("top", "output_dir", str),
    "eval_every": ("top", "eval_every", int),
    "eval_points": ("top", "eval_points", int),
    "max_steps": ("top", "max_steps", int),
    "pretrain_samples": ("top", "pretrain_samples", int),
    "ridge": ("top", "ridge", float),
}


def parse_config(text: str, base_dir: str | os.PathLike | None = None) -> ExperimentConfig:
    """Parse config text. Relative paths resolve against ``base_dir``."""
    sections: dict[str, dict] = {"env": {}, "learner": {}, "top": {}}
    lines: dict[str, int] = {}
    for lineno, key, value in parse_lines(text):
        if key not in _KEYS:
            raise SyntaxConfigError(lineno, f"unknown key {key!r}")
        section, attr, parse = _KEYS[key]
        try:
            parsed = parse(value)
        except ValueError:
            raise ConfigError(key, f"cannot parse {value!r} (line {lineno})") from None
        sections[section][attr] = parsed
        lines[attr] = lineno
    if "game" not in sections["env"]:
        raise ConfigError("game", "required key missing")
    for attr in ("manifest_path", "dynamics_path", "output_dir"):
        path = sections["top"].get(attr)
        if path is not None and base_dir is not None and not os.path.isabs(path):
            sections["top"][attr] = os.path.normpath(os.path.join(base_dir, path))
    env = EnvConfig(**sections["env"])
    learner = LearnerConfig(**sections["learner"])
    return ExperimentConfig(env=env, learner=learner, **sections["top"])


def load_config(path: str | os.PathLike) -> ExperimentConfig:
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return parse_config(text, base_dir=path.parent.resolve())


def _format(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "on" if value else "off"
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, float):
        return format_float(value)
    if isinstance(value, tuple):
        return ", ".join(str(v) for v in value)
    return str(value)


def dump_config(config: ExperimentConfig) -> str:
    """Fully resolved config text, one line per key in a fixed order."""
    out = []
    for key, (section, attr, _) in _KEYS.items():
        holder = config if section == "top" else getattr(config, section)
        value = getattr(holder, attr)
        if key == "manifest" and value is None:
            text = "default"
        elif key == "dynamics" and value is None:
            text = "analytic"
        else:
            text = _format(value)
        out.append(f"{key} = {text}")
    return "\n".join(out) + "\n"


def with_overrides(config: ExperimentConfig, **changes) -> ExperimentConfig:
    return dataclasses.replace(config, **changes)
