"""Instruction-derived options: manifest, compilation, planning and control.

A manifest is a small ``key = value`` text file encoding the game manual's
advice: where on the racket to strike the ball (``hit_grid_y``), how far from
the net to strike it (``hit_grid_x``, MiniTennis) and where to recover after
a shot (``wait_target``). Each grid point becomes a Hit option; recovery
becomes a single Wait option.

Hit offsets in the manifest are in *offset units*: the largest grid
magnitude for the game (8 for MiniPong, 15 for MiniTennis) maps to the edge
of the contact range ``(paddle_height + ball_height) / 2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Protocol, Sequence

from .env import (
    HALF_COURT,
    NET_X,
    SCORING_EVENTS,
    Action,
    EnvConfig,
    Event,
    Game,
    GameState,
    Phase,
    action_push,
)
from .errors import ConfigError, PreconditionError, SyntaxConfigError
from .geometry import InterceptPrediction, fold, predict_intercept
from .kvfile import format_float, parse_float_list, parse_lines

__all__ = [
    "OFFSET_UNITS",
    "OptionKind",
    "TemporalOption",
    "InstructionManifest",
    "HitPlan",
    "AnalyticDynamics",
    "InterceptPrediction",
    "default_manifest",
    "parse_manifest",
    "serialize_manifest",
    "load_manifest",
    "compile_options",
    "primitive_options",
    "predict_intercept",
    "fold",
    "plan_hit_target",
    "move_toward",
    "intra_action",
    "initiation",
    "termination",
    "initiable_ids",
]

OFFSET_UNITS = {Game.MINIPONG: 8.0, Game.MINITENNIS: 15.0}
MANIFEST_KEYS = ("game", "hit_grid_x", "hit_grid_y", "wait_target", "wait_interrupt")


class OptionKind(Enum):
    HIT = "hit"
    WAIT = "wait"
    # one-step option wrapping a primitive action (flat baseline, reductions)
    PRIMITIVE = "primitive"


@dataclass(frozen=True)
class TemporalOption:
    id: int
    kind: OptionKind
    delta_x: float = 0.0  # hit plane distance to the net (MiniTennis)
    delta_y: float = 0.0  # planned contact offset, court units
    wait_target: tuple[float, float] | None = None  # None means no-op wait
    interrupt: bool = True
    action: Action | None = None
    label: str = ""


@dataclass(frozen=True)
class InstructionManifest:
    """Machine-readable form of the manual's advice.

    Phase rules are fixed: Hit options start once the ball heads toward the
    agent (or at a serve); Wait starts right after the agent strikes the
    ball and, with ``wait_interrupt``, ends as soon as the opponent returns
    it.
    """

    game: Game
    hit_grid_x: tuple[float, ...]
    hit_grid_y: tuple[float, ...]
    wait_target: tuple[float, float] | None
    wait_interrupt: bool = True

    @property
    def n_hit_options(self) -> int:
        return len(self.hit_grid_y) * (len(self.hit_grid_x) if self.game is Game.MINITENNIS else 1)


def default_manifest(game: Game | str) -> InstructionManifest:
    game = Game(game)
    if game is Game.MINIPONG:
        return InstructionManifest(
            game=game,
            hit_grid_x=(),
            hit_grid_y=tuple(float(v) for v in range(-8, 9)),
            wait_target=None,
        )
    # The printed offset list reads {-15, 10, -5, 0, 5, 10, 15}; the duplicate
    # 10 is taken as a sign slip and the symmetric grid is used.
    return InstructionManifest(
        game=game,
        hit_grid_x=tuple(HALF_COURT * k / 4 for k in range(5)),
        hit_grid_y=(-15.0, -10.0, -5.0, 0.0, 5.0, 10.0, 15.0),
        # two thirds of the way from the baseline to the net, centred
        wait_target=(2.0 * HALF_COURT / 3.0, 0.5),
    )


def _grid(lineno: int, key: str, value: str) -> tuple[float, ...]:
    try:
        values = parse_float_list(value)
    except ValueError:
        raise SyntaxConfigError(lineno, f"{key}: expected comma-separated numbers, got {value!r}") from None
    if not values:
        raise ConfigError(key, f"grid is empty (line {lineno})")
    if any(not math.isfinite(v) for v in values):
        raise ConfigError(key, f"non-finite value in {value!r}")
    return tuple(values)


def _validate_manifest(m: InstructionManifest) -> None:
    units = OFFSET_UNITS[m.game]
    if not m.hit_grid_y:
        raise ConfigError("hit_grid_y", "grid is empty")
    for v in m.hit_grid_y:
        if abs(v) > units:
            raise ConfigError("hit_grid_y", f"offset {v} outside [-{units:g}, {units:g}]")
    if m.game is Game.MINITENNIS:
        if not m.hit_grid_x:
            raise ConfigError("hit_grid_x", "grid is empty")
        for v in m.hit_grid_x:
            if not 0.0 <= v <= HALF_COURT:
                raise ConfigError("hit_grid_x", f"distance {v} outside [0, {HALF_COURT}]")
    elif m.hit_grid_x:
        raise ConfigError("hit_grid_x", "only valid for minitennis")
    if m.wait_target is not None:
        x, y = m.wait_target
        x_hi = NET_X if m.game is Game.MINITENNIS else 0.0
        if not (0.0 <= x <= x_hi and 0.0 <= y <= 1.0):
            raise ConfigError("wait_target", f"{m.wait_target} outside the agent's reachable area")


def parse_manifest(text: str) -> InstructionManifest:
    entries = {key: (lineno, value) for lineno, key, value in parse_lines(text)}
    for key, (lineno, _) in entries.items():
        if key not in MANIFEST_KEYS:
            raise SyntaxConfigError(lineno, f"unknown key {key!r}")
    if "game" not in entries:
        raise ConfigError("game", "required key missing")
    lineno, value = entries["game"]
    try:
        game = Game(value.lower())
    except ValueError:
        raise SyntaxConfigError(lineno, f"game must be minipong or minitennis, got {value!r}") from None
    base = default_manifest(game)

    grid_x = base.hit_grid_x
    if "hit_grid_x" in entries:
        if game is not Game.MINITENNIS:
            raise ConfigError("hit_grid_x", f"only valid for minitennis (line {entries['hit_grid_x'][0]})")
        grid_x = _grid(entries["hit_grid_x"][0], "hit_grid_x", entries["hit_grid_x"][1])
    grid_y = base.hit_grid_y
    if "hit_grid_y" in entries:
        grid_y = _grid(entries["hit_grid_y"][0], "hit_grid_y", entries["hit_grid_y"][1])

    wait_target = base.wait_target
    if "wait_target" in entries:
        lineno, value = entries["wait_target"]
        if value.lower() == "noop":
            wait_target = None
        else:
            try:
                coords = parse_float_list(value)
            except ValueError:
                coords = []
            if len(coords) != 2:
                raise SyntaxConfigError(lineno, f"wait_target must be 'x, y' or 'noop', got {value!r}")
            wait_target = (coords[0], coords[1])

    interrupt = True
    if "wait_interrupt" in entries:
        lineno, value = entries["wait_interrupt"]
        if value.lower() not in ("on", "off"):
            raise SyntaxConfigError(lineno, f"wait_interrupt must be on or off, got {value!r}")
        interrupt = value.lower() == "on"

    manifest = InstructionManifest(game, grid_x, grid_y, wait_target, interrupt)
    _validate_manifest(manifest)
    return manifest


def serialize_manifest(m: InstructionManifest) -> str:
    lines = [f"game = {m.game.value}"]
    if m.game is Game.MINITENNIS:
        lines.append("hit_grid_x = " + ", ".join(format_float(v) for v in m.hit_grid_x))
    lines.append("hit_grid_y = " + ", ".join(format_float(v) for v in m.hit_grid_y))
    if m.wait_target is None:
        lines.append("wait_target = noop")
    else:
        lines.append("wait_target = " + ", ".join(format_float(v) for v in m.wait_target))
    lines.append(f"wait_interrupt = {'on' if m.wait_interrupt else 'off'}")
    return "\n".join(lines) + "\n"


def load_manifest(path) -> InstructionManifest:
    with open(path, encoding="utf-8") as fh:
        return parse_manifest(fh.read())


def compile_options(manifest: InstructionManifest, env_config: EnvConfig) -> list[TemporalOption]:
    """One Hit option per grid point (x-major, then y), then the Wait option."""
    if manifest.game is not env_config.game:
        raise ConfigError(
            "game",
            f"manifest is for {manifest.game.value} but the environment is {env_config.game.value}",
        )
    _validate_manifest(manifest)
    scale = env_config.half_contact / OFFSET_UNITS[manifest.game]
    grid_x = manifest.hit_grid_x if manifest.game is Game.MINITENNIS else (0.0,)
    options = []
    for dx in grid_x:
        for dy in manifest.hit_grid_y:
            label = f"hit(dx={dx:g}, dy={dy:g})" if manifest.game is Game.MINITENNIS else f"hit(dy={dy:g})"
            options.append(
                TemporalOption(len(options), OptionKind.HIT, delta_x=dx, delta_y=dy * scale, label=label)
            )
    wait_label = "wait(noop)" if manifest.wait_target is None else "wait(%g, %g)" % manifest.wait_target
    options.append(
        TemporalOption(
            len(options),
            OptionKind.WAIT,
            wait_target=manifest.wait_target,
            interrupt=manifest.wait_interrupt,
            label=wait_label,
        )
    )
    return options


def primitive_options(env_config: EnvConfig) -> list[TemporalOption]:
    """One single-step option per primitive action: initiable everywhere,
    terminating after every step."""
    return [
        TemporalOption(i, OptionKind.PRIMITIVE, action=a, label=a.name.lower())
        for i, a in enumerate(env_config.actions)
    ]


@dataclass(frozen=True)
class HitPlan:
    target: tuple[float, float]
    plane: float
    intercept: float
    fallback: bool = False


def _clamp(v: float, lo: float, hi: float) -> float:
    return lo if v < lo else hi if v > hi else v


def plan_hit_target(option: TemporalOption, state: GameState, config: EnvConfig) -> HitPlan:
    """Where the racket centre must be so the ball meets it at ``delta_y``
    from the centre.

    MiniTennis strikes on the line ``delta_x`` from the net. If the ball has
    already passed that line, the nearest line still ahead of the ball is
    used and ``fallback`` is set.
    """
    if option.kind is not OptionKind.HIT:
        raise PreconditionError(f"option {option.id} is not a Hit option")
    if state.phase is not Phase.TOWARD_AGENT:
        raise PreconditionError(f"hit planning needs the ball moving toward the agent, phase is {state.phase}")
    fallback = False
    if config.game is Game.MINIPONG:
        plane = 0.0
    else:
        plane = NET_X - option.delta_x
        ball_x = state.ball_pos[0]
        if plane >= ball_x:
            plane = max(0.0, ball_x - config.ball_speed)
            fallback = True
    pred = predict_intercept(state.ball_pos, state.ball_vel, plane)
    lateral = _clamp(pred.intercept_lateral - option.delta_y, 0.0, 1.0)
    return HitPlan((plane, lateral), plane, pred.intercept_lateral, fallback)


class Dynamics(Protocol):
    def predict(self, state: GameState, action: Action) -> tuple[float, float]: ...


class AnalyticDynamics:
    """Noiseless paddle model read straight from the environment config."""

    def __init__(self, config: EnvConfig) -> None:
        self.config = config

    def reset(self, state: GameState) -> None:
        pass

    def observe(self, action: Action, state: GameState) -> None:
        pass

    def predict(self, state: GameState, action: Action) -> tuple[float, float]:
        cfg = self.config
        beta, ps = cfg.paddle_momentum, cfg.paddle_step
        push_x, push_y = action_push(action)
        (px, py), (vx, vy) = state.agent_pos, state.agent_vel
        lo, hi = cfg.agent_x_bounds
        nx = _clamp(px + beta * vx + ps * push_x, lo, hi)
        ny = _clamp(py + beta * vy + ps * push_y, 0.0, 1.0)
        return nx, ny


def move_toward(
    target: float | Sequence[float],
    state: GameState,
    config: EnvConfig,
    dyn: Dynamics | None = None,
) -> Action:
    """One-step lookahead: pick the action whose predicted next paddle
    position is closest to ``target``; exact ties go to NoOp.

    With momentum-free analytic dynamics this is bang-bang control with a
    dead-zone of ``paddle_step / 2``. A scalar target is lateral only.
    """
    if dyn is None:
        dyn = AnalyticDynamics(config)
    if isinstance(target, (int, float)):
        def dist(pos):
            return abs(pos[1] - target)
    else:
        tx, ty = target

        def dist(pos):
            return math.hypot(pos[0] - tx, pos[1] - ty)

    best, best_d = Action.NOOP, dist(dyn.predict(state, Action.NOOP))
    for action in config.actions:
        if action is Action.NOOP:
            continue
        d = dist(dyn.predict(state, action))
        if d < best_d:
            best, best_d = action, d
    return best


def _ready_target(option: TemporalOption, state: GameState, config: EnvConfig) -> float | tuple[float, float]:
    # Hit running while the ball is not yet incoming: shadow the ball laterally.
    lateral = _clamp(state.ball_pos[1] - option.delta_y, 0.0, 1.0)
    if config.game is Game.MINIPONG:
        return lateral
    return (NET_X - option.delta_x, lateral)


def intra_action(
    option: TemporalOption, state: GameState, config: EnvConfig, dyn: Dynamics | None = None
) -> Action:
    if option.kind is OptionKind.PRIMITIVE:
        return option.action
    if option.kind is OptionKind.WAIT:
        if option.wait_target is None:
            return Action.NOOP
        if config.game is Game.MINIPONG:
            return move_toward(option.wait_target[1], state, config, dyn)
        return move_toward(option.wait_target, state, config, dyn)
    if state.phase is Phase.TOWARD_AGENT:
        plan = plan_hit_target(option, state, config)
        target = plan.target[1] if config.game is Game.MINIPONG else plan.target
    else:
        target = _ready_target(option, state, config)
    return move_toward(target, state, config, dyn)


def initiation(option: TemporalOption, state: GameState, last_event: Event | None) -> bool:
    """Hit: ball incoming or a serve pending. Wait: right after the agent's
    shot (the ball is then heading to the opponent)."""
    if option.kind is OptionKind.PRIMITIVE:
        return True
    if option.kind is OptionKind.HIT:
        return state.phase in (Phase.TOWARD_AGENT, Phase.SERVE)
    return last_event is Event.AGENT_HIT or state.phase is Phase.TOWARD_OPPONENT


def termination(option: TemporalOption, state: GameState, event: Event, config: EnvConfig) -> bool:
    """Deterministic termination after a step that produced ``event`` and ``state``.

    Every option stops when a point ends, so no segment spans two points.
    """
    if option.kind is OptionKind.PRIMITIVE or event in SCORING_EVENTS:
        return True
    if option.kind is OptionKind.HIT:
        return event is Event.AGENT_HIT
    if option.interrupt:
        return event is Event.OPPONENT_HIT
    # without interrupt: hand over once recovered and the ball is incoming
    if state.phase is not Phase.TOWARD_AGENT:
        return False
    if option.wait_target is None:
        return True
    tx, ty = option.wait_target
    if config.game is Game.MINIPONG:
        return abs(state.agent_pos[1] - ty) <= config.paddle_step
    return math.hypot(state.agent_pos[0] - tx, state.agent_pos[1] - ty) <= config.paddle_step


def initiable_ids(options: Sequence[TemporalOption], state: GameState, last_event: Event | None) -> list[int]:
    return [o.id for o in options if initiation(o, state, last_event)]
