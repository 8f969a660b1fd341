"""Deterministic MiniPong / MiniTennis simulators.

Court coordinates are normalized to ``[0, 1]^2``. The x axis runs along the
court: the agent defends ``x = 0`` and the opponent ``x = 1``. The y axis is
lateral and bounded by reflecting walls. In MiniTennis the net sits at
``x = 0.5`` and the agent moves freely on its own half.

A step works in continuous time: when the ball centre crosses a hitting
plane during a step, the contact lateral coordinate is computed at the exact
crossing time, which keeps the simulator consistent with
:func:`instrhrl.geometry.predict_intercept`.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum, IntEnum

import numpy as np

from .errors import ConfigError, UsageError
from .geometry import predict_intercept, reflect

NET_X = 0.5
HALF_COURT = 0.5
SERVE_X = 0.5


class Game(str, Enum):
    MINIPONG = "minipong"
    MINITENNIS = "minitennis"


class Phase(Enum):
    TOWARD_AGENT = "ball_toward_agent"
    TOWARD_OPPONENT = "ball_toward_opponent"
    SERVE = "serve"


class Event(Enum):
    NONE = "none"
    AGENT_HIT = "agent_hit"
    OPPONENT_HIT = "opponent_hit"
    AGENT_SCORED = "agent_scored"
    OPPONENT_SCORED = "opponent_scored"
    EPISODE_END = "episode_end"


SCORING_EVENTS = frozenset({Event.AGENT_SCORED, Event.OPPONENT_SCORED, Event.EPISODE_END})


class Action(IntEnum):
    NOOP = 0
    UP = 1  # +y
    DOWN = 2  # -y
    LEFT = 3  # -x, toward the agent's baseline
    RIGHT = 4  # +x, toward the net


PONG_ACTIONS = (Action.NOOP, Action.UP, Action.DOWN)
TENNIS_ACTIONS = tuple(Action)

# (dx, dy) push per action
_PUSH = {
    Action.NOOP: (0, 0),
    Action.UP: (0, 1),
    Action.DOWN: (0, -1),
    Action.LEFT: (-1, 0),
    Action.RIGHT: (1, 0),
}


def action_push(action: Action) -> tuple[int, int]:
    return _PUSH[action]


@dataclass(frozen=True)
class EnvConfig:
    game: Game = Game.MINIPONG
    paddle_height: float = 0.125
    ball_height: float = 0.03125
    paddle_step: float = 0.02
    paddle_momentum: float = 0.5
    paddle_noise_std: float = 0.004
    ball_speed: float = 0.025
    angle_gain: float = 1.0
    opponent_speed: float = 0.018
    opponent_reaction_lag: int = 4
    points_to_win: int | None = None  # None -> 5 for MiniPong, 12 for MiniTennis
    depth_base: float = 0.3
    depth_gain: float = 0.6
    max_point_steps: int = 10_000
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "game", Game(self.game))
        if self.points_to_win is None:
            default = 5 if self.game is Game.MINIPONG else 12
            object.__setattr__(self, "points_to_win", default)
        self.validate()

    def validate(self) -> None:
        if not self.ball_height > 0:
            raise ConfigError("ball_height", f"must be > 0, got {self.ball_height}")
        if not self.paddle_height > self.ball_height:
            raise ConfigError(
                "paddle_height",
                f"must exceed ball_height ({self.ball_height}), got {self.paddle_height}",
            )
        if not self.paddle_step > 0:
            raise ConfigError("paddle_step", f"must be > 0, got {self.paddle_step}")
        if not 0.0 <= self.paddle_momentum < 1.0:
            raise ConfigError("paddle_momentum", f"must lie in [0, 1), got {self.paddle_momentum}")
        if not self.paddle_noise_std >= 0:
            raise ConfigError("paddle_noise_std", f"must be >= 0, got {self.paddle_noise_std}")
        if not 0 < self.ball_speed < 0.5:
            raise ConfigError("ball_speed", f"must lie in (0, 0.5), got {self.ball_speed}")
        if not self.angle_gain >= 0:
            raise ConfigError("angle_gain", f"must be >= 0, got {self.angle_gain}")
        if not self.opponent_speed > 0:
            raise ConfigError("opponent_speed", f"must be > 0, got {self.opponent_speed}")
        if self.opponent_reaction_lag < 0:
            raise ConfigError("opponent_reaction_lag", "must be >= 0")
        if self.points_to_win < 1:
            raise ConfigError("points_to_win", f"must be >= 1, got {self.points_to_win}")
        if self.max_point_steps < 1:
            raise ConfigError("max_point_steps", "must be >= 1")
        if self.seed < 0:
            raise ConfigError("seed", "must be an unsigned integer")

    @property
    def half_contact(self) -> float:
        """Largest |ball_y - paddle_center| that still counts as contact."""
        return (self.paddle_height + self.ball_height) / 2.0

    @property
    def actions(self) -> tuple[Action, ...]:
        return PONG_ACTIONS if self.game is Game.MINIPONG else TENNIS_ACTIONS

    @property
    def v_max(self) -> float:
        return self.ball_speed * max(1.0, self.angle_gain)

    @property
    def agent_x_bounds(self) -> tuple[float, float]:
        return (0.0, 0.0) if self.game is Game.MINIPONG else (0.0, NET_X)

    def landing_plane(self, hit_x: float) -> float:
        """Opponent's hitting plane after an agent shot struck at ``hit_x``.

        MiniPong: always the opponent's paddle line. MiniTennis: shots land
        ``depth_base + depth_gain * distance_to_net`` past the net, capped at
        the baseline, so volleys travel shorter than baseline shots.
        """
        if self.game is Game.MINIPONG:
            return 1.0
        depth = self.depth_base + self.depth_gain * (NET_X - hit_x)
        return min(NET_X + depth, 1.0)


@dataclass(frozen=True)
class GameState:
    agent_pos: tuple[float, float]
    opponent_pos: tuple[float, float]
    ball_pos: tuple[float, float]
    ball_vel: tuple[float, float]
    phase: Phase
    score: tuple[int, int] = (0, 0)
    step_index: int = 0
    # paddle velocity carried by the momentum term
    agent_vel: tuple[float, float] = (0.0, 0.0)
    # steps since the current flight started (drives the opponent reaction lag)
    flight_steps: int = 0
    # lateral offset the opponent tries to strike the ball with
    opponent_aim: float = 0.0
    # x of the opponent hitting plane for the current flight
    opponent_plane: float = 1.0
    point_steps: int = 0
    done: bool = False

    @property
    def points_played(self) -> int:
        return self.score[0] + self.score[1]


@dataclass(frozen=True)
class StepResult:
    state: GameState
    reward: float
    done: bool
    event: Event
    # (x, y) of the ball centre at a paddle crossing this step, hit or miss
    contact: tuple[float, float] | None = field(default=None)


def _serve_state(config: EnvConfig, rng: np.random.Generator, base: GameState | None) -> GameState:
    serve_y = float(rng.uniform(0.25, 0.75))
    if base is None:
        if config.game is Game.MINIPONG:
            agent, opponent = (0.0, 0.5), (1.0, 0.5)
        else:
            agent, opponent = (HALF_COURT / 2.0, 0.5), (1.0, 0.5)
        return GameState(
            agent_pos=agent,
            opponent_pos=opponent,
            ball_pos=(SERVE_X, serve_y),
            ball_vel=(0.0, 0.0),
            phase=Phase.SERVE,
        )
    return replace(
        base,
        ball_pos=(SERVE_X, serve_y),
        ball_vel=(0.0, 0.0),
        phase=Phase.SERVE,
        flight_steps=0,
        opponent_aim=0.0,
        opponent_plane=1.0,
        opponent_pos=(1.0, base.opponent_pos[1]),
        point_steps=0,
    )


def initial_state(config: EnvConfig, rng: np.random.Generator) -> GameState:
    return _serve_state(config, rng, None)


def _draw_aim(config: EnvConfig, rng: np.random.Generator) -> float:
    return float(rng.uniform(-0.7, 0.7)) * config.half_contact


def opponent_action(
    state: GameState, config: EnvConfig, rng: np.random.Generator | None = None
) -> Action:
    """Scripted opponent: idle until the ball has flown toward it for
    ``opponent_reaction_lag`` steps, then track the predicted intercept
    (shifted by its aim offset) with a dead-zone of ``paddle_step / 2``.

    ``rng`` is accepted for interface symmetry; the aim offset is drawn by
    :func:`step` when a flight starts, so this function is deterministic.
    """
    if state.phase is not Phase.TOWARD_OPPONENT:
        return Action.NOOP
    if state.flight_steps < config.opponent_reaction_lag:
        return Action.NOOP
    pred = predict_intercept(state.ball_pos, state.ball_vel, state.opponent_plane)
    target = min(1.0, max(0.0, pred.intercept_lateral - state.opponent_aim))
    diff = target - state.opponent_pos[1]
    if diff > config.paddle_step / 2.0:
        return Action.UP
    if diff < -config.paddle_step / 2.0:
        return Action.DOWN
    return Action.NOOP


def _clamp(v: float, lo: float, hi: float) -> float:
    return lo if v < lo else hi if v > hi else v


def _move_agent(
    state: GameState, action: Action, rng: np.random.Generator, config: EnvConfig
) -> tuple[tuple[float, float], tuple[float, float]]:
    beta, ps, sigma = config.paddle_momentum, config.paddle_step, config.paddle_noise_std
    px, py = state.agent_pos
    vx, vy = state.agent_vel
    push_x, push_y = _PUSH[action]

    nvy = beta * vy + ps * push_y
    if sigma > 0.0:
        nvy += float(rng.normal(0.0, sigma))
    ny = _clamp(py + nvy, 0.0, 1.0)

    if config.game is Game.MINIPONG:
        return (px, ny), (0.0, ny - py)

    nvx = beta * vx + ps * push_x
    if sigma > 0.0:
        nvx += float(rng.normal(0.0, sigma))
    lo, hi = config.agent_x_bounds
    nx = _clamp(px + nvx, lo, hi)
    # stored velocity is the realized displacement, so clamping at a wall stops the paddle
    return (nx, ny), (nx - px, ny - py)


def _outgoing_vy(offset: float, config: EnvConfig) -> float:
    return config.angle_gain * config.ball_speed * offset / config.half_contact


def step(
    state: GameState, action: Action | int, rng: np.random.Generator, config: EnvConfig
) -> StepResult:
    """Advance the game by one discrete step."""
    if state.done:
        raise UsageError("cannot step a terminal state; reset the game")
    try:
        action = Action(action)
    except ValueError:
        raise UsageError(f"unknown action {action!r}") from None
    if action not in config.actions:
        raise UsageError(f"action {action.name} is not available in {config.game.value}")

    speed = config.ball_speed
    (bx, by), (bvx, bvy) = state.ball_pos, state.ball_vel
    phase = state.phase
    aim, opp_plane, flight = state.opponent_aim, state.opponent_plane, state.flight_steps

    if phase is Phase.SERVE:
        toward_agent = state.points_played % 2 == 0
        bvx = -speed if toward_agent else speed
        bvy = float(rng.uniform(-0.5, 0.5)) * speed
        phase = Phase.TOWARD_AGENT if toward_agent else Phase.TOWARD_OPPONENT
        flight = 0
        if not toward_agent:
            aim, opp_plane = _draw_aim(config, rng), 1.0

    agent_pos, agent_vel = _move_agent(state, action, rng, config)

    opp_move = opponent_action(state, config)
    ox, oy = state.opponent_pos
    if opp_move is Action.UP:
        oy = min(1.0, oy + config.opponent_speed)
    elif opp_move is Action.DOWN:
        oy = max(0.0, oy - config.opponent_speed)
    ox = opp_plane

    event = Event.NONE
    contact = None
    flight += 1

    if bvx < 0.0:
        plane = agent_pos[0]
        nx = bx + bvx
        if bx > plane >= nx:
            tau = (bx - plane) / -bvx
            cy, flipped = reflect(by + bvy * tau)
            contact = (plane, cy)
            offset = cy - agent_pos[1]
            if abs(offset) <= config.half_contact:
                event = Event.AGENT_HIT
                bvx, bvy = speed, _outgoing_vy(offset, config)
                rest = 1.0 - tau
                nx = plane + bvx * rest
                ny, flip2 = reflect(cy + bvy * rest)
                if flip2:
                    bvy = -bvy
                phase, flight = Phase.TOWARD_OPPONENT, 0
                aim, opp_plane = _draw_aim(config, rng), config.landing_plane(plane)
        if event is Event.NONE:
            ny, flipped = reflect(by + bvy)
            if flipped:
                bvy = -bvy
            if nx <= 0.0:
                event = Event.OPPONENT_SCORED
                nx = 0.0
    elif bvx > 0.0:
        plane = opp_plane
        nx = bx + bvx
        if bx < plane <= nx:
            tau = (plane - bx) / bvx
            cy, _ = reflect(by + bvy * tau)
            contact = (plane, cy)
            offset = cy - oy
            if abs(offset) <= config.half_contact:
                event = Event.OPPONENT_HIT
                bvx, bvy = -speed, _outgoing_vy(offset, config)
                rest = 1.0 - tau
                nx = plane + bvx * rest
                ny, flip2 = reflect(cy + bvy * rest)
                if flip2:
                    bvy = -bvy
                phase, flight = Phase.TOWARD_AGENT, 0
            else:
                event = Event.AGENT_SCORED
                nx, ny = plane, cy
        if event is Event.NONE:
            ny, flipped = reflect(by + bvy)
            if flipped:
                bvy = -bvy
    else:
        nx, ny = bx, by

    point_steps = state.point_steps + 1
    if event is Event.NONE and point_steps >= config.max_point_steps:
        # stalled rally: the point goes to the opponent
        event = Event.OPPONENT_SCORED

    moved = replace(
        state,
        agent_pos=agent_pos,
        agent_vel=agent_vel,
        opponent_pos=(ox, oy),
        ball_pos=(_clamp(nx, 0.0, 1.0), ny),
        ball_vel=(bvx, bvy),
        phase=phase,
        step_index=state.step_index + 1,
        flight_steps=flight,
        opponent_aim=aim,
        opponent_plane=opp_plane,
        point_steps=point_steps,
    )

    if event is Event.AGENT_SCORED or event is Event.OPPONENT_SCORED:
        agent_pts, opp_pts = state.score
        if event is Event.AGENT_SCORED:
            agent_pts, reward = agent_pts + 1, 1.0
        else:
            opp_pts, reward = opp_pts + 1, -1.0
        score = (agent_pts, opp_pts)
        next_state = _serve_state(config, rng, replace(moved, score=score))
        done = max(score) >= config.points_to_win
        if done:
            next_state = replace(next_state, done=True)
            event = Event.EPISODE_END
        return StepResult(next_state, reward, done, event, contact)

    return StepResult(moved, 0.0, False, event, contact)


class MiniGame:
    """Stateful wrapper owning a config, an RNG stream and the current state."""

    def __init__(self, config: EnvConfig, seed: int | None = None) -> None:
        self.config = config
        self.rng = np.random.default_rng(config.seed if seed is None else seed)
        self.state: GameState | None = None

    def reset(self, seed: int | None = None) -> GameState:
        """Start a new episode. Passing ``seed`` restarts the RNG stream;
        otherwise the stream continues from the previous episode."""
        if seed is not None:
            self.rng = np.random.default_rng(seed)
        self.state = initial_state(self.config, self.rng)
        return self.state

    def step(self, action: Action | int) -> StepResult:
        if self.state is None:
            raise UsageError("reset() must be called before step()")
        result = step(self.state, action, self.rng, self.config)
        self.state = result.state
        return result


def reset(config: EnvConfig, seed: int) -> GameState:
    return MiniGame(config, seed).reset()


def normalize_state(state: GameState, config: EnvConfig) -> np.ndarray:
    """Map a state to ``[0, 1]^8``:
    ``[agent_x, agent_y, opp_x, opp_y, ball_x, ball_y, ball_vx, ball_vy]``.

    MiniPong paddles have fixed x, reported as 0.5. Velocities are mapped by
    ``(v + v_max) / (2 v_max)``.
    """
    v_max = config.v_max
    if config.game is Game.MINIPONG:
        ax = ox = 0.5
    else:
        ax, ox = state.agent_pos[0], state.opponent_pos[0]
    vx, vy = state.ball_vel
    out = np.array(
        [
            ax,
            state.agent_pos[1],
            ox,
            state.opponent_pos[1],
            state.ball_pos[0],
            state.ball_pos[1],
            (vx + v_max) / (2.0 * v_max),
            (vy + v_max) / (2.0 * v_max),
        ]
    )
    return np.clip(out, 0.0, 1.0, out=out)
