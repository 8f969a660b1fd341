"""Supervised action-effect model for the agent paddle.

The model predicts the next lateral paddle position from the last four
positions and the last three actions, with one linear map per candidate
action. Samples come from a uniform-random policy.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .env import PONG_ACTIONS, Action, EnvConfig, Game, GameState, MiniGame
from .errors import CollectionError, ConfigError, PreconditionError, SyntaxConfigError, TrainingError

N_POSITIONS = 4
N_PAST_ACTIONS = 3
ACTIONS = PONG_ACTIONS
LATEST = N_POSITIONS - 1  # column of the most recent position
FEATURE_LEN = N_POSITIONS + N_PAST_ACTIONS * len(ACTIONS) + 1
DEFAULT_RIDGE = 1e-12
MODEL_HEADER = "dynmodel v1"


@dataclass(frozen=True)
class HistoryWindow:
    positions: tuple[float, ...]  # oldest first
    actions: tuple[Action, ...]  # oldest first

    def __post_init__(self) -> None:
        if len(self.positions) != N_POSITIONS or len(self.actions) != N_PAST_ACTIONS:
            raise PreconditionError(
                f"window needs {N_POSITIONS} positions and {N_PAST_ACTIONS} actions, "
                f"got {len(self.positions)} and {len(self.actions)}"
            )
        if any(not 0.0 <= p <= 1.0 for p in self.positions):
            raise PreconditionError(f"positions must lie in [0, 1], got {self.positions}")

    def key(self, action: Action) -> tuple[int, ...]:
        """Dedup key quantized to 1e-6."""
        return tuple(round(p * 1e6) for p in self.positions) + tuple(int(a) for a in self.actions) + (int(action),)


def encode_window(window: HistoryWindow) -> np.ndarray:
    x = np.zeros(FEATURE_LEN)
    x[:N_POSITIONS] = window.positions
    for i, a in enumerate(window.actions):
        x[N_POSITIONS + i * len(ACTIONS) + ACTIONS.index(a)] = 1.0
    x[-1] = 1.0
    return x


class PaddleHistory:
    """Rolling window fed with each executed action and resulting position."""

    def __init__(self, position: float) -> None:
        self.reset(position)

    def reset(self, position: float) -> None:
        # a paddle at rest: repeated position, idle actions
        self.positions = deque([position] * N_POSITIONS, maxlen=N_POSITIONS)
        self.actions = deque([Action.NOOP] * N_PAST_ACTIONS, maxlen=N_PAST_ACTIONS)

    def push(self, action: Action, position: float) -> None:
        self.actions.append(Action(action))
        self.positions.append(position)

    def window(self) -> HistoryWindow:
        return HistoryWindow(tuple(self.positions), tuple(self.actions))


@dataclass
class Dataset:
    windows: list[HistoryWindow]
    actions: np.ndarray  # (n,) int
    next_positions: np.ndarray  # (n,)
    steps_used: int = 0

    def __len__(self) -> int:
        return len(self.windows)

    def design_matrix(self) -> np.ndarray:
        return np.stack([encode_window(w) for w in self.windows]) if self.windows else np.zeros((0, FEATURE_LEN))


def collect_samples(env_config: EnvConfig, n_unique: int, seed: int) -> Dataset:
    """Roll out a uniform-random policy until ``n_unique`` distinct
    ``(window, action)`` pairs are seen, within ``100 * n_unique`` steps."""
    if n_unique < 1:
        raise ConfigError("n_unique", f"must be >= 1, got {n_unique}")
    if env_config.game is not Game.MINIPONG:
        raise ConfigError("game", "action-effect pretraining is defined for minipong")
    env_seed, policy_seed = np.random.SeedSequence(seed).spawn(2)
    game = MiniGame(env_config, int(env_seed.generate_state(1)[0]))
    policy_rng = np.random.default_rng(policy_seed)

    state = game.reset()
    history = PaddleHistory(state.agent_pos[1])
    seen: set[tuple[int, ...]] = set()
    windows, actions, targets = [], [], []
    budget = 100 * n_unique
    steps = 0
    while len(windows) < n_unique:
        if steps >= budget:
            raise CollectionError(len(windows), n_unique, budget)
        window = history.window()
        action = ACTIONS[int(policy_rng.integers(len(ACTIONS)))]
        result = game.step(action)
        steps += 1
        nxt = result.state.agent_pos[1]
        key = window.key(action)
        if key not in seen:
            seen.add(key)
            windows.append(window)
            actions.append(int(action))
            targets.append(nxt)
        history.push(action, nxt)
        if result.done:
            state = game.reset()
            history.reset(state.agent_pos[1])
    return Dataset(windows, np.array(actions, dtype=np.int64), np.array(targets), steps)


@dataclass(frozen=True)
class DynamicsModel:
    weights: np.ndarray  # (n_actions, FEATURE_LEN), row per action in ACTIONS order
    train_mae: dict[Action, float] = field(default_factory=dict)
    game: Game = Game.MINIPONG


def _saturated(y: np.ndarray) -> np.ndarray:
    return (y <= 0.0) | (y >= 1.0)


def train_dynamics(dataset: Dataset, ridge: float = DEFAULT_RIDGE) -> DynamicsModel:
    """Per-action ridge regression, solved as an augmented least-squares
    problem for numerical stability.

    The fit targets the displacement from the latest position, so the ridge
    shrinks toward a paddle that stays put rather than toward zero. On the
    momentum-free lattice the window features are collinear and this picks
    the solution that extrapolates to wall-pinned histories.

    Targets pinned at a wall are left out of the fit: prediction clamps to
    the court, so the linear map only has to be right off the walls. The
    recorded training error is the mean absolute error of the clamped
    prediction over every sample of that action.
    """
    if ridge < 0:
        raise ConfigError("ridge", f"must be >= 0, got {ridge}")
    X = dataset.design_matrix()
    y = dataset.next_positions
    weights = np.zeros((len(ACTIONS), FEATURE_LEN))
    mae = {}
    for i, action in enumerate(ACTIONS):
        mask = dataset.actions == int(action)
        if not mask.any():
            raise TrainingError(f"no samples for action {action.name}")
        Xa, ya = X[mask], y[mask]
        fit = ~_saturated(ya)
        if not fit.any():
            fit = np.ones_like(fit)
        A = np.vstack([Xa[fit], np.sqrt(ridge) * np.eye(FEATURE_LEN)])
        b = np.concatenate([ya[fit] - Xa[fit, LATEST], np.zeros(FEATURE_LEN)])
        weights[i] = np.linalg.lstsq(A, b, rcond=None)[0]
        weights[i, LATEST] += 1.0
        pred = np.clip(Xa @ weights[i], 0.0, 1.0)
        mae[action] = float(np.mean(np.abs(pred - ya)))
    return DynamicsModel(weights, mae)


def predict_next(model: DynamicsModel, window: HistoryWindow, action: Action) -> float:
    value = float(model.weights[ACTIONS.index(Action(action))] @ encode_window(window))
    return min(1.0, max(0.0, value))


def heldout_mae(model: DynamicsModel, dataset: Dataset) -> float:
    X = dataset.design_matrix()
    rows = np.array([ACTIONS.index(Action(a)) for a in dataset.actions])
    pred = np.clip(np.einsum("ij,ij->i", X, model.weights[rows]), 0.0, 1.0)
    return float(np.mean(np.abs(pred - dataset.next_positions)))


class LearnedDynamics:
    """Controller dynamics backed by a trained model and a paddle history."""

    def __init__(self, model: DynamicsModel) -> None:
        self.model = model
        self.history: PaddleHistory | None = None

    def reset(self, state: GameState) -> None:
        self.history = PaddleHistory(state.agent_pos[1])

    def observe(self, action: Action, state: GameState) -> None:
        if self.history is None:
            self.reset(state)
        self.history.push(action, state.agent_pos[1])

    def predict(self, state: GameState, action: Action) -> tuple[float, float]:
        if self.history is None:
            self.reset(state)
        return state.agent_pos[0], predict_next(self.model, self.history.window(), action)


def serialize_model(model: DynamicsModel) -> str:
    lines = [f"{MODEL_HEADER} {model.game.value}"]
    for action, row in zip(ACTIONS, model.weights):
        lines.append(f"{action.name.lower()}: " + " ".join("%.17g" % w for w in row))
    return "\n".join(lines) + "\n"


def parse_model(text: str) -> DynamicsModel:
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise SyntaxConfigError(1, "empty model file")
    header = lines[0].split()
    if header[:2] != MODEL_HEADER.split() or len(header) != 3:
        raise SyntaxConfigError(1, f"expected '{MODEL_HEADER} <game>', got {lines[0]!r}")
    game = Game(header[2])
    rows = {}
    for lineno, line in enumerate(lines[1:], start=2):
        name, _, values = line.partition(":")
        try:
            action = Action[name.strip().upper()]
            row = np.array([float(v) for v in values.split()])
        except (KeyError, ValueError):
            raise SyntaxConfigError(lineno, f"bad model line {line!r}") from None
        if row.shape != (FEATURE_LEN,):
            raise SyntaxConfigError(lineno, f"expected {FEATURE_LEN} weights, got {row.size}")
        rows[action] = row
    missing = [a.name for a in ACTIONS if a not in rows]
    if missing:
        raise SyntaxConfigError(len(lines), f"missing actions {missing}")
    return DynamicsModel(np.stack([rows[a] for a in ACTIONS]), game=game)


def save_model(model: DynamicsModel, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(serialize_model(model))


def load_model(path) -> DynamicsModel:
    with open(path, encoding="utf-8") as fh:
        return parse_model(fh.read())
