from __future__ import annotations

import dataclasses

import numpy as np
import pytest

from instrhrl.env import Action, EnvConfig, Game, MiniGame
from instrhrl.errors import CollectionError, ConfigError, TrainingError
from instrhrl.options import AnalyticDynamics, move_toward
from instrhrl.skills import (
    ACTIONS,
    Dataset,
    DynamicsModel,
    FEATURE_LEN,
    HistoryWindow,
    LearnedDynamics,
    collect_samples,
    heldout_mae,
    parse_model,
    predict_next,
    serialize_model,
    train_dynamics,
)

NOISELESS = EnvConfig(paddle_noise_std=0.0)
PUSH = {Action.NOOP: 0, Action.UP: 1, Action.DOWN: -1}


def reference_next(window: HistoryWindow, action: Action, cfg: EnvConfig) -> float:
    p = window.positions
    v = cfg.paddle_momentum * (p[-1] - p[-2]) + cfg.paddle_step * PUSH[action]
    return min(1.0, max(0.0, p[-1] + v))


@pytest.fixture(scope="module")
def noiseless_model():
    return train_dynamics(collect_samples(NOISELESS, 5_000, 0))


def test_noiseless_samples_follow_dynamics():
    data = collect_samples(NOISELESS, 100, 0)
    assert len(data) == 100
    for w, a, nxt in zip(data.windows, data.actions, data.next_positions):
        assert nxt == pytest.approx(reference_next(w, Action(int(a)), NOISELESS), abs=1e-12)


def test_samples_are_unique():
    data = collect_samples(EnvConfig(), 2_000, 1)
    keys = {w.key(Action(int(a))) for w, a in zip(data.windows, data.actions)}
    assert len(keys) == len(data)


def test_collection_respects_budget():
    data = collect_samples(EnvConfig(), 50_000, 0)
    assert len(data) == 50_000
    assert data.steps_used <= 100 * 50_000


def test_collection_budget_exhaustion():
    # a frozen paddle revisits the same window; uniqueness cannot be reached
    frozen = EnvConfig(paddle_step=1e-9, paddle_momentum=0.0, paddle_noise_std=0.0)
    with pytest.raises(CollectionError) as exc:
        collect_samples(frozen, 500, 0)
    assert exc.value.achieved < 500


def test_collection_is_pong_only():
    with pytest.raises(ConfigError):
        collect_samples(EnvConfig(game=Game.MINITENNIS), 10, 0)


def test_missing_action_class():
    data = collect_samples(NOISELESS, 300, 0)
    keep = data.actions != int(Action.UP)
    pruned = Dataset([w for w, k in zip(data.windows, keep) if k], data.actions[keep], data.next_positions[keep])
    with pytest.raises(TrainingError, match="UP"):
        train_dynamics(pruned)


def test_momentum_free_model_is_exact():
    cfg = dataclasses.replace(NOISELESS, paddle_momentum=0.0)
    # positions live on a paddle_step lattice, so only a few thousand windows exist
    model = train_dynamics(collect_samples(cfg, 2_000, 0))
    assert max(model.train_mae.values()) <= 1e-9


def test_noiseless_model_matches_simulator(noiseless_model):
    held = collect_samples(NOISELESS, 1_000, 99)
    for w, a in zip(held.windows[:200], held.actions[:200]):
        a = Action(int(a))
        assert predict_next(noiseless_model, w, a) == pytest.approx(reference_next(w, a, NOISELESS), abs=1e-9)
    assert heldout_mae(noiseless_model, held) <= 1e-9


def test_prediction_is_clamped():
    weights = np.zeros((len(ACTIONS), FEATURE_LEN))
    weights[:, -1] = 1.02
    model = DynamicsModel(weights)
    window = HistoryWindow((0.5,) * 4, (Action.NOOP,) * 3)
    assert predict_next(model, window, Action.UP) == 1.0
    weights[:, -1] = -0.5
    assert predict_next(DynamicsModel(weights), window, Action.UP) == 0.0


def test_prediction_deterministic(noiseless_model):
    window = HistoryWindow((0.2, 0.25, 0.3, 0.31), (Action.UP, Action.NOOP, Action.DOWN))
    assert predict_next(noiseless_model, window, Action.UP) == predict_next(noiseless_model, window, Action.UP)


def test_model_file_round_trip(noiseless_model):
    back = parse_model(serialize_model(noiseless_model))
    assert np.array_equal(back.weights, noiseless_model.weights)
    assert back.game is Game.MINIPONG


def test_history_window_validation():
    with pytest.raises(Exception):
        HistoryWindow((0.1, 0.2), (Action.NOOP,) * 3)
    with pytest.raises(Exception):
        HistoryWindow((0.1, 0.2, 0.3, 1.5), (Action.NOOP,) * 3)


def test_controller_equivalence(noiseless_model):
    """Learned and analytic dynamics drive move_toward to the same action on
    reachable paddle histories, for random targets."""
    rng = np.random.default_rng(0)
    analytic = AnalyticDynamics(NOISELESS)
    learned = LearnedDynamics(noiseless_model)
    game = MiniGame(NOISELESS, 5)
    s = game.reset()
    learned.reset(s)
    agree = 0
    n = 10_000
    for _ in range(n):
        target = float(rng.uniform(0.0, 1.0))
        agree += move_toward(target, s, NOISELESS, analytic) is move_toward(target, s, NOISELESS, learned)
        action = ACTIONS[int(rng.integers(3))]
        r = game.step(action)
        if r.done:
            s = game.reset()
            learned.reset(s)
        else:
            s = r.state
            learned.observe(action, s)
    assert agree / n >= 0.999
