from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from helpers import TwoStateChain, one_hot
from instrhrl.env import EnvConfig, MiniGame
from instrhrl.errors import ConfigError, NumericalError, PreconditionError
from instrhrl.features import build_basis
from instrhrl.learn import (
    LearnerConfig,
    QWeights,
    SegmentRecord,
    UpdateRule,
    accumulate_literal,
    accumulate_segment,
    anneal_epsilon,
    apply_update,
    parse_weights,
    q_gradient,
    q_value,
    run_episode_sarsa,
    run_episode_sorso,
    segment_delta,
    select_option,
    serialize_weights,
)
from instrhrl.options import compile_options, default_manifest, primitive_options

BASIS = build_basis(3, 8, 512)


def segment_return(rewards, gamma):
    R = k = 0
    for r in rewards:
        R, k = accumulate_segment(R, k, r, gamma)
    return R, k


def test_q_value_examples():
    w = QWeights.zeros(3, 4)
    phi = np.array([1.0, 0.0, 0.0, 0.0])
    assert all(q_value(w, phi, o) == 0.0 for o in range(3))
    w.blocks[1, 0] = 3.0
    assert q_value(w, phi, 1) == 3.0
    w.blocks[0] = 7.0
    w.blocks[2] = -7.0
    assert q_value(w, phi, 1) == 3.0


def test_q_value_shape_checks():
    w = QWeights.zeros(2, 4)
    with pytest.raises(PreconditionError):
        q_value(w, np.zeros(3), 0)
    with pytest.raises(PreconditionError):
        q_value(w, np.zeros(4), 2)


def test_gradient_examples():
    assert not q_gradient(np.zeros(4), 1, (3, 4)).any()
    phi = np.arange(4.0)
    g = q_gradient(phi, 2, (3, 4))
    assert np.array_equal(g[2], phi) and not g[:2].any()


def test_greedy_selection_and_tie_break():
    rng = np.random.default_rng(0)
    w = QWeights.zeros(4, 2)
    phi = np.array([1.0, 0.5])
    assert select_option(w, phi, [3, 1, 2], 0.0, rng) == 1
    w.blocks[2] = [1.0, 0.0]
    assert select_option(w, phi, [0, 1, 2, 3], 0.0, rng) == 2
    assert select_option(w, phi, [0, 1, 3], 0.0, rng) == 0


def test_greedy_draws_no_random_numbers():
    rng = np.random.default_rng(5)
    before = rng.bit_generator.state
    select_option(QWeights.zeros(3, 2), np.ones(2), [0, 1, 2], 0.0, rng)
    assert rng.bit_generator.state == before


def test_uniform_exploration_chi_square():
    rng = np.random.default_rng(123)
    w = QWeights.zeros(6, 2)
    w.blocks[4] = 10.0
    initiable = [1, 2, 4, 5]
    draws = [select_option(w, np.ones(2), initiable, 1.0, rng) for _ in range(10_000)]
    counts = [draws.count(i) for i in initiable]
    assert sum(counts) == 10_000
    assert stats.chisquare(counts).pvalue > 0.01


def test_no_initiable_option():
    with pytest.raises(PreconditionError):
        select_option(QWeights.zeros(2, 2), np.ones(2), [], 0.1, np.random.default_rng(0))


def test_segment_return_examples():
    assert segment_return((1, 0, 0, 2), 0.5) == (1.25, 4)
    assert segment_return((3, 5, 7), 0.0) == (3, 3)
    assert segment_return((3, 5, 7), 1.0) == (15, 3)


def test_literal_recursion_weights_early_rewards():
    R = k = 0
    for r in (1, 0, 0, 2):
        R, k = accumulate_literal(R, k, r, 0.5)
    assert (R, k) == (1 * 0.125 + 2, 4)


def test_delta_examples():
    w = QWeights.zeros(2, 3)
    phi = np.array([1.0, 0.0, 0.5])
    seg = SegmentRecord(phi, 0, 2.5, 3, phi, 1)
    assert segment_delta(seg, w, 0.9) == 2.5
    w.blocks[0] = [2.5, 0.0, 0.0]
    assert segment_delta(SegmentRecord(phi, 0, 2.5, 3, None, None), w, 0.9) == 0.0


def test_delta_bootstraps_with_gamma_to_the_k():
    w = QWeights(np.array([[1.0], [2.0]]))
    phi = np.ones(1)
    seg = SegmentRecord(phi, 0, 0.5, 3, phi, 1)
    assert segment_delta(seg, w, 0.5) == pytest.approx(0.5 + 0.125 * 2 - 1)
    # q-learning bootstraps from the best initiable option
    assert segment_delta(seg, w, 0.5, UpdateRule.QLEARNING, [0]) == pytest.approx(0.5 + 0.125 - 1)


def test_trace_decay_then_add():
    cfg = LearnerConfig(gamma=0.5, lam=0.5)
    w = QWeights.zeros(2, 2)
    z = np.ones((2, 2))
    phi = np.array([1.0, 2.0])
    apply_update(w, z, 0.0, phi, 1, 2, cfg)
    assert np.array_equal(z, [[0.0625, 0.0625], [1.0625, 2.0625]])


def test_lambda_zero_keeps_only_current_gradient():
    cfg = LearnerConfig(lam=0.0)
    z = np.full((2, 3), 4.0)
    phi = np.array([1.0, 0.0, 1.0])
    apply_update(QWeights.zeros(2, 3), z, 0.0, phi, 0, 1, cfg)
    assert np.array_equal(z, [[1.0, 0.0, 1.0], [0.0, 0.0, 0.0]])


def test_scalar_update():
    cfg = LearnerConfig(alpha=0.5, gamma=1.0, lam=0.0)
    w = QWeights.zeros(1, 1)
    apply_update(w, np.zeros((1, 1)), 1.0, np.ones(1), 0, 1, cfg)
    assert w.blocks[0, 0] == 0.5


def test_non_finite_delta_raises():
    with pytest.raises(NumericalError):
        apply_update(QWeights.zeros(1, 1), np.zeros((1, 1)), math.nan, np.ones(1), 0, 1, LearnerConfig())


def test_learner_config_validation():
    with pytest.raises(ConfigError):
        LearnerConfig(gamma=1.5)
    with pytest.raises(ConfigError):
        LearnerConfig(alpha=0.0)


def test_epsilon_schedule_examples():
    cfg = LearnerConfig(epsilon_decay=0.0)
    assert anneal_epsilon(0.7, cfg) == 0.7
    assert anneal_epsilon(0.01, LearnerConfig()) == 0.01
    cfg = LearnerConfig(epsilon_decay=1e-5, epsilon_min=0.0)
    eps = 1.0
    for _ in range(100_000):
        eps = anneal_epsilon(eps, cfg)
    assert eps == pytest.approx(math.exp(-1), rel=0.02)


@given(st.floats(0, 1), st.floats(0, 1e-2), st.floats(0, 0.5), st.integers(1, 500))
def test_epsilon_non_increasing_with_floor(eps0, decay, floor, n):
    cfg = LearnerConfig(epsilon_decay=decay, epsilon_min=floor)
    eps = max(eps0, floor)
    for _ in range(n):
        nxt = anneal_epsilon(eps, cfg)
        assert floor <= nxt <= eps
        eps = nxt


def test_sarsa_one_step_gamma_zero():
    """gamma = lam = 0: each update is alpha * (r - Q(s, a)) * phi."""
    cfg = LearnerConfig(alpha=0.1, gamma=0.0, lam=0.0, epsilon_start=0.0, epsilon_min=0.0)
    env = TwoStateChain()
    w = QWeights.zeros(2, 2)
    w, log = run_episode_sarsa(env, None, w, cfg, np.random.default_rng(0), 0.0, features=one_hot)
    assert log.steps == 2
    assert np.allclose(w.blocks, [[0.1 * 1.0, 0.1 * 2.0], [0.0, 0.0]])


def test_sorso_terminal_single_step_update():
    cfg = LearnerConfig(alpha=0.25, gamma=0.0, lam=0.0)
    w = QWeights.zeros(2, 2)
    z = np.zeros((2, 2))
    phi = np.array([1.0, -1.0])
    r = 1.0
    seg = SegmentRecord(phi, 0, r, 1, None, None)
    apply_update(w, z, segment_delta(seg, w, cfg.gamma), phi, 0, 1, cfg)
    assert np.array_equal(w.blocks[0], cfg.alpha * r * phi)


def test_hierarchical_episode_liveness():
    cfg = EnvConfig()
    options = compile_options(default_manifest(cfg.game), cfg)
    w = QWeights.zeros(len(options), BASIS.n_features)
    w, log = run_episode_sorso(MiniGame(cfg, 0), options, BASIS, w, LearnerConfig(), np.random.default_rng(0), 1.0, record=True)
    assert log.points_won + log.points_lost >= cfg.points_to_win
    assert max(log.points_won, log.points_lost) == cfg.points_to_win
    assert log.segments and all(s.k >= 1 for s in log.segments)
    assert sum(s.k for s in log.segments) == log.steps
    assert np.isfinite(w.blocks).all()
    assert LearnerConfig().epsilon_min <= log.epsilon < 1.0


def test_qlearning_single_option_equals_sarsa():
    env_cfg = EnvConfig()
    options = primitive_options(env_cfg)[:1]  # NoOp only
    runs = []
    for rule in UpdateRule:
        cfg = LearnerConfig(update_rule=rule)
        w = QWeights.zeros(1, BASIS.n_features)
        env = MiniGame(env_cfg, 4)
        rng = np.random.default_rng(4)
        eps = 1.0
        for _ in range(3):
            w, log = run_episode_sorso(env, options, BASIS, w, cfg, rng, eps)
            eps = log.epsilon
        runs.append(w.blocks)
    assert np.max(np.abs(runs[0] - runs[1])) <= 1e-12


def test_sarsa_determinism():
    env_cfg = EnvConfig()
    outs = []
    for _ in range(2):
        w = QWeights.zeros(3, BASIS.n_features)
        env = MiniGame(env_cfg, 9)
        rng = np.random.default_rng(9)
        eps = 1.0
        for _ in range(3):
            w, log = run_episode_sarsa(env, BASIS, w, LearnerConfig(), rng, eps)
            eps = log.epsilon
        outs.append(w.blocks.copy())
    assert np.array_equal(outs[0], outs[1])


def test_checkpoint_round_trip_exact():
    rng = np.random.default_rng(0)
    w = QWeights(rng.normal(size=(4, 7)) * 10.0 ** rng.integers(-20, 20, size=(4, 7)))
    back, game = parse_weights(serialize_weights(w, "minipong"))
    assert np.array_equal(back.blocks, w.blocks)
    assert game.value == "minipong"
