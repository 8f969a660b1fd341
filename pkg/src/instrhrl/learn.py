"""Linear option-value learning: SORSO(lambda) over options, flat SARSA(lambda).

Q(s, o) = w_o . phi(s) with one weight block per option (or per primitive
action for the flat learner) over a shared Fourier basis.

Rewards inside an option segment are discounted forward,
``R = r_1 + gamma r_2 + ... + gamma^(k-1) r_k``, and the segment TD error
bootstraps with ``gamma^k``. Setting ``literal_return`` switches to the
``R <- gamma R + r`` recursion instead, which weights early rewards more.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Sequence

import numpy as np

from .env import Game, MiniGame, normalize_state
from .errors import ConfigError, NumericalError, PreconditionError, SyntaxConfigError
from .features import FourierBasis, featurize, lr_scaling
from .options import Dynamics, TemporalOption, initiable_ids, intra_action, termination


class UpdateRule(str, Enum):
    SARSA = "sarsa"
    QLEARNING = "qlearning"


@dataclass(frozen=True)
class LearnerConfig:
    alpha: float = 5e-5
    gamma: float = 0.99
    lam: float = 0.99
    epsilon_start: float = 1.0
    epsilon_min: float = 0.01
    epsilon_decay: float = 2e-5  # multiplicative, per environment step
    update_rule: UpdateRule = UpdateRule.SARSA
    literal_return: bool = False
    lr_scaling: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "update_rule", UpdateRule(self.update_rule))
        if not self.alpha > 0:
            raise ConfigError("alpha", f"must be > 0, got {self.alpha}")
        for name in ("gamma", "lam", "epsilon_start", "epsilon_min", "epsilon_decay"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ConfigError(name, f"must lie in [0, 1], got {value}")


@dataclass
class QWeights:
    blocks: np.ndarray  # (option_count, feature_len)

    @classmethod
    def zeros(cls, option_count: int, feature_len: int) -> "QWeights":
        return cls(np.zeros((option_count, feature_len)))

    @property
    def option_count(self) -> int:
        return self.blocks.shape[0]

    @property
    def feature_len(self) -> int:
        return self.blocks.shape[1]

    def copy(self) -> "QWeights":
        return QWeights(self.blocks.copy())


def q_value(w: QWeights, phi: np.ndarray, o: int) -> float:
    if phi.shape != (w.feature_len,):
        raise PreconditionError(f"feature length {phi.shape} does not match weights ({w.feature_len},)")
    if not 0 <= o < w.option_count:
        raise PreconditionError(f"option {o} out of range [0, {w.option_count})")
    return float(w.blocks[o] @ phi)


def q_gradient(phi: np.ndarray, o: int, shape: tuple[int, int]) -> np.ndarray:
    """Gradient of ``q_value`` w.r.t. the weights: ``phi`` in block ``o``."""
    if phi.shape != (shape[1],):
        raise PreconditionError(f"feature length {phi.shape} does not match shape {shape}")
    if not 0 <= o < shape[0]:
        raise PreconditionError(f"option {o} out of range [0, {shape[0]})")
    grad = np.zeros(shape)
    grad[o] = phi
    return grad


def select_option(
    w: QWeights,
    phi: np.ndarray,
    initiable: Sequence[int],
    epsilon: float,
    rng: np.random.Generator,
) -> int:
    """Epsilon-greedy over ``initiable``; greedy ties go to the lowest id.

    No random number is drawn when ``epsilon == 0``.
    """
    if len(initiable) == 0:
        raise PreconditionError("no initiable option")
    if epsilon > 0.0 and rng.random() < epsilon:
        return int(initiable[int(rng.integers(len(initiable)))])
    ids = sorted(initiable)
    values = w.blocks[ids] @ phi
    return int(ids[int(np.argmax(values))])


def accumulate_segment(R: float, k: int, reward: float, gamma: float) -> tuple[float, int]:
    return R + gamma**k * reward, k + 1


def accumulate_literal(R: float, k: int, reward: float, gamma: float) -> tuple[float, int]:
    return gamma * R + reward, k + 1


@dataclass
class SegmentRecord:
    s: np.ndarray
    o: int
    R: float
    k: int
    s_next: np.ndarray | None  # None when the segment ends the episode
    o_next: int | None

    def __post_init__(self) -> None:
        if self.k < 1:
            raise PreconditionError(f"segment length must be >= 1, got {self.k}")
        if not np.isfinite(self.R):
            raise NumericalError(f"non-finite segment return {self.R}")

    @property
    def terminal(self) -> bool:
        return self.s_next is None


def segment_delta(
    seg: SegmentRecord,
    w: QWeights,
    gamma: float,
    rule: UpdateRule = UpdateRule.SARSA,
    initiable_next: Sequence[int] = (),
) -> float:
    q_s = q_value(w, seg.s, seg.o)
    if seg.terminal:
        return seg.R - q_s
    if rule is UpdateRule.SARSA:
        q_next = q_value(w, seg.s_next, seg.o_next)
    else:
        if len(initiable_next) == 0:
            raise PreconditionError("q-learning target needs a non-empty initiable set")
        q_next = float(np.max(w.blocks[list(initiable_next)] @ seg.s_next))
    return seg.R + gamma**seg.k * q_next - q_s


def apply_update(
    w: QWeights,
    z: np.ndarray,
    delta: float,
    phi: np.ndarray,
    o: int,
    k: int,
    config: LearnerConfig,
    lr: np.ndarray | None = None,
) -> tuple[QWeights, np.ndarray]:
    """In place: ``z <- (gamma lam)^k z + grad Q(s, o)``, then ``w <- w + alpha delta z``.

    ``lr`` optionally gives a per-feature step size replacing ``alpha``.
    """
    if not np.isfinite(delta):
        raise NumericalError(f"non-finite TD error {delta} for option {o}, segment length {k}")
    if z.shape != w.blocks.shape:
        raise PreconditionError(f"trace shape {z.shape} does not match weights {w.blocks.shape}")
    z *= (config.gamma * config.lam) ** k
    z[o] += phi
    if lr is None:
        w.blocks += (config.alpha * delta) * z
    else:
        w.blocks += delta * z * lr
    return w, z


def anneal_epsilon(epsilon: float, config: LearnerConfig) -> float:
    return max(config.epsilon_min, epsilon * (1.0 - config.epsilon_decay))


@dataclass
class SegmentLog:
    o: int
    k: int
    R: float
    rewards: tuple[float, ...]
    q_start: float
    q_next: float | None
    delta: float
    gamma: float


@dataclass
class EpisodeLog:
    total_return: float = 0.0
    steps: int = 0
    n_segments: int = 0
    epsilon: float = 1.0
    points_won: int = 0
    points_lost: int = 0
    rewards: list[float] = field(default_factory=list)
    segments: list[SegmentLog] = field(default_factory=list)


def _features(basis: FourierBasis, state, env_config) -> np.ndarray:
    return featurize(basis, normalize_state(state, env_config))


def _trace_bound(config: LearnerConfig) -> float:
    decay = config.gamma * config.lam
    return np.inf if decay >= 1.0 else 1.0 / (1.0 - decay) + 1.0


def _check(w: QWeights, z: np.ndarray, bound: float) -> None:
    if not np.isfinite(w.blocks).all():
        raise NumericalError("non-finite weight after update")
    if np.abs(z).max() > bound:
        raise NumericalError(f"eligibility trace exceeded its bound {bound}")


def _tally(log: EpisodeLog, reward: float) -> None:
    log.total_return += reward
    log.steps += 1
    log.rewards.append(reward)
    if reward > 0:
        log.points_won += 1
    elif reward < 0:
        log.points_lost += 1


def run_episode_sorso(
    env: MiniGame,
    options: Sequence[TemporalOption],
    basis: FourierBasis,
    w: QWeights,
    config: LearnerConfig,
    rng: np.random.Generator,
    epsilon: float,
    dyn: Dynamics | None = None,
    record: bool = False,
) -> tuple[QWeights, EpisodeLog]:
    """One episode of call-and-return option learning; ``w`` is updated in place."""
    env_cfg = env.config
    gamma = config.gamma
    accumulate = accumulate_literal if config.literal_return else accumulate_segment
    lr = lr_scaling(basis, config.alpha) if config.lr_scaling else None
    bound = _trace_bound(config)

    state = env.reset()
    if dyn is not None:
        dyn.reset(state)
    z = np.zeros_like(w.blocks)
    phi = _features(basis, state, env_cfg)
    initiable = initiable_ids(options, state, None)
    o = select_option(w, phi, initiable, epsilon, rng)
    R, k = 0.0, 0
    seg_rewards: list[float] = []
    log = EpisodeLog(epsilon=epsilon)

    while True:
        action = intra_action(options[o], state, env_cfg, dyn)
        result = env.step(action)
        if dyn is not None:
            dyn.observe(action, result.state)
        reward = result.reward
        _tally(log, reward)
        R, k = accumulate(R, k, reward, gamma)
        if record:
            seg_rewards.append(reward)

        if result.done:
            seg = SegmentRecord(phi, o, R, k, None, None)
            delta = segment_delta(seg, w, gamma)
            if record:
                log.segments.append(
                    SegmentLog(o, k, R, tuple(seg_rewards), q_value(w, phi, o), None, delta, gamma)
                )
            apply_update(w, z, delta, phi, o, k, config, lr)
            _check(w, z, bound)
            log.n_segments += 1
            epsilon = anneal_epsilon(epsilon, config)
            break

        if termination(options[o], result.state, result.event, env_cfg):
            phi_next = _features(basis, result.state, env_cfg)
            initiable = initiable_ids(options, result.state, result.event)
            o_next = select_option(w, phi_next, initiable, epsilon, rng)
            seg = SegmentRecord(phi, o, R, k, phi_next, o_next)
            delta = segment_delta(seg, w, gamma, config.update_rule, initiable)
            if record:
                if config.update_rule is UpdateRule.SARSA:
                    q_next = q_value(w, phi_next, o_next)
                else:
                    q_next = float(np.max(w.blocks[initiable] @ phi_next))
                log.segments.append(
                    SegmentLog(o, k, R, tuple(seg_rewards), q_value(w, phi, o), q_next, delta, gamma)
                )
            apply_update(w, z, delta, phi, o, k, config, lr)
            _check(w, z, bound)
            log.n_segments += 1
            phi, o = phi_next, o_next
            R, k = 0.0, 0
            seg_rewards = []

        state = result.state
        epsilon = anneal_epsilon(epsilon, config)

    log.epsilon = epsilon
    return w, log


def run_episode_sarsa(
    env: MiniGame,
    basis: FourierBasis,
    w: QWeights,
    config: LearnerConfig,
    rng: np.random.Generator,
    epsilon: float,
    features: Callable[[object], np.ndarray] | None = None,
) -> tuple[QWeights, EpisodeLog]:
    """One episode of flat SARSA(lambda) with accumulating traces over
    primitive actions; ``w`` holds one block per action in
    ``env.config.actions`` order.

    ``features`` replaces the Fourier features of the normalized court
    state, so any environment with ``reset``/``step`` and a config exposing
    ``actions`` can be plugged in.
    """
    env_cfg = env.config
    actions = env_cfg.actions
    ids = list(range(len(actions)))
    gamma = config.gamma
    lr = lr_scaling(basis, config.alpha) if config.lr_scaling else None
    bound = _trace_bound(config)
    if features is None:
        def features(state):
            return _features(basis, state, env_cfg)

    state = env.reset()
    z = np.zeros_like(w.blocks)
    phi = features(state)
    a = select_option(w, phi, ids, epsilon, rng)
    log = EpisodeLog(epsilon=epsilon)

    while True:
        result = env.step(actions[a])
        reward = result.reward
        _tally(log, reward)
        q_s = q_value(w, phi, a)
        if result.done:
            delta = reward - q_s
            apply_update(w, z, delta, phi, a, 1, config, lr)
            _check(w, z, bound)
            epsilon = anneal_epsilon(epsilon, config)
            break
        phi_next = features(result.state)
        a_next = select_option(w, phi_next, ids, epsilon, rng)
        if config.update_rule is UpdateRule.SARSA:
            q_next = q_value(w, phi_next, a_next)
        else:
            q_next = float(np.max(w.blocks @ phi_next))
        delta = reward + gamma * q_next - q_s
        apply_update(w, z, delta, phi, a, 1, config, lr)
        _check(w, z, bound)
        phi, a = phi_next, a_next
        epsilon = anneal_epsilon(epsilon, config)

    log.n_segments = log.steps
    log.epsilon = epsilon
    return w, log


def evaluate_points(
    env: MiniGame,
    w: QWeights,
    basis: FourierBasis,
    n_points: int,
    options: Sequence[TemporalOption] | None = None,
    dyn: Dynamics | None = None,
) -> tuple[int, int]:
    """Play ``n_points`` greedily without learning; returns (won, lost).

    ``options=None`` plays the flat policy over primitive actions.
    """
    env_cfg = env.config
    no_rng = np.random.default_rng(0)  # never drawn from at epsilon = 0
    won = lost = 0

    def start():
        state = env.reset()
        if dyn is not None:
            dyn.reset(state)
        return state

    state = start()
    if options is None:
        ids = list(range(len(env_cfg.actions)))
        while won + lost < n_points:
            phi = _features(basis, state, env_cfg)
            a = select_option(w, phi, ids, 0.0, no_rng)
            result = env.step(env_cfg.actions[a])
            won += result.reward > 0
            lost += result.reward < 0
            state = start() if result.done else result.state
        return won, lost

    o = select_option(w, _features(basis, state, env_cfg), initiable_ids(options, state, None), 0.0, no_rng)
    while won + lost < n_points:
        action = intra_action(options[o], state, env_cfg, dyn)
        result = env.step(action)
        if dyn is not None:
            dyn.observe(action, result.state)
        won += result.reward > 0
        lost += result.reward < 0
        if result.done:
            state = start()
            o = select_option(w, _features(basis, state, env_cfg), initiable_ids(options, state, None), 0.0, no_rng)
            continue
        state = result.state
        if termination(options[o], state, result.event, env_cfg):
            o = select_option(
                w, _features(basis, state, env_cfg), initiable_ids(options, state, result.event), 0.0, no_rng
            )
    return won, lost


CHECKPOINT_HEADER = "qweights v1"


def serialize_weights(w: QWeights, game: Game) -> str:
    lines = [f"{CHECKPOINT_HEADER} {Game(game).value} {w.option_count} {w.feature_len}"]
    for row in w.blocks:
        lines.append(" ".join("%.17g" % v for v in row))
    return "\n".join(lines) + "\n"


def parse_weights(text: str) -> tuple[QWeights, Game]:
    lines = text.splitlines()
    header = lines[0].split() if lines else []
    if len(header) != 5 or " ".join(header[:2]) != CHECKPOINT_HEADER:
        raise SyntaxConfigError(1, f"expected '{CHECKPOINT_HEADER} <game> <option_count> <feature_len>'")
    game = Game(header[2])
    n, f = int(header[3]), int(header[4])
    rows = [ln for ln in lines[1:] if ln.strip()]
    if len(rows) != n:
        raise SyntaxConfigError(len(lines), f"expected {n} weight rows, got {len(rows)}")
    blocks = np.zeros((n, f))
    for i, row in enumerate(rows):
        values = row.split()
        if len(values) != f:
            raise SyntaxConfigError(i + 2, f"expected {f} weights, got {len(values)}")
        blocks[i] = [float(v) for v in values]
    return QWeights(blocks), game


def save_weights(w: QWeights, game: Game, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(serialize_weights(w, game))


def load_weights(path) -> tuple[QWeights, Game]:
    with open(path, encoding="utf-8") as fh:
        return parse_weights(fh.read())


__all__ = [
    "UpdateRule",
    "LearnerConfig",
    "QWeights",
    "SegmentRecord",
    "SegmentLog",
    "EpisodeLog",
    "q_value",
    "q_gradient",
    "select_option",
    "accumulate_segment",
    "accumulate_literal",
    "segment_delta",
    "apply_update",
    "anneal_epsilon",
    "run_episode_sorso",
    "run_episode_sarsa",
    "evaluate_points",
    "serialize_weights",
    "parse_weights",
    "save_weights",
    "load_weights",
]
