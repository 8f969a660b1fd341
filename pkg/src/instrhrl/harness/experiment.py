"""Seeded training runs with periodic greedy evaluation.

Per seed ``s`` an experiment directory receives ``curve_seed<s>.csv``
(training returns), ``greedy_seed<s>.csv`` (greedy point-win rate) and
``checkpoint_seed<s>.txt``. Nothing time- or host-dependent is written, so a
re-run with the same config is byte-identical.
"""

from __future__ import annotations

import dataclasses
import logging
import traceback
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..env import EnvConfig, MiniGame
from ..errors import ConfigError
from ..features import FourierBasis, build_basis
from ..learn import QWeights, evaluate_points, run_episode_sarsa, run_episode_sorso, save_weights
from ..options import TemporalOption, compile_options, default_manifest, load_manifest
from ..skills import LearnedDynamics, load_model
from .config import ExperimentConfig, Mode, dump_config
from .report import LearningCurve, write_curve

log = logging.getLogger(__name__)

STATE_DIM = 8
FAILED_MARKER = "FAILED"


def _stream(seed: int, *tag: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([seed, *tag])


def _eval_seed(seed: int, episode: int) -> int:
    """Fresh, reproducible environment seed for one greedy evaluation."""
    return int(_stream(seed, 2, episode).generate_state(1)[0])


@dataclass
class SeedResult:
    seed: int
    train: LearningCurve
    greedy: LearningCurve
    weights: QWeights
    curve_path: Path
    greedy_path: Path
    checkpoint_path: Path

    @property
    def final_win_rate(self) -> float:
        return self.greedy.rows[-1].ma10 if self.greedy.rows else 0.0


def build_options(config: ExperimentConfig) -> list[TemporalOption] | None:
    """Compiled options in hierarchical mode, None in flat mode."""
    if config.mode is Mode.FLAT:
        return None
    if config.manifest_path is None:
        manifest = default_manifest(config.game)
    else:
        manifest = load_manifest(config.manifest_path)
    return compile_options(manifest, config.env)


def build_dynamics(config: ExperimentConfig):
    if config.dynamics_path is None or config.mode is Mode.FLAT:
        return None
    model = load_model(config.dynamics_path)
    if model.game is not config.game:
        raise ConfigError("dynamics", f"model was trained on {model.game.value}, config is {config.game.value}")
    return LearnedDynamics(model)


def build_basis_for(config: ExperimentConfig) -> FourierBasis:
    return build_basis(config.fourier_order, STATE_DIM, config.max_features)


def greedy_win_rate(
    config: ExperimentConfig,
    w: QWeights,
    basis: FourierBasis,
    options,
    dyn,
    env_seed: int,
    n_points: int | None = None,
) -> tuple[int, int]:
    env = MiniGame(dataclasses.replace(config.env, seed=env_seed), env_seed)
    return evaluate_points(env, w, basis, n_points or config.eval_points, options, dyn)


def run_seed(config: ExperimentConfig, seed: int, out_dir: Path) -> SeedResult:
    env_cfg: EnvConfig = dataclasses.replace(config.env, seed=seed)
    env = MiniGame(env_cfg, seed)
    rng = np.random.default_rng(_stream(seed, 1))
    basis = build_basis_for(config)
    options = build_options(config)
    dyn = build_dynamics(config)
    n_blocks = len(options) if options is not None else len(env_cfg.actions)
    w = QWeights.zeros(n_blocks, basis.n_features)

    epsilon = config.learner.epsilon_start
    steps = 0
    episodes, cum_steps, returns = [], [], []
    eval_eps, eval_steps, eval_rates = [], [], []
    for episode in range(1, config.episodes + 1):
        if options is None:
            w, ep = run_episode_sarsa(env, basis, w, config.learner, rng, epsilon)
        else:
            w, ep = run_episode_sorso(env, options, basis, w, config.learner, rng, epsilon, dyn)
        epsilon = ep.epsilon
        steps += ep.steps
        episodes.append(episode)
        cum_steps.append(steps)
        returns.append(ep.total_return)

        out_of_budget = config.max_steps > 0 and steps >= config.max_steps
        last = episode == config.episodes or out_of_budget
        if episode % config.eval_every == 0 or last:
            won, lost = greedy_win_rate(config, w, basis, options, dyn, _eval_seed(seed, episode))
            eval_eps.append(episode)
            eval_steps.append(steps)
            eval_rates.append(won / (won + lost))
            log.debug("seed %d episode %d steps %d greedy %.3f", seed, episode, steps, eval_rates[-1])
        if out_of_budget:
            break

    train = LearningCurve.from_values(episodes, cum_steps, returns)
    greedy = LearningCurve.from_values(eval_eps, eval_steps, eval_rates)
    curve_path = out_dir / f"curve_seed{seed}.csv"
    greedy_path = out_dir / f"greedy_seed{seed}.csv"
    checkpoint_path = out_dir / f"checkpoint_seed{seed}.txt"
    write_curve(train, curve_path)
    write_curve(greedy, greedy_path)
    save_weights(w, config.game, checkpoint_path)
    return SeedResult(seed, train, greedy, w, curve_path, greedy_path, checkpoint_path)


def _absolute(path: str | None) -> str | None:
    return None if path is None else str(Path(path).resolve())


def run_experiment(config: ExperimentConfig, output_dir=None) -> dict[int, SeedResult]:
    """Train every seed in turn; returns results keyed by seed.

    On failure a ``FAILED`` marker holding the traceback is left in the
    output directory and the error propagates.
    """
    out_dir = Path(output_dir if output_dir is not None else config.output_dir).resolve()
    out_dir.mkdir(parents=True, exist_ok=True)
    # absolute paths so the resolved echo loads back identically from anywhere
    config = dataclasses.replace(
        config,
        output_dir=str(out_dir),
        manifest_path=_absolute(config.manifest_path),
        dynamics_path=_absolute(config.dynamics_path),
    )
    marker = out_dir / FAILED_MARKER
    if marker.exists():
        marker.unlink()
    with open(out_dir / "config.resolved", "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dump_config(config))
    results = {}
    try:
        for seed in config.seeds:
            results[seed] = run_seed(config, seed, out_dir)
    except Exception:
        with open(marker, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(traceback.format_exc())
        raise
    return results


__all__ = [
    "SeedResult",
    "run_experiment",
    "run_seed",
    "build_options",
    "build_dynamics",
    "build_basis_for",
    "greedy_win_rate",
    "FAILED_MARKER",
]

