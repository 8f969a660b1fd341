"""Instruction-derived options for hierarchical reinforcement learning on
small deterministic ball games."""

from .env import Action, EnvConfig, Event, Game, GameState, MiniGame, Phase, normalize_state
from .features import FourierBasis, build_basis, featurize
from .learn import LearnerConfig, QWeights, run_episode_sarsa, run_episode_sorso
from .options import (
    InstructionManifest,
    TemporalOption,
    compile_options,
    default_manifest,
    parse_manifest,
    predict_intercept,
    serialize_manifest,
)

__version__ = "0.1.0"
