"""Experiment orchestration: configs, seeded runs, curves, reports and the CLI."""

from .config import ExperimentConfig, Mode, dump_config, load_config, parse_config
from .experiment import FAILED_MARKER, SeedResult, run_experiment
from .report import CompareReport, LearningCurve, compare_report, moving_average

__all__ = [
    "ExperimentConfig",
    "Mode",
    "dump_config",
    "load_config",
    "parse_config",
    "FAILED_MARKER",
    "SeedResult",
    "run_experiment",
    "CompareReport",
    "LearningCurve",
    "compare_report",
    "moving_average",
]
