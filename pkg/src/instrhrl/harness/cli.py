"""Command-line entry point: ``instrhrl <subcommand> ...``.

Exit codes: 0 success, 1 usage or config error, 2 runtime or numerical error.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

from ..errors import ConfigError, HrlError, UsageError
from ..learn import load_weights
from ..skills import collect_samples, save_model, train_dynamics
from .config import Mode, load_config
from .experiment import build_basis_for, build_dynamics, build_options, greedy_win_rate, run_experiment
from .report import compare_report, plot_data, read_curves, write_report

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit 2, which means runtime failure here
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="instrhrl", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("pretrain", help="fit the paddle action-effect model")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="model file to write")

    p = sub.add_parser("train", help="run a seeded training experiment")
    p.add_argument("--config", required=True)
    p.add_argument("--mode", choices=[m.value for m in Mode])
    p.add_argument("--out", help="output directory (overrides output_dir)")

    p = sub.add_parser("eval", help="greedy point-win rate of a checkpoint")
    p.add_argument("--config", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--points", type=int, required=True)
    p.add_argument("--seed", type=int, default=0, help="evaluation environment seed")

    p = sub.add_parser("compare", help="hierarchical vs flat steps-to-threshold report")
    p.add_argument("--hier", required=True)
    p.add_argument("--flat", required=True)
    p.add_argument("--threshold", type=float, required=True)
    p.add_argument("--curve", choices=["greedy", "curve"], default="greedy", help="greedy win rate or training return")
    p.add_argument("--out", help="directory for report.txt and report.csv (default: --hier)")

    p = sub.add_parser("plot-data", help="gnuplot-ready two-column data (steps, ma10)")
    p.add_argument("--in", dest="in_dir", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--curve", choices=["greedy", "curve"], default="greedy")
    return parser


def cmd_pretrain(args) -> int:
    config = load_config(args.config)
    dataset = collect_samples(config.env, config.pretrain_samples, config.seeds[0])
    model = train_dynamics(dataset, config.ridge)
    save_model(model, args.out)
    for action, mae in model.train_mae.items():
        print(f"{action.name.lower():>6} train MAE {mae:.3e}")
    print(f"{len(dataset)} samples from {dataset.steps_used} steps -> {args.out}")
    return EXIT_OK


def cmd_train(args) -> int:
    config = load_config(args.config)
    if args.mode:
        config = dataclasses.replace(config, mode=Mode(args.mode))
    results = run_experiment(config, args.out)
    for seed, r in results.items():
        last = r.train.rows[-1]
        print(
            f"seed {seed}: {last.episode} episodes, {last.steps} steps, "
            f"final return ma10 {last.ma10:.3f}, greedy win rate ma10 {r.final_win_rate:.3f}"
        )
    return EXIT_OK


def cmd_eval(args) -> int:
    if args.points < 1:
        raise UsageError("--points must be >= 1")
    config = load_config(args.config)
    w, game = load_weights(args.checkpoint)
    if game is not config.game:
        raise ConfigError("checkpoint", f"checkpoint is for {game.value}, config is {config.game.value}")
    basis = build_basis_for(config)
    options = build_options(config)
    expected = len(options) if options is not None else len(config.env.actions)
    if w.blocks.shape != (expected, basis.n_features):
        raise ConfigError(
            "checkpoint",
            f"weights have shape {w.blocks.shape}, config ({config.mode.value}) needs {(expected, basis.n_features)}",
        )
    won, lost = greedy_win_rate(config, w, basis, options, build_dynamics(config), args.seed, args.points)
    print(f"won {won} lost {lost} win_rate {won / (won + lost):.4f}")
    return EXIT_OK


def cmd_compare(args) -> int:
    hier = read_curves(args.hier, args.curve)
    flat = read_curves(args.flat, args.curve)
    if not hier or not flat:
        raise UsageError(f"no {args.curve}_seed*.csv files in {args.hier if not hier else args.flat}")
    report = compare_report(hier, flat, args.threshold)
    write_report(report, args.out or args.hier)
    print(report.to_text(), end="")
    return EXIT_OK


def cmd_plot_data(args) -> int:
    curves = read_curves(args.in_dir, args.curve)
    if not curves:
        raise UsageError(f"no {args.curve}_seed*.csv files in {args.in_dir}")
    # gnuplot data blocks: two blank lines between seeds, select with `index`
    blocks = [f"# seed {seed}\n# steps ma10\n" + plot_data(c) for seed, c in curves.items()]
    Path(args.out).write_text("\n\n".join(blocks), encoding="utf-8")
    return EXIT_OK


COMMANDS = {
    "pretrain": cmd_pretrain,
    "train": cmd_train,
    "eval": cmd_eval,
    "compare": cmd_compare,
    "plot-data": cmd_plot_data,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, UsageError, FileNotFoundError, IsADirectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (HrlError, ArithmeticError, OSError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
