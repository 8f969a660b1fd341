"""Learning curves, CSV I/O and hierarchical-vs-flat speedup reports."""

from __future__ import annotations

import io
import math
import statistics
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

from ..errors import PreconditionError, SyntaxConfigError

CSV_HEADER = "episode,steps,return,ma10"
MA_WINDOW = 10


def moving_average(returns: Sequence[float], window: int = MA_WINDOW) -> list[float]:
    """Trailing mean; element i averages ``returns[max(0, i-window+1) .. i]``."""
    if window < 1:
        raise PreconditionError(f"window must be >= 1, got {window}")
    values = [float(r) for r in returns]
    out = []
    for i in range(len(values)):
        chunk = values[max(0, i - window + 1) : i + 1]
        # fsum, not a running total: no drift over long curves
        out.append(math.fsum(chunk) / len(chunk))
    return out


@dataclass(frozen=True)
class CurveRow:
    episode: int
    steps: int  # cumulative training env steps
    value: float  # episode return, or greedy win rate
    ma10: float


@dataclass
class LearningCurve:
    rows: list[CurveRow] = field(default_factory=list)

    @classmethod
    def from_values(cls, episodes: Sequence[int], steps: Sequence[int], values: Sequence[float]) -> "LearningCurve":
        if not len(episodes) == len(steps) == len(values):
            raise PreconditionError("episodes, steps and values must have equal length")
        if any(b <= a for a, b in zip(episodes, episodes[1:])):
            raise PreconditionError("episodes must be strictly increasing")
        ma = moving_average(list(values))
        return cls([CurveRow(int(e), int(s), float(v), m) for e, s, v, m in zip(episodes, steps, values, ma)])

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def total_steps(self) -> int:
        return self.rows[-1].steps if self.rows else 0

    def steps_to_threshold(self, threshold: float) -> int | None:
        """Cumulative steps at the first row whose ma10 reaches ``threshold``."""
        for row in self.rows:
            if row.ma10 >= threshold:
                return row.steps
        return None


def _fmt(x: float) -> str:
    # shortest repr that round-trips; never more than 17 significant digits
    return repr(float(x))


def curve_to_csv(curve: LearningCurve) -> str:
    buf = io.StringIO()
    buf.write(CSV_HEADER + "\n")
    for row in curve.rows:
        buf.write(f"{row.episode},{row.steps},{_fmt(row.value)},{_fmt(row.ma10)}\n")
    return buf.getvalue()


def curve_from_csv(text: str) -> LearningCurve:
    lines = text.splitlines()
    if not lines or lines[0].strip() != CSV_HEADER:
        raise SyntaxConfigError(1, f"expected header {CSV_HEADER!r}")
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 4:
            raise SyntaxConfigError(lineno, f"expected 4 fields, got {len(parts)}")
        try:
            rows.append(CurveRow(int(parts[0]), int(parts[1]), float(parts[2]), float(parts[3])))
        except ValueError:
            raise SyntaxConfigError(lineno, f"bad row {line!r}") from None
    return LearningCurve(rows)


def write_curve(curve: LearningCurve, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(curve_to_csv(curve))


def read_curve(path) -> LearningCurve:
    with open(path, encoding="utf-8") as fh:
        return curve_from_csv(fh.read())


def read_curves(directory, kind: str = "greedy") -> dict[int, LearningCurve]:
    """Load ``<kind>_seed<s>.csv`` files from an experiment directory."""
    curves = {}
    for path in sorted(Path(directory).glob(f"{kind}_seed*.csv")):
        seed = int(path.stem[len(kind) + len("_seed"):])
        curves[seed] = read_curve(path)
    return dict(sorted(curves.items()))


def plot_data(curve: LearningCurve) -> str:
    """Two whitespace-separated columns, cumulative steps and ma10."""
    return "".join(f"{row.steps} {_fmt(row.ma10)}\n" for row in curve.rows)


@dataclass
class CompareReport:
    threshold: float
    hier_steps: dict[int, int | None]
    flat_steps: dict[int, int | None]
    hier_final: dict[int, float]
    flat_final: dict[int, float]
    flat_budget: int
    hier_median: float | None
    flat_median: float | None
    ratio: float | None  # flat median / hierarchical median, when both exist
    ratio_lower_bound: float | None  # censored case: flat never reached threshold
    notes: list[str] = field(default_factory=list)

    @property
    def speedup(self) -> float | None:
        """The ratio, or its lower bound when the flat runs are censored."""
        return self.ratio if self.ratio is not None else self.ratio_lower_bound

    def to_text(self) -> str:
        out = [f"threshold (ma10) = {_fmt(self.threshold)}", ""]
        out.append(f"{'mode':<6} {'seed':>6} {'steps_to_threshold':>20} {'final_ma10':>12}")
        for mode, steps, final in (
            ("hier", self.hier_steps, self.hier_final),
            ("flat", self.flat_steps, self.flat_final),
        ):
            for seed, s in steps.items():
                shown = "not reached" if s is None else str(s)
                out.append(f"{mode:<6} {seed:>6} {shown:>20} {final[seed]:>12.4f}")
        out.append("")
        out.append(f"hier median steps: {_show(self.hier_median)}")
        out.append(f"flat median steps: {_show(self.flat_median)}")
        if self.ratio is not None:
            out.append(f"speedup (flat/hier): {self.ratio:.4g}")
        elif self.ratio_lower_bound is not None:
            out.append(f"speedup (flat/hier): >= {self.ratio_lower_bound:.4g} (flat budget {self.flat_budget} / hier median)")
        else:
            out.append("speedup (flat/hier): undefined")
        out.extend(f"note: {n}" for n in self.notes)
        return "\n".join(out) + "\n"

    def to_csv(self) -> str:
        out = ["mode,seed,steps_to_threshold,final_ma10"]
        for mode, steps, final in (
            ("hier", self.hier_steps, self.hier_final),
            ("flat", self.flat_steps, self.flat_final),
        ):
            for seed, s in steps.items():
                out.append(f"{mode},{seed},{'not reached' if s is None else s},{_fmt(final[seed])}")
        out.append(f"summary,hier_median,{_show(self.hier_median)},")
        out.append(f"summary,flat_median,{_show(self.flat_median)},")
        if self.ratio is not None:
            out.append(f"summary,ratio,{_fmt(self.ratio)},")
        elif self.ratio_lower_bound is not None:
            out.append(f"summary,ratio_lower_bound,{_fmt(self.ratio_lower_bound)},")
        else:
            out.append("summary,ratio,FAILED: hierarchical never reached threshold,")
        return "\n".join(out) + "\n"


def _show(x: float | None) -> str:
    return "n/a" if x is None else _fmt(x)


def _median(values: list[int | None]) -> float | None:
    reached = [v for v in values if v is not None]
    return float(statistics.median(reached)) if reached else None


def compare_report(
    hier_curves: Mapping[int, LearningCurve],
    flat_curves: Mapping[int, LearningCurve],
    threshold: float,
) -> CompareReport:
    """Steps-to-threshold per seed and the flat/hierarchical median ratio.

    Seeds that never reach the threshold are excluded from medians. If no
    flat seed reaches it, the ratio is censored and reported as the lower
    bound ``flat budget / hierarchical median``, the budget being the largest
    number of steps any flat run was given.
    """
    if not hier_curves or not flat_curves:
        raise PreconditionError("both curve sets must be non-empty")
    hier_steps = {s: c.steps_to_threshold(threshold) for s, c in hier_curves.items()}
    flat_steps = {s: c.steps_to_threshold(threshold) for s, c in flat_curves.items()}
    hier_median = _median(list(hier_steps.values()))
    flat_median = _median(list(flat_steps.values()))
    flat_budget = max(c.total_steps for c in flat_curves.values())
    notes = []
    for mode, steps in (("hier", hier_steps), ("flat", flat_steps)):
        missing = sum(v is None for v in steps.values())
        if missing:
            notes.append(f"{missing} of {len(steps)} {mode} seeds not reached; excluded from the median")
    ratio = lower = None
    if hier_median is None:
        notes.append("FAILED: no hierarchical seed reached the threshold")
    elif flat_median is None:
        lower = flat_budget / hier_median
    else:
        ratio = flat_median / hier_median
    return CompareReport(
        threshold=threshold,
        hier_steps=hier_steps,
        flat_steps=flat_steps,
        hier_final={s: (c.rows[-1].ma10 if c.rows else 0.0) for s, c in hier_curves.items()},
        flat_final={s: (c.rows[-1].ma10 if c.rows else 0.0) for s, c in flat_curves.items()},
        flat_budget=flat_budget,
        hier_median=hier_median,
        flat_median=flat_median,
        ratio=ratio,
        ratio_lower_bound=lower,
        notes=notes,
    )


def write_report(report: CompareReport, directory) -> tuple[Path, Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    text_path, csv_path = directory / "report.txt", directory / "report.csv"
    with open(text_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(report.to_text())
    with open(csv_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(report.to_csv())
    return text_path, csv_path
