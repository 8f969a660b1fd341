"""Straight-line ball flight with reflecting side walls."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import PreconditionError


def reflect(raw: float, lo: float = 0.0, hi: float = 1.0) -> tuple[float, bool]:
    """Fold an unbounded coordinate into ``[lo, hi]`` by mirror reflection.

    Returns the folded value and whether the velocity sign is flipped
    (odd number of wall bounces).
    """
    span = hi - lo
    if lo <= raw <= hi:
        return raw, False
    u = math.fmod(raw - lo, 2.0 * span)
    if u < 0.0:
        u += 2.0 * span
    flipped = math.floor((raw - lo) / span) % 2 == 1
    if u <= span:
        return lo + u, flipped
    return lo + 2.0 * span - u, flipped


def fold(raw: float, lo: float = 0.0, hi: float = 1.0) -> float:
    return reflect(raw, lo, hi)[0]


@dataclass(frozen=True)
class InterceptPrediction:
    plane_coord: float
    intercept_lateral: float
    steps_to_intercept: int
    time_to_intercept: float


def predict_intercept(
    ball_pos: tuple[float, float],
    ball_vel: tuple[float, float],
    plane_coord: float,
    lateral_bounds: tuple[float, float] = (0.0, 1.0),
) -> InterceptPrediction:
    """Where the ball centre crosses the line ``x = plane_coord``.

    Flight is along x; the lateral coordinate bounces between the walls at
    ``lateral_bounds``. ``steps_to_intercept`` is the index of the simulator
    step during which the crossing happens (``ceil`` of the continuous time).
    """
    x, y = ball_pos
    vx, vy = ball_vel
    distance = plane_coord - x
    if vx == 0.0 or distance * vx < 0.0:
        raise PreconditionError(
            f"ball at x={x} with vx={vx} is not moving toward plane x={plane_coord}"
        )
    t = distance / vx
    lo, hi = lateral_bounds
    lateral = fold(y + vy * t, lo, hi)
    return InterceptPrediction(plane_coord, lateral, max(0, math.ceil(t)), t)
