"""Shared test fixtures: tiny hand-built MDPs and hypothesis strategies."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from hypothesis import strategies as st

from instrhrl.env import Game
from instrhrl.options import InstructionManifest


@dataclass(frozen=True)
class ChainConfig:
    actions: tuple[int, ...] = (0, 1)  # 0 = advance, 1 = stay


@dataclass(frozen=True)
class ChainResult:
    state: int
    reward: float
    done: bool


class TwoStateChain:
    """States 0 -> 1 -> terminal.

    ``advance`` pays ``rewards[s]`` and moves on; ``stay`` pays 0 and keeps
    the state. Deterministic, episodic.
    """

    def __init__(self, rewards=(1.0, 2.0)) -> None:
        self.config = ChainConfig()
        self.rewards = rewards
        self.state = 0

    def reset(self) -> int:
        self.state = 0
        return self.state

    def step(self, action: int) -> ChainResult:
        if action == 1:
            return ChainResult(self.state, 0.0, False)
        reward = self.rewards[self.state]
        if self.state == 1:
            return ChainResult(1, reward, True)
        self.state = 1
        return ChainResult(1, reward, False)


def one_hot(state: int) -> np.ndarray:
    phi = np.zeros(2)
    phi[state] = 1.0
    return phi


def chain_q_star(rewards, gamma: float, sweeps: int = 10_000) -> np.ndarray:
    """Value iteration; returns Q[action, state]."""
    q = np.zeros((2, 2))
    for _ in range(sweeps):
        v = q.max(axis=0)
        new = np.array(
            [
                [rewards[0] + gamma * v[1], rewards[1]],  # advance; from state 1 the episode ends
                [gamma * v[0], gamma * v[1]],  # stay
            ]
        )
        if np.array_equal(new, q):
            break
        q = new
    return q


@st.composite
def manifests(draw):
    game = draw(st.sampled_from(list(Game)))
    units = 8.0 if game is Game.MINIPONG else 15.0
    grid_y = tuple(draw(st.lists(st.floats(-units, units), min_size=1, max_size=9)))
    if game is Game.MINITENNIS:
        grid_x = tuple(draw(st.lists(st.floats(0.0, 0.5), min_size=1, max_size=6)))
        target = draw(st.none() | st.tuples(st.floats(0.0, 0.5), st.floats(0.0, 1.0)))
    else:
        grid_x = ()
        target = draw(st.none() | st.tuples(st.just(0.0), st.floats(0.0, 1.0)))
    return InstructionManifest(game, grid_x, grid_y, target, draw(st.booleans()))
