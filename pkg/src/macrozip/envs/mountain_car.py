"""Parameterised continuous mountain car and a scripted energy-pumping controller.

Dynamics follow the classic force model with a continuous acceleration::

    v' = clip(v + power * a - 0.0025 * cos(3x), -v_max, v_max)
    x' = clip(x + v', -1.2, 0.6)   # hitting the left wall zeroes v'
"""

from __future__ import annotations

import math
import random
from collections.abc import Iterator
from dataclasses import dataclass, replace

from macrozip.envs.maze import StepResult

X_MIN, X_MAX = -1.2, 0.6
GRAVITY = 0.0025
STEP_REWARD = -1.0
GOAL_REWARD = 100.0


@dataclass(frozen=True)
class MountainCarParams:
    goal_x: float = 0.45
    v_max: float = 0.07
    a_min: float = -1.0
    a_max: float = 1.0
    power: float = 0.0015
    start_x: float = -0.5

    def __post_init__(self) -> None:
        if not self.a_min < 0 < self.a_max:
            raise ValueError("need a_min < 0 < a_max")
        if not self.v_max > 0:
            raise ValueError("v_max must be positive")
        if not self.power > 0:
            raise ValueError("power must be positive")
        if not X_MIN < self.goal_x <= X_MAX:
            raise ValueError("goal_x outside the track")
        if not X_MIN <= self.start_x < self.goal_x:
            raise ValueError("start_x must lie on the track left of the goal")


def mountaincar_step(state: tuple[float, float], action: float, params: MountainCarParams) -> StepResult:
    x, v = state
    if not (math.isfinite(x) and math.isfinite(v) and math.isfinite(action)):
        raise ValueError("non-finite state or action")
    a = min(max(action, params.a_min), params.a_max)
    v = v + params.power * a - GRAVITY * math.cos(3 * x)
    v = min(max(v, -params.v_max), params.v_max)
    x = x + v
    if x < X_MIN:
        x, v = X_MIN, 0.0
    elif x > X_MAX:
        x = X_MAX
    if x >= params.goal_x:
        return StepResult((x, v), GOAL_REWARD, True)
    return StepResult((x, v), STEP_REWARD, False)


def observation(state: tuple[float, float]) -> tuple[float, float, float, float]:
    """Position and velocity on the hill curve ``y = sin(3x) / 3``."""
    x, v = state
    slope = math.cos(3 * x)
    return (x, math.sin(3 * x) / 3, v, slope * v)


class MountainCarEnv:
    def __init__(self, params: MountainCarParams, step_cap: int = 1000):
        self.params = params
        self.step_cap = step_cap
        self.state = (params.start_x, 0.0)
        self.steps = 0
        self._done_at_goal = False

    def reset(self) -> tuple[float, float]:
        self.state = (self.params.start_x, 0.0)
        self.steps = 0
        self._done_at_goal = False
        return self.state

    def step(self, action) -> StepResult:
        if isinstance(action, tuple):
            action = action[0]
        res = mountaincar_step(self.state, float(action), self.params)
        self.state = res.next_state
        self.steps += 1
        if res.done:
            self._done_at_goal = True
            return res
        return StepResult(res.next_state, res.reward, self.steps >= self.step_cap)

    def reached_goal(self) -> bool:
        return self._done_at_goal


def mountaincar_task_generator(
    base: MountainCarParams,
    seed: int,
    goal_range: tuple[float, float] = (0.9, 1.1),
    v_max_range: tuple[float, float] = (0.85, 1.15),
    power_range: tuple[float, float] = (0.85, 1.15),
) -> Iterator[MountainCarParams]:
    """Task variations scaling goal position, speed limit and push strength."""
    for lo, hi in (goal_range, v_max_range, power_range):
        if not 0 < lo <= hi:
            raise ValueError("multiplicative ranges must satisfy 0 < lo <= hi")
    if base.goal_x * goal_range[1] > X_MAX or base.goal_x * goal_range[0] <= base.start_x:
        raise ValueError("goal range leaves the track")
    rng = random.Random(seed)
    while True:
        yield replace(
            base,
            goal_x=base.goal_x * rng.uniform(*goal_range),
            v_max=base.v_max * rng.uniform(*v_max_range),
            power=base.power * rng.uniform(*power_range),
        )


def scripted_mc_controller(state: tuple[float, float], params: MountainCarParams) -> float:
    """Bang-bang push along the current velocity (full throttle from rest)."""
    v = state[1]
    if v > 0 or v == 0:
        return params.a_max
    return max(params.a_min, -params.a_max)
