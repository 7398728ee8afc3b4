"""Deterministic grid mazes with four primitive moves."""

from __future__ import annotations

import random
from collections import deque
from collections.abc import Iterator, Sequence
from dataclasses import dataclass
from typing import Any, NamedTuple

RIGHT, DOWN, LEFT, UP = 0, 1, 2, 3
ACTION_NAMES = "rdlu"
MOVES = ((1, 0), (0, 1), (-1, 0), (0, -1))

STEP_REWARD = -1.0
GOAL_REWARD = 10.0


class StepResult(NamedTuple):
    next_state: Any
    reward: float
    done: bool


Cell = tuple[int, int]


def _reachable(grid: Sequence[Sequence[bool]], start: Cell) -> dict[Cell, int]:
    height, width = len(grid), len(grid[0])
    dist = {start: 0}
    queue = deque([start])
    while queue:
        x, y = queue.popleft()
        for dx, dy in MOVES:
            nx, ny = x + dx, y + dy
            if 0 <= nx < width and 0 <= ny < height and grid[ny][nx] and (nx, ny) not in dist:
                dist[(nx, ny)] = dist[(x, y)] + 1
                queue.append((nx, ny))
    return dist


@dataclass(frozen=True)
class Maze:
    grid: tuple[tuple[bool, ...], ...]
    start: Cell
    goal: Cell
    name: str = ""

    def __post_init__(self) -> None:
        grid = tuple(tuple(bool(c) for c in row) for row in self.grid)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "start", tuple(self.start))
        object.__setattr__(self, "goal", tuple(self.goal))
        if not grid or not grid[0] or any(len(r) != len(grid[0]) for r in grid):
            raise ValueError("maze grid must be a non-empty rectangle")
        if self.start == self.goal:
            raise ValueError("start and goal must differ")
        for label, (x, y) in (("start", self.start), ("goal", self.goal)):
            if not (0 <= x < self.width and 0 <= y < self.height and grid[y][x]):
                raise ValueError(f"{label} {(x, y)} is not a passable cell")
        if self.goal not in _reachable(grid, self.start):
            raise ValueError("goal unreachable from start")

    @property
    def width(self) -> int:
        return len(self.grid[0])

    @property
    def height(self) -> int:
        return len(self.grid)

    def passable(self, cell: Cell) -> bool:
        x, y = cell
        return 0 <= x < self.width and 0 <= y < self.height and self.grid[y][x]

    def shortest_path_length(self) -> int:
        return _reachable(self.grid, self.start)[self.goal]


def maze_step(maze: Maze, cell: Cell, action: int) -> StepResult:
    """One move; walls and the map edge leave the agent where it is."""
    if action not in (RIGHT, DOWN, LEFT, UP):
        raise ValueError(f"unknown maze action {action!r}")
    if not maze.passable(cell):
        raise ValueError(f"cell {cell} is not passable")
    dx, dy = MOVES[action]
    nxt = (cell[0] + dx, cell[1] + dy)
    if not maze.passable(nxt):
        nxt = cell
    if nxt == maze.goal:
        return StepResult(nxt, GOAL_REWARD, True)
    return StepResult(nxt, STEP_REWARD, False)


class MazeEnv:
    """Episodic wrapper with integer states ``y * width + x`` and a step cap."""

    n_actions = 4

    def __init__(self, maze: Maze, step_cap: int | None = None):
        self.maze = maze
        self.step_cap = step_cap if step_cap is not None else 10 * (maze.width + maze.height)
        w, h = maze.width, maze.height
        self._next = []
        for y in range(h):
            for x in range(w):
                row = []
                for a in range(4):
                    nx, ny = x + MOVES[a][0], y + MOVES[a][1]
                    ok = maze.passable((x, y)) and maze.passable((nx, ny))
                    row.append(ny * w + nx if ok else y * w + x)
                self._next.append(tuple(row))
        self._goal = maze.goal[1] * w + maze.goal[0]
        self.state = self.start_state
        self.steps = 0

    @property
    def start_state(self) -> int:
        return self.maze.start[1] * self.maze.width + self.maze.start[0]

    def cell(self, state: int) -> Cell:
        return state % self.maze.width, state // self.maze.width

    def reset(self) -> int:
        self.state = self.start_state
        self.steps = 0
        return self.state

    def step(self, action: int) -> StepResult:
        s = self._next[self.state][action]
        self.state = s
        self.steps += 1
        if s == self._goal:
            return StepResult(s, GOAL_REWARD, True)
        return StepResult(s, STEP_REWARD, self.steps >= self.step_cap)

    def reached_goal(self) -> bool:
        return self.state == self._goal


def _components(grid: Sequence[Sequence[bool]]) -> list[list[Cell]]:
    seen: set[Cell] = set()
    comps = []
    for y, row in enumerate(grid):
        for x, ok in enumerate(row):
            if ok and (x, y) not in seen:
                comp = list(_reachable(grid, (x, y)))
                seen.update(comp)
                comps.append(comp)
    return comps


def maze_task_generator(maps: Sequence[Sequence[Sequence[bool]]], seed: int) -> Iterator[Maze]:
    """Endless stream of mazes with uniformly random start and goal cells.

    Identical or disconnected start/goal pairs are rejected and redrawn.
    """
    if not maps:
        raise ValueError("need at least one map")
    prepared = []
    for k, grid in enumerate(maps):
        comps = _components(grid)
        if not any(len(c) >= 2 for c in comps):
            raise ValueError(f"map {k} has fewer than 2 connected passable cells")
        label = {cell: i for i, comp in enumerate(comps) for cell in comp}
        cells = sorted(label, key=lambda c: (c[1], c[0]))
        prepared.append((tuple(tuple(r) for r in grid), cells, label))
    rng = random.Random(seed)
    while True:
        grid, cells, label = prepared[rng.randrange(len(prepared))]
        start = cells[rng.randrange(len(cells))]
        goal = cells[rng.randrange(len(cells))]
        if start == goal or label[start] != label[goal]:
            continue
        yield Maze(grid=grid, start=start, goal=goal)
