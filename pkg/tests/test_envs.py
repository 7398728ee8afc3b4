from __future__ import annotations

import itertools
import math

import pytest
from hypothesis import given, strategies as st

from macrozip.envs.maze import DOWN, GOAL_REWARD, LEFT, RIGHT, UP, Maze, MazeEnv, maze_step, maze_task_generator
from macrozip.envs.mountain_car import (
    X_MAX,
    X_MIN,
    MountainCarEnv,
    MountainCarParams,
    mountaincar_step,
    mountaincar_task_generator,
    observation,
    scripted_mc_controller,
)
from macrozip.envs.movingai import MapParseError, dump_map, generate_maze_map, load_map

OPEN3 = "type octile\nheight 3\nwidth 3\nmap\n...\n...\n...\n"


def test_load_open_map():
    grid = load_map(OPEN3)
    assert grid == [[True] * 3] * 3


def test_blocked_glyphs():
    grid = load_map("type octile\nheight 1\nwidth 4\nmap\n.@TG\n")
    assert grid == [[True, False, False, True]]


@pytest.mark.parametrize(
    "text, line",
    [
        ("type octile\nheight 2\nwidth 3\nmap\n...\n", 6),
        ("type octile\nheight 1\nwidth 3\nmap\n..\n", 5),
        ("type octile\nheight 1\nwidth 3\nmap\n.x.\n", 5),
        ("type octile\nheight one\nwidth 3\nmap\n...\n", 2),
        ("type octile\nheight 1\n", 3),
    ],
)
def test_parse_errors_carry_line_numbers(text, line):
    with pytest.raises(MapParseError) as info:
        load_map(text)
    assert info.value.lineno == line


@given(st.integers(5, 40), st.integers(5, 40), st.integers(0, 10_000), st.floats(0, 1))
def test_generated_maps_round_trip_and_are_connected(w, h, seed, loops):
    grid = generate_maze_map(w, h, seed, loop_fraction=loops)
    assert len(grid) == h and len(grid[0]) == w
    assert load_map(dump_map(grid)) == grid
    assert generate_maze_map(w, h, seed, loop_fraction=loops) == grid
    cells = [(x, y) for y in range(h) for x in range(w) if grid[y][x]]
    assert len(cells) >= 2
    seen = {cells[0]}
    stack = [cells[0]]
    while stack:
        x, y = stack.pop()
        for nx, ny in ((x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)):
            if 0 <= nx < w and 0 <= ny < h and grid[ny][nx] and (nx, ny) not in seen:
                seen.add((nx, ny))
                stack.append((nx, ny))
    assert len(seen) == len(cells)


def small_maze():
    grid = load_map("type octile\nheight 3\nwidth 3\nmap\n..@\n...\n...\n")
    return Maze(grid, start=(0, 0), goal=(2, 2))


def test_maze_step_examples():
    m = small_maze()
    assert maze_step(m, (0, 0), RIGHT) == ((1, 0), -1.0, False)
    assert maze_step(m, (1, 0), RIGHT) == ((1, 0), -1.0, False)
    assert maze_step(m, (0, 0), UP) == ((0, 0), -1.0, False)
    assert maze_step(m, (2, 1), DOWN) == ((2, 2), GOAL_REWARD, True)


def test_maze_validation():
    grid = load_map("type octile\nheight 1\nwidth 3\nmap\n.@.\n")
    with pytest.raises(ValueError, match="unreachable"):
        Maze(grid, (0, 0), (2, 0))
    with pytest.raises(ValueError):
        Maze(grid, (1, 0), (0, 0))


def test_env_matches_pure_step_function():
    m = small_maze()
    env = MazeEnv(m)
    for actions in itertools.product(range(4), repeat=4):
        env.reset()
        cell = m.start
        for a in actions:
            s, r, done = env.step(a)
            ref = maze_step(m, cell, a)
            assert env.cell(s) == ref.next_state and r == ref.reward
            cell = ref.next_state
            if ref.done:
                assert done
                break


def test_env_step_cap():
    grid = [[True] * 10 for _ in range(10)]
    env = MazeEnv(Maze(grid, (0, 0), (9, 9)))
    assert env.step_cap == 200
    env.reset()
    done = False
    n = 0
    while not done:
        _, _, done = env.step(LEFT)
        n += 1
    assert n == 200 and not env.reached_goal()


def test_task_generator_two_cell_map():
    grid = load_map("type octile\nheight 1\nwidth 3\nmap\n.@.\n")
    grid[0][1] = True
    grid2 = [[True, True]]
    mazes = list(itertools.islice(maze_task_generator([grid2], 7), 5))
    assert all({m.start, m.goal} == {(0, 0), (1, 0)} for m in mazes)
    a = [(m.start, m.goal) for m in itertools.islice(maze_task_generator([grid], 3), 10)]
    b = [(m.start, m.goal) for m in itertools.islice(maze_task_generator([grid], 3), 10)]
    assert a == b


def test_mountain_car_valley_is_fixed_point():
    p = MountainCarParams()
    (x, v), r, done = mountaincar_step((-math.pi / 6, 0.0), 0.0, p)
    assert x == pytest.approx(-math.pi / 6, abs=1e-12) and v == pytest.approx(0.0, abs=1e-12)
    assert r == -1.0 and not done


def test_mountain_car_goal_and_clamp():
    p = MountainCarParams()
    _, r, done = mountaincar_step((p.goal_x - 0.01, 0.06), 1.0, p)
    assert (r, done) == (100.0, True)
    (_, v), _, _ = mountaincar_step((0.0, p.v_max), p.a_max, p)
    assert v <= p.v_max


@given(st.floats(X_MIN, 0.44), st.floats(-0.07, 0.07), st.floats(-3, 3))
def test_mountain_car_state_stays_in_bounds(x, v, a):
    p = MountainCarParams()
    (x2, v2), r, done = mountaincar_step((x, v), a, p)
    assert X_MIN <= x2 <= X_MAX and -p.v_max <= v2 <= p.v_max
    assert r == (100.0 if done else -1.0)


def test_observation_is_four_dimensional():
    assert observation((0.0, 0.01)) == pytest.approx((0.0, 0.0, 0.01, 0.01))


def test_task_generator_ranges():
    base = MountainCarParams()
    same = list(itertools.islice(mountaincar_task_generator(base, 0, (1, 1), (1, 1), (1, 1)), 3))
    assert all(p == base for p in same)
    a = list(itertools.islice(mountaincar_task_generator(base, 5), 6))
    assert a == list(itertools.islice(mountaincar_task_generator(base, 5), 6))
    assert all(0.9 * base.goal_x <= p.goal_x <= 1.1 * base.goal_x for p in a)


def test_scripted_controller_reaches_goal():
    p = MountainCarParams()
    assert scripted_mc_controller((0.0, 0.01), p) == p.a_max
    assert scripted_mc_controller((0.0, -0.01), p) == p.a_min
    env = MountainCarEnv(p)
    s = env.reset()
    done = False
    while not done:
        s, _, done = env.step(scripted_mc_controller(s, p))
    assert env.reached_goal() and env.steps < 1000
