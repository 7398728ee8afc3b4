from macrozip.envs.maze import Maze, MazeEnv, StepResult, maze_step, maze_task_generator
from macrozip.envs.mountain_car import (
    MountainCarEnv,
    MountainCarParams,
    mountaincar_step,
    mountaincar_task_generator,
    scripted_mc_controller,
)
from macrozip.envs.movingai import MapParseError, dump_map, generate_maze_map, load_map, read_map

__all__ = [
    "MapParseError",
    "Maze",
    "MazeEnv",
    "MountainCarEnv",
    "MountainCarParams",
    "StepResult",
    "dump_map",
    "generate_maze_map",
    "load_map",
    "maze_step",
    "maze_task_generator",
    "mountaincar_step",
    "mountaincar_task_generator",
    "read_map",
    "scripted_mc_controller",
]
