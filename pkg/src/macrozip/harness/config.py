"""Experiment configuration and its TOML form."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import tomli
import tomli_w

from macrozip.agent import LearnerParams
from macrozip.envs.mountain_car import MountainCarParams

DOMAINS = ("maze", "mountain_car")


class ConfigError(ValueError):
    pass


@dataclass
class HuffmanGrid:
    n_max: int = 12
    l_min: int = 2
    l_max: int = 5
    lam: float = 2.0


@dataclass
class LzwSweep:
    b_max: int = 6
    lam: float = 2.0


@dataclass
class DtwSettings:
    window_duration: float = 5.0
    # None means 0.1 * (a_max - a_min) * window_len
    alpha: float | None = None


@dataclass
class MazeSettings:
    width: int = 30
    height: int = 30
    pitch: int = 3
    loop_fraction: float = 0.3
    map_paths: list[str] = field(default_factory=list)
    # None means 10 * (width + height) per maze
    step_cap: int | None = None


@dataclass
class MountainCarSettings:
    base: MountainCarParams = field(default_factory=MountainCarParams)
    goal_range: tuple[float, float] = (0.9, 1.1)
    v_max_range: tuple[float, float] = (0.85, 1.15)
    power_range: tuple[float, float] = (0.85, 1.15)
    step_cap: int = 1000
    n_primitives: int = 5
    tilings: int = 2
    tiles: int = 8


@dataclass
class ExperimentConfig:
    domain: str = "maze"
    seeds: list[int] = field(default_factory=lambda: [0])
    train_task_count: int = 8
    test_task_count: int = 6
    episodes: int = 500
    # None means the same budget as the test tasks
    train_episodes: int | None = None
    rollouts_per_task: int = 1
    random_macro_count: int = 9
    workers: int = 1
    output_dir: str = "out"
    learner: LearnerParams = field(default_factory=LearnerParams)
    huffman: HuffmanGrid = field(default_factory=HuffmanGrid)
    lzw: LzwSweep = field(default_factory=LzwSweep)
    dtw: DtwSettings = field(default_factory=DtwSettings)
    maze: MazeSettings = field(default_factory=MazeSettings)
    mountain_car: MountainCarSettings = field(default_factory=MountainCarSettings)

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        if self.domain not in DOMAINS:
            raise ConfigError(f"domain must be one of {DOMAINS}, got {self.domain!r}")
        if not self.seeds:
            raise ConfigError("at least one seed is required")
        if self.train_task_count < 1:
            raise ConfigError("train_task_count must be >= 1")
        if self.test_task_count < 0:
            raise ConfigError("test_task_count must be >= 0")
        if self.episodes < 1 or (self.train_episodes is not None and self.train_episodes < 1):
            raise ConfigError("episode counts must be >= 1")
        if self.rollouts_per_task < 1 or self.random_macro_count < 1 or self.workers < 1:
            raise ConfigError("rollouts_per_task, random_macro_count and workers must be >= 1")
        h = self.huffman
        if not 1 <= h.l_min <= h.l_max or h.n_max < 1 or h.lam <= 0:
            raise ConfigError("invalid huffman grid")
        if self.lzw.b_max < 1 or self.lzw.lam <= 0:
            raise ConfigError("invalid lzw sweep")
        if self.dtw.window_duration <= 0 or (self.dtw.alpha is not None and self.dtw.alpha <= 0):
            raise ConfigError("invalid dtw settings")

    @property
    def train_budget(self) -> int:
        return self.train_episodes if self.train_episodes is not None else self.episodes


def _to_plain(obj: Any) -> Any:
    if dataclasses.is_dataclass(obj):
        out = {}
        for f in dataclasses.fields(obj):
            value = getattr(obj, f.name)
            if value is None:
                continue
            out[f.name] = _to_plain(value)
        return out
    if isinstance(obj, (list, tuple)):
        return [_to_plain(v) for v in obj]
    return obj


def _build(cls: type, data: dict, where: str) -> Any:
    if not isinstance(data, dict):
        raise ConfigError(f"[{where}] must be a table")
    fields = {f.name: f for f in dataclasses.fields(cls)}
    unknown = set(data) - set(fields)
    if unknown:
        raise ConfigError(f"unknown key(s) in [{where}]: {', '.join(sorted(unknown))}")
    kwargs = {}
    for name, value in data.items():
        ftype = fields[name].type
        sub = _NESTED.get((cls, name))
        if sub is not None:
            value = _build(sub, value, f"{where}.{name}" if where else name)
        elif isinstance(value, list) and "tuple" in str(ftype):
            value = tuple(value)
        kwargs[name] = value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[{where or 'root'}] {exc}") from exc


_NESTED = {
    (ExperimentConfig, "learner"): LearnerParams,
    (ExperimentConfig, "huffman"): HuffmanGrid,
    (ExperimentConfig, "lzw"): LzwSweep,
    (ExperimentConfig, "dtw"): DtwSettings,
    (ExperimentConfig, "maze"): MazeSettings,
    (ExperimentConfig, "mountain_car"): MountainCarSettings,
    (MountainCarSettings, "base"): MountainCarParams,
}


def config_to_dict(config: ExperimentConfig) -> dict:
    return _to_plain(config)


def config_from_dict(data: dict) -> ExperimentConfig:
    return _build(ExperimentConfig, data, "")


def dumps(config: ExperimentConfig) -> str:
    return tomli_w.dumps(config_to_dict(config))


def loads(text: str) -> ExperimentConfig:
    try:
        data = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML: {exc}") from exc
    return config_from_dict(data)


def load(path: str | Path) -> ExperimentConfig:
    return loads(Path(path).read_text(encoding="utf-8"))
