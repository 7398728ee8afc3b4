"""End-to-end experiment: solve training tasks, extract macros, evaluate on test tasks."""

from __future__ import annotations

import contextlib
import itertools
import logging
import math
import random
import zlib
from collections.abc import Callable, Iterator, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from macrozip.agent import (
    EpisodeStats,
    LearnerParams,
    QTable,
    TileCodedQ,
    extended_action_set,
    primitives_only,
    random_macro_set,
    record_optimal_rollouts,
    rollout,
    train,
)
from macrozip.bounds import BoundReport, verify_bounds
from macrozip.core import ExtendedActionSet, Trajectory
from macrozip.dtw import ClusterRegistry, expand_symbols, symbolize, window_length
from macrozip.envs.maze import Maze, MazeEnv, maze_task_generator
from macrozip.envs.mountain_car import (
    MountainCarEnv,
    MountainCarParams,
    mountaincar_task_generator,
    scripted_mc_controller,
)
from macrozip.envs.movingai import generate_maze_map, read_map
from macrozip.harness.config import ExperimentConfig, MountainCarSettings
from macrozip.huffman import (
    HuffmanSearchResult,
    mean_encoded_bits,
    primitive_huffman_codebook,
    search_huffman,
)
from macrozip.lzw import LzwSearchResult, lzw_encoded_bits, min_b_limit, search_b_limit

log = logging.getLogger(__name__)

CONDITIONS = ("primitives", "random_macros", "huffman", "lzw")
MC_DT = 1.0


class PipelineError(RuntimeError):
    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause
        # completed seeds, filled in by run_pipeline so callers can flush them
        self.partial: ExperimentReport | None = None


@contextlib.contextmanager
def stage(name: str) -> Iterator[None]:
    log.info("stage %s", name)
    try:
        yield
    except PipelineError:
        raise
    except Exception as exc:
        raise PipelineError(name, exc) from exc


def derive_seed(*parts: object) -> int:
    return zlib.crc32(":".join(str(p) for p in parts).encode())


@dataclass
class Task:
    task_id: str
    seed: int
    maze: Maze | None = None
    map_name: str | None = None
    mc_params: MountainCarParams | None = None

    def manifest(self) -> dict:
        out: dict = {"task_id": self.task_id, "seed": self.seed}
        if self.maze is not None:
            out.update(map_path=self.map_name, start=list(self.maze.start), goal=list(self.maze.goal))
        if self.mc_params is not None:
            p = self.mc_params
            out["mc_params"] = {
                "goal_x": p.goal_x,
                "v_max": p.v_max,
                "a_min": p.a_min,
                "a_max": p.a_max,
                "power": p.power,
                "start_x": p.start_x,
            }
        return out


@dataclass
class SeedExtraction:
    seed: int
    train_tasks: list[Task]
    test_tasks: list[Task]
    corpus: list[Trajectory]
    symbols: list[Trajectory]
    alphabet_size: int
    huffman: HuffmanSearchResult
    lzw: LzwSearchResult
    action_sets: dict[str, ExtendedActionSet]
    compression: dict[str, float]
    bounds: list[BoundReport]
    registry: ClusterRegistry | None = None
    maps: dict[str, list[list[bool]]] = field(default_factory=dict)


@dataclass
class ConditionResult:
    condition: str
    curves: dict[str, list[EpisodeStats]] = field(default_factory=dict)

    @property
    def episodes(self) -> int:
        return len(next(iter(self.curves.values()))) if self.curves else 0

    def task_jumpstart(self, task_id: str) -> float:
        return jumpstart([e.ret for e in self.curves[task_id]])

    def task_total_reward(self, task_id: str) -> float:
        return math.fsum(e.ret for e in self.curves[task_id])

    @property
    def mean_curve(self) -> list[float]:
        if not self.curves:
            return []
        curves = list(self.curves.values())
        return [math.fsum(c[i].ret for c in curves) / len(curves) for i in range(len(curves[0]))]

    @property
    def jumpstart(self) -> float:
        return math.fsum(self.task_jumpstart(t) for t in self.curves) / len(self.curves) if self.curves else math.nan

    @property
    def total_reward(self) -> float:
        if not self.curves:
            return math.nan
        return math.fsum(self.task_total_reward(t) for t in self.curves) / len(self.curves)


def jumpstart(returns: Sequence[float]) -> float:
    """Mean return over the first 10% of episodes (at least one)."""
    k = max(1, math.ceil(0.1 * len(returns)))
    return math.fsum(returns[:k]) / k


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    extractions: list[SeedExtraction]
    conditions: dict[str, ConditionResult]
    partial: bool = False


# ---- tasks -----------------------------------------------------------------


def maze_tasks(config: ExperimentConfig, seed: int) -> tuple[list[Task], list[Task], dict]:
    ms = config.maze
    maps: dict[str, list[list[bool]]] = {}
    if ms.map_paths:
        user = [(p, read_map(p)) for p in ms.map_paths]
        maps.update(user)
        stream = maze_task_generator([g for _, g in user], derive_seed(seed, "tasks"))
        names = [p for p, _ in user]

        def draw(role: str, count: int) -> list[Task]:
            out = []
            for i in range(count):
                m = next(stream)
                name = next(n for n, (_, g) in zip(names, user) if tuple(map(tuple, g)) == m.grid)
                out.append(Task(f"s{seed}_{role}{i}", seed, maze=m, map_name=name))
            return out

        return draw("train", config.train_task_count), draw("test", config.test_task_count), maps

    def synth(role: str, count: int) -> list[Task]:
        out = []
        for i in range(count):
            name = f"maps/s{seed}_{role}{i}.map"
            grid = generate_maze_map(ms.width, ms.height, derive_seed(seed, role, i, "map"), ms.pitch, ms.loop_fraction)
            maps[name] = grid
            m = next(maze_task_generator([grid], derive_seed(seed, role, i, "task")))
            out.append(Task(f"s{seed}_{role}{i}", seed, maze=m, map_name=name))
        return out

    return synth("train", config.train_task_count), synth("test", config.test_task_count), maps


def mc_tasks(config: ExperimentConfig, seed: int) -> tuple[list[Task], list[Task]]:
    mc = config.mountain_car

    def draw(role: str, count: int) -> list[Task]:
        gen = mountaincar_task_generator(
            mc.base, derive_seed(seed, role), mc.goal_range, mc.v_max_range, mc.power_range
        )
        return [Task(f"s{seed}_{role}{i}", seed, mc_params=p) for i, p in enumerate(itertools.islice(gen, count))]

    return draw("train", config.train_task_count), draw("test", config.test_task_count)


def make_env(task: Task, config: ExperimentConfig):
    if task.maze is not None:
        return MazeEnv(task.maze, config.maze.step_cap)
    return MountainCarEnv(task.mc_params, config.mountain_car.step_cap)


def mc_primitives(settings: MountainCarSettings) -> tuple[float, ...]:
    lo, hi, n = settings.base.a_min, settings.base.a_max, settings.n_primitives
    if n == 1:
        return (hi,)
    return tuple(lo + (hi - lo) * i / (n - 1) for i in range(n))


def make_q(domain: str, n_actions: int, learner: LearnerParams, mc: MountainCarSettings):
    if domain == "maze":
        return QTable(n_actions, learner.alpha, learner.gamma)
    v_hi = mc.base.v_max * mc.v_max_range[1]
    return TileCodedQ(
        n_actions, (-1.2, -v_hi), (0.6, v_hi), mc.tilings, mc.tiles, learner.alpha, learner.gamma
    )


# ---- stages ----------------------------------------------------------------


def _train_job(args: tuple) -> list[EpisodeStats]:
    task, action_set, episodes, config, seed = args
    env = make_env(task, config)
    q = make_q(config.domain, len(action_set), config.learner, config.mountain_car)
    _, curve = train(env, action_set, episodes, config.learner, seed, q)
    return curve


def _map_jobs(fn: Callable, jobs: list, workers: int) -> list:
    if workers <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs))


def _maze_corpus_job(args: tuple) -> list[Trajectory]:
    task, config, seed = args
    env = make_env(task, config)
    prims = primitives_only(range(4))
    q, _ = train(env, prims, config.train_budget, config.learner, seed)
    try:
        recs = record_optimal_rollouts(env, q, prims, config.rollouts_per_task, seed, task.task_id)
    except RuntimeError:
        log.warning("training task %s not solved; skipped", task.task_id)
        return []
    return [r.trajectory for r in recs]


def collect_corpus(config: ExperimentConfig, seed: int, tasks: list[Task]) -> list[Trajectory]:
    if config.domain == "maze":
        jobs = [(t, config, derive_seed(seed, t.task_id, "learn")) for t in tasks]
        corpus = [tr for part in _map_jobs(_maze_corpus_job, jobs, config.workers) for tr in part]
    else:
        corpus = []
        for t in tasks:
            env = make_env(t, config)
            params = t.mc_params
            for _ in range(config.rollouts_per_task):
                rec = rollout(env, lambda s, p=params: (scripted_mc_controller(s, p),), t.task_id, MC_DT)
                if rec.reached_goal:
                    corpus.append(rec.trajectory)
                else:
                    log.warning("scripted controller failed on %s", t.task_id)
    if not corpus:
        raise RuntimeError("no goal-reaching training rollouts")
    return corpus


def default_alpha(config: ExperimentConfig) -> float:
    base = config.mountain_car.base
    wlen = window_length(config.dtw.window_duration, MC_DT)
    return 0.1 * (base.a_max - base.a_min) * wlen


def extract(config: ExperimentConfig, seed: int, corpus: list[Trajectory]):
    """Run both codecs on the (symbolized) corpus and build the four action sets."""
    registry = None
    if config.domain == "maze":
        symbols = corpus
        alphabet = 4
        prims: tuple = (0, 1, 2, 3)

        def expand(seq: tuple) -> tuple:
            return tuple(seq)

        dt = None
    else:
        alpha = config.dtw.alpha if config.dtw.alpha is not None else default_alpha(config)
        symbols, registry = symbolize(corpus, config.dtw.window_duration, alpha)
        alphabet = len(registry)
        prims = mc_primitives(config.mountain_car)

        def expand(seq: tuple) -> tuple:
            return tuple(row[0] for row in expand_symbols(seq, registry))

        dt = MC_DT

    h = config.huffman
    huff = search_huffman(symbols, h.n_max, h.l_min, h.l_max, h.lam, primitives=range(alphabet))
    b_max = max(config.lzw.b_max, min_b_limit(alphabet))
    lz = search_b_limit(symbols, b_max, config.lzw.lam, alphabet)

    sets = {"primitives": primitives_only(prims)}
    huff_set = extended_action_set(
        prims,
        [expand(m.actions) for m in huff.macros],
        [huff.distribution[m.id] for m in huff.macros],
        "huffman",
        dt,
    )
    lzw_set = extended_action_set(
        prims, [expand(e) for e in lz.macros], [lz.distribution[e] for e in lz.macros], "lzw", dt
    )
    learned = sorted(m.length for m in huff_set.macros + lzw_set.macros) or [huff.best_l]
    rng = random.Random(derive_seed(seed, "random_lengths"))
    lengths = [rng.choice(learned) for _ in range(config.random_macro_count)]
    sets["random_macros"] = random_macro_set(
        prims, config.random_macro_count, lengths, derive_seed(seed, "random_macros")
    )
    sets["huffman"] = huff_set
    sets["lzw"] = lzw_set

    n = len(symbols)
    compression = {
        "huffman_bits": mean_encoded_bits(symbols, huff.codebook),
        "primitive_huffman_bits": mean_encoded_bits(symbols, primitive_huffman_codebook(symbols, range(alphabet))),
        "lzw_bits": lzw_encoded_bits(symbols, lz.codebook) / n,
        "fixed_width_bits": sum(len(t) for t in symbols) * min_b_limit(alphabet) / n,
    }
    return symbols, alphabet, registry, huff, lz, sets, compression


def run_pipeline(config: ExperimentConfig) -> ExperimentReport:
    config.validate()
    extractions: list[SeedExtraction] = []
    conditions = {c: ConditionResult(c) for c in CONDITIONS} if config.test_task_count else {}
    try:
        for seed in config.seeds:
            extractions.append(_run_seed(config, seed, conditions))
    except PipelineError as exc:
        exc.partial = ExperimentReport(config, extractions, conditions, partial=True)
        raise
    return ExperimentReport(config, extractions, conditions)


def _run_seed(config: ExperimentConfig, seed: int, conditions: dict[str, ConditionResult]) -> SeedExtraction:
    maps: dict = {}
    with stage("tasks"):
        if config.domain == "maze":
            train_tasks, test_tasks, maps = maze_tasks(config, seed)
        else:
            train_tasks, test_tasks = mc_tasks(config, seed)
    with stage("train"):
        corpus = collect_corpus(config, seed, train_tasks)
    with stage("extract"):
        symbols, alphabet, registry, huff, lz, sets, compression = extract(config, seed, corpus)
    with stage("bounds"):
        reports = verify_bounds(
            symbols, huff, lz.codebook, (config.huffman.l_min, config.huffman.l_max), alphabet
        )
        for r in reports:
            r.inputs["seed"] = seed
    with stage("evaluate"):
        jobs = []
        keys = []
        for t in test_tasks:
            learn_seed = derive_seed(seed, t.task_id, "learn")
            for c in CONDITIONS:
                jobs.append((t, sets[c], config.episodes, config, learn_seed))
                keys.append((c, t.task_id))
        for (c, task_id), curve in zip(keys, _map_jobs(_train_job, jobs, config.workers)):
            conditions[c].curves[task_id] = curve
    return SeedExtraction(
        seed, train_tasks, test_tasks, corpus, symbols, alphabet, huff, lz, sets, compression, reports,
        registry, maps,
    )
