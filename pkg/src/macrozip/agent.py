"""SMDP Q-learning over primitives plus open-loop macros.

Exploration follows the macro-biased epsilon-greedy rule: act greedily over
the whole extended action set with probability ``1 - epsilon``, otherwise
draw from the exploration distribution of the action set.
"""

from __future__ import annotations

import logging
import math
import random
from collections.abc import Callable, Hashable, Sequence
from dataclasses import dataclass
from typing import Any, Protocol

from macrozip.core import ExtendedActionSet, Macro, MacroDistribution, Trajectory

log = logging.getLogger(__name__)


class Env(Protocol):
    def reset(self) -> Any: ...
    def step(self, action: Any) -> Any: ...
    def reached_goal(self) -> bool: ...


@dataclass(frozen=True)
class LearnerParams:
    alpha: float = 0.1
    gamma: float = 0.99
    epsilon_start: float = 1.0
    epsilon_end: float = 0.05
    epsilon_decay_fraction: float = 0.6

    def __post_init__(self) -> None:
        if not 0 < self.alpha <= 1:
            raise ValueError("alpha must be in (0, 1]")
        if not 0 < self.gamma <= 1:
            raise ValueError("gamma must be in (0, 1]")
        for eps in (self.epsilon_start, self.epsilon_end):
            if not 0 <= eps <= 1:
                raise ValueError("epsilon must be in [0, 1]")

    def epsilon(self, episode: int, episodes: int) -> float:
        span = self.epsilon_decay_fraction * episodes
        if span <= 0 or episode >= span:
            return self.epsilon_end
        return self.epsilon_start + (self.epsilon_end - self.epsilon_start) * episode / span


class QTable:
    """Tabular action values; unseen entries read as 0."""

    def __init__(self, n_actions: int, alpha: float = 0.1, gamma: float = 0.99):
        if not 0 <= alpha <= 1:
            raise ValueError("alpha must be in [0, 1]")
        self.n_actions = n_actions
        self.alpha = alpha
        self.gamma = gamma
        self.table: dict[Hashable, list[float]] = {}
        self._zeros = [0.0] * n_actions

    def values(self, state: Hashable) -> list[float]:
        return self.table.get(state, self._zeros)

    def get(self, state: Hashable, action: int) -> float:
        return self.values(state)[action]

    def update(self, state: Hashable, action: int, target: float) -> None:
        row = self.table.get(state)
        if row is None:
            row = self.table[state] = [0.0] * self.n_actions
        row[action] += self.alpha * (target - row[action])

    def to_json(self) -> dict:
        return {str(s): {str(a): v for a, v in enumerate(row)} for s, row in self.table.items()}


class TileCodedQ:
    """Linear action values over a few offset grid tilings of (x, v)."""

    def __init__(
        self,
        n_actions: int,
        low: Sequence[float],
        high: Sequence[float],
        tilings: int = 2,
        tiles: int = 8,
        alpha: float = 0.1,
        gamma: float = 0.99,
    ):
        self.n_actions = n_actions
        self.alpha = alpha
        self.gamma = gamma
        self.tilings = tilings
        self.tiles = tiles
        self.low = tuple(low)
        self.width = tuple((h - l) / tiles for l, h in zip(low, high))
        side = tiles + 1
        self.weights = [[0.0] * n_actions for _ in range(tilings * side * side)]

    def features(self, state: tuple[float, float]) -> list[int]:
        side = self.tiles + 1
        out = []
        for t in range(self.tilings):
            off = t / self.tilings
            ix = int((state[0] - self.low[0]) / self.width[0] + off)
            iv = int((state[1] - self.low[1]) / self.width[1] + off)
            ix = min(max(ix, 0), self.tiles)
            iv = min(max(iv, 0), self.tiles)
            out.append((t * side + ix) * side + iv)
        return out

    def values(self, state: tuple[float, float]) -> list[float]:
        rows = [self.weights[f] for f in self.features(state)]
        return [sum(col) for col in zip(*rows)]

    def get(self, state: tuple[float, float], action: int) -> float:
        return sum(self.weights[f][action] for f in self.features(state))

    def update(self, state: tuple[float, float], action: int, target: float) -> None:
        feats = self.features(state)
        delta = target - sum(self.weights[f][action] for f in feats)
        step = self.alpha * delta / len(feats)
        for f in feats:
            self.weights[f][action] += step


def greedy_index(values: Sequence[float], rng: random.Random) -> int:
    best = max(values)
    ties = [i for i, v in enumerate(values) if v == best]
    return ties[0] if len(ties) == 1 else ties[rng.randrange(len(ties))]


def select_action(values: Sequence[float], action_set: ExtendedActionSet, epsilon: float, rng: random.Random) -> int:
    """Greedy over all extended actions w.p. ``1 - epsilon``, else a draw from the pool."""
    if not len(action_set):
        raise ValueError("empty action set")
    if not 0 <= epsilon <= 1:
        raise ValueError("epsilon must be in [0, 1]")
    if epsilon > 0 and rng.random() < epsilon:
        keys, cum = action_set.cumulative_pool
        return rng.choices(keys, cum_weights=cum)[0]
    return greedy_index(values, rng)


def execute_extended(env: Env, actions: Sequence, gamma: float) -> tuple[Any, float, int, bool, list, float]:
    """Run actions open-loop, stopping early if the episode ends.

    Returns ``(next_state, discounted_return, steps, done, primitive_log,
    undiscounted_return)``.
    """
    ret = 0.0
    raw = 0.0
    disc = 1.0
    k = 0
    done = False
    state = None
    log_: list = []
    for a in actions:
        state, r, done = env.step(a)
        log_.append(a)
        ret += disc * r
        raw += r
        disc *= gamma
        k += 1
        if done:
            break
    return state, ret, k, done, log_, raw


def q_update(q, state, action: int, ret: float, k: int, next_state, terminal: bool):
    """SMDP target ``R + gamma**k * max Q(s')`` (no bootstrap past a terminal)."""
    if k < 1:
        raise ValueError("k must be >= 1")
    target = ret if terminal else ret + q.gamma**k * max(q.values(next_state))
    q.update(state, action, target)
    return q


@dataclass(frozen=True)
class EpisodeStats:
    episode: int
    ret: float
    steps: int
    reached_goal: bool


def train(
    env: Env,
    action_set: ExtendedActionSet,
    episodes: int,
    params: LearnerParams,
    seed: int,
    q=None,
) -> tuple[Any, list[EpisodeStats]]:
    """Epsilon-annealed SMDP Q-learning; deterministic for a given seed."""
    if episodes < 1:
        raise ValueError("episodes must be >= 1")
    if q is None:
        q = QTable(len(action_set), params.alpha, params.gamma)
    rng = random.Random(seed)
    seqs = action_set.sequences
    gamma = params.gamma
    curve = []
    for ep in range(episodes):
        eps = params.epsilon(ep, episodes)
        s = env.reset()
        total = 0.0
        steps = 0
        done = False
        while not done:
            a = select_action(q.values(s), action_set, eps, rng)
            s2, ret, k, done, _, raw = execute_extended(env, seqs[a], gamma)
            q_update(q, s, a, ret, k, s2, done and env.reached_goal())
            total += raw
            steps += k
            s = s2
        curve.append(EpisodeStats(ep, total, steps, env.reached_goal()))
    return q, curve


@dataclass(frozen=True)
class RolloutRecord:
    trajectory: Trajectory
    ret: float
    steps: int
    reached_goal: bool


def _to_trajectory(actions: list, task_id: str, dt: float | None) -> Trajectory:
    if actions and isinstance(actions[0], float):
        return Trajectory(actions=tuple((a,) for a in actions), task_id=task_id, dt=dt or 1.0)
    return Trajectory(actions=tuple(actions), task_id=task_id, dt=dt)


def rollout(env: Env, policy: Callable[[Any], Sequence], task_id: str = "", dt: float | None = None) -> RolloutRecord:
    """Run one episode where ``policy(state)`` returns the primitive actions to execute."""
    s = env.reset()
    actions: list = []
    total = 0.0
    done = False
    while not done:
        s, _, k, done, log_, raw = execute_extended(env, policy(s), 1.0)
        actions.extend(log_)
        total += raw
    return RolloutRecord(_to_trajectory(actions, task_id, dt), total, len(actions), env.reached_goal())


def record_optimal_rollouts(
    env: Env, q, action_set: ExtendedActionSet, count: int, seed: int, task_id: str = ""
) -> list[RolloutRecord]:
    """Greedy rollouts with macros flattened; only goal-reaching ones are kept."""
    rng = random.Random(seed)
    seqs = action_set.sequences
    records = []
    for _ in range(count):
        rec = rollout(env, lambda s: seqs[greedy_index(q.values(s), rng)], task_id)
        if rec.reached_goal:
            records.append(rec)
        else:
            log.warning("discarding rollout on %s: goal not reached in %d steps", task_id or "task", rec.steps)
    if not records:
        raise RuntimeError("policy not converged")
    return records


def extended_action_set(
    primitives: Sequence,
    sequences: Sequence[tuple],
    probs: Sequence[float],
    name: str = "",
    dt: float | None = None,
) -> ExtendedActionSet:
    """Build A' from weighted action sequences.

    Length-1 sequences equal to a primitive are folded into that primitive;
    zero-probability sequences are dropped from both the macro list and the
    exploration pool.
    """
    prims = tuple(primitives)
    prim_index = {(p,): i for i, p in enumerate(prims)}
    macros: list[Macro] = []
    macro_index: dict[tuple, int] = {}
    weights: dict[int, float] = {}
    for seq, p in zip(sequences, probs):
        seq = tuple(seq)
        if p <= 0:
            continue
        if seq in prim_index:
            key = prim_index[seq]
        else:
            if seq not in macro_index:
                macro_index[seq] = len(prims) + len(macros)
                macros.append(Macro(actions=seq, id=len(macros), dt=dt))
            key = macro_index[seq]
        weights[key] = weights.get(key, 0.0) + p
    total = math.fsum(weights.values())
    if total <= 0:
        raise ValueError("empty distribution")
    dist = MacroDistribution({k: w / total for k, w in weights.items()})
    return ExtendedActionSet(primitives=prims, macros=tuple(macros), distribution=dist, name=name)


def primitives_only(primitives: Sequence, name: str = "primitives") -> ExtendedActionSet:
    prims = tuple(primitives)
    return extended_action_set(prims, [(p,) for p in prims], [1.0] * len(prims), name)


def random_macro_set(
    primitives: Sequence, n: int, lengths: int | Sequence[int], seed: int, name: str = "random_macros"
) -> ExtendedActionSet:
    """``n`` macros of uniformly random primitives, explored uniformly.

    Macro ``i`` has length ``lengths[i % len(lengths)]``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if isinstance(lengths, int):
        lengths = [lengths]
    if not lengths or min(lengths) < 1:
        raise ValueError("macro lengths must be >= 1")
    rng = random.Random(seed)
    prims = tuple(primitives)
    seqs = []
    for i in range(n):
        length = lengths[i % len(lengths)]
        seqs.append(tuple(prims[rng.randrange(len(prims))] for _ in range(length)))
    macros = tuple(Macro(actions=s, id=i) for i, s in enumerate(seqs))
    k = len(prims)
    dist = MacroDistribution({k + i: 1.0 / n for i in range(n)})
    return ExtendedActionSet(primitives=prims, macros=macros, distribution=dist, name=name)
