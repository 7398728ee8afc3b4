"""Domain types shared by the compression, agent and harness modules."""

from __future__ import annotations

import json
import math
from collections.abc import Hashable, Iterable, Iterator, Mapping
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Any, Union

Action = Union[int, tuple]

PROB_ATOL = 1e-9


def _is_discrete(a: Any) -> bool:
    return isinstance(a, int) and not isinstance(a, bool)


def _as_vector(a: Any) -> tuple[float, ...]:
    if isinstance(a, (int, float)) and not isinstance(a, bool):
        vec = (float(a),)
    else:
        vec = tuple(float(x) for x in a)
    if not vec or not all(math.isfinite(x) for x in vec):
        raise ValueError(f"continuous action must be a finite non-empty vector, got {a!r}")
    return vec


@dataclass(frozen=True)
class Trajectory:
    """Ordered actions of one rollout.

    Discrete actions are ints indexing the primitive alphabet. Continuous
    actions are stored as tuples of floats and require a sampling period.
    """

    actions: tuple
    task_id: str = ""
    dt: float | None = None

    def __post_init__(self) -> None:
        acts = tuple(self.actions)
        if acts and not all(_is_discrete(a) for a in acts):
            if any(_is_discrete(a) for a in acts):
                raise ValueError("trajectory mixes discrete and continuous actions")
            acts = tuple(_as_vector(a) for a in acts)
            dims = {len(a) for a in acts}
            if len(dims) > 1:
                raise ValueError("continuous actions have inconsistent dimensions")
            if self.dt is None or not self.dt > 0:
                raise ValueError("continuous trajectory needs dt > 0")
        elif acts and any(a < 0 for a in acts):
            raise ValueError("discrete action ids must be non-negative")
        object.__setattr__(self, "actions", acts)

    @property
    def is_continuous(self) -> bool:
        return bool(self.actions) and isinstance(self.actions[0], tuple)

    def __len__(self) -> int:
        return len(self.actions)

    def to_json(self) -> dict:
        if self.is_continuous:
            acts: list = [list(a) for a in self.actions]
        else:
            acts = list(self.actions)
        return {"task_id": self.task_id, "dt": self.dt, "actions": acts}

    @classmethod
    def from_json(cls, obj: Mapping[str, Any]) -> "Trajectory":
        acts = obj["actions"]
        if acts and isinstance(acts[0], list):
            acts = [tuple(a) for a in acts]
        return cls(actions=tuple(acts), task_id=str(obj.get("task_id", "")), dt=obj.get("dt"))


@dataclass(frozen=True)
class Macro:
    """Open-loop action sequence with a stable id."""

    actions: tuple
    id: int
    dt: float | None = None

    def __post_init__(self) -> None:
        if len(self.actions) < 1:
            raise ValueError("macro must contain at least one action")
        object.__setattr__(self, "actions", tuple(self.actions))

    @property
    def length(self) -> int:
        return len(self.actions)

    @property
    def is_continuous(self) -> bool:
        return not _is_discrete(self.actions[0])

    @property
    def duration(self) -> float:
        if self.dt is None:
            return float(self.length)
        return self.length * self.dt


def macro_equal_discrete(m1: Macro | tuple, m2: Macro | tuple) -> bool:
    """Element-wise equality of two discrete macros (order and length sensitive)."""
    a1 = m1.actions if isinstance(m1, Macro) else tuple(m1)
    a2 = m2.actions if isinstance(m2, Macro) else tuple(m2)
    kinds = {all(_is_discrete(a) for a in a1), all(_is_discrete(a) for a in a2)}
    if kinds != {True}:
        raise TypeError("type mismatch: macro_equal_discrete needs two discrete macros")
    return len(a1) == len(a2) and all(x == y for x, y in zip(a1, a2))


class MacroDistribution(Mapping):
    """Immutable probability table keyed by macro id (or any hashable symbol)."""

    __slots__ = ("_probs",)

    def __init__(self, probs: Mapping[Hashable, float] | Iterable[tuple[Hashable, float]]):
        items = dict(probs)
        if not items:
            raise ValueError("empty distribution")
        for k, p in items.items():
            if not (p >= 0 and math.isfinite(p)):
                raise ValueError(f"invalid probability {p!r} for {k!r}")
        total = math.fsum(items.values())
        if abs(total - 1.0) > PROB_ATOL:
            raise ValueError(f"probabilities sum to {total}, expected 1")
        self._probs = items

    def __getitem__(self, key: Hashable) -> float:
        return self._probs[key]

    def __iter__(self) -> Iterator:
        return iter(self._probs)

    def __len__(self) -> int:
        return len(self._probs)

    def __repr__(self) -> str:
        return f"MacroDistribution({self._probs!r})"

    def support(self) -> list:
        """Keys with strictly positive probability, in insertion order."""
        return [k for k, p in self._probs.items() if p > 0]

    def almost_equal(self, other: Mapping, atol: float = PROB_ATOL) -> bool:
        if set(self) != set(other):
            return False
        return all(abs(self[k] - other[k]) <= atol for k in self)


def normalize_counts(counts: Mapping[Hashable, int]) -> MacroDistribution:
    """Turn occurrence counts into probabilities, keeping zero-count keys at 0."""
    total = sum(counts.values())
    if any(c < 0 for c in counts.values()):
        raise ValueError("counts must be non-negative")
    if total <= 0:
        raise ValueError("empty distribution")
    probs = {k: c / total for k, c in counts.items()}
    # push the rounding residue onto the largest entry so the sum is exact to 1e-9
    residue = 1.0 - math.fsum(probs.values())
    if residue:
        top = max(probs, key=lambda k: probs[k])
        probs[top] += residue
    return MacroDistribution(probs)


def is_prefix_free(codes: Iterable[str]) -> bool:
    ordered = sorted(codes)
    # in sorted order any prefix relation shows up between neighbours
    return all(not b.startswith(a) for a, b in zip(ordered, ordered[1:]))


@dataclass(frozen=True)
class CodeEntry:
    symbol: tuple
    code: str
    prob: float = 0.0
    primitive: bool = False


@dataclass(frozen=True)
class Codebook:
    """Symbol to bit-string mapping produced by either codec."""

    kind: str
    entries: tuple[CodeEntry, ...]
    b_limit: int | None = None
    _lengths: dict = field(default=None, repr=False, compare=False)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        object.__setattr__(self, "entries", tuple(self.entries))
        symbols = [e.symbol for e in self.entries]
        if len(set(symbols)) != len(symbols):
            raise ValueError("duplicate symbols in codebook")
        if any(c not in "01" for e in self.entries for c in e.code):
            raise ValueError("codes must be bit strings")
        if self.kind == "huffman":
            if not is_prefix_free(e.code for e in self.entries):
                raise ValueError("huffman codebook is not prefix-free")
        elif self.kind == "lzw":
            if self.b_limit is None:
                raise ValueError("lzw codebook needs b_limit")
            if len(self.entries) > 2**self.b_limit:
                raise ValueError("lzw codebook exceeds 2**b_limit entries")
            if any(len(e.code) != self.b_limit for e in self.entries):
                raise ValueError("lzw codes must all be b_limit bits wide")
        else:
            raise ValueError(f"unknown codebook kind {self.kind!r}")
        object.__setattr__(self, "_lengths", {e.symbol: len(e.code) for e in self.entries})

    @property
    def code_lengths(self) -> dict[tuple, int]:
        return dict(self._lengths)

    @property
    def macro_entries(self) -> list[CodeEntry]:
        return [e for e in self.entries if not e.primitive]

    @property
    def max_macro_code_length(self) -> int:
        return max(len(e.code) for e in self.macro_entries)

    def to_json(self) -> dict:
        out: dict[str, Any] = {"kind": self.kind}
        if self.kind == "lzw":
            out["b_limit"] = self.b_limit
        out["entries"] = [
            {"symbol": list(e.symbol), "code": e.code, "prob": e.prob, "primitive": e.primitive}
            for e in self.entries
        ]
        return out

    @classmethod
    def from_json(cls, obj: Mapping[str, Any]) -> "Codebook":
        entries = tuple(
            CodeEntry(
                symbol=tuple(e["symbol"]),
                code=e["code"],
                prob=float(e.get("prob", 0.0)),
                primitive=bool(e.get("primitive", False)),
            )
            for e in obj["entries"]
        )
        return cls(kind=obj["kind"], entries=entries, b_limit=obj.get("b_limit"))


@dataclass(frozen=True)
class ExtendedActionSet:
    """Primitives plus macros, with the exploration distribution over them.

    Extended action ``i`` is ``primitives[i]`` for ``i < len(primitives)`` and
    ``macros[i - len(primitives)]`` otherwise. ``distribution`` is keyed by
    extended action index and only covers the exploration pool.
    """

    primitives: tuple
    macros: tuple[Macro, ...]
    distribution: MacroDistribution
    name: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "primitives", tuple(self.primitives))
        object.__setattr__(self, "macros", tuple(self.macros))
        if not self.primitives:
            raise ValueError("extended action set needs at least one primitive")
        ids = [m.id for m in self.macros]
        if len(set(ids)) != len(ids):
            raise ValueError("macro ids must be unique")
        n = len(self.primitives) + len(self.macros)
        if any(not (isinstance(k, int) and 0 <= k < n) for k in self.distribution):
            raise ValueError("distribution keys must be extended action indices")

    def __len__(self) -> int:
        return len(self.primitives) + len(self.macros)

    @property
    def sequences(self) -> list[tuple]:
        """Every extended action as the tuple of primitive actions it runs."""
        return [(p,) for p in self.primitives] + [m.actions for m in self.macros]

    @property
    def pool(self) -> tuple[list[int], list[float]]:
        keys = self.distribution.support()
        return keys, [self.distribution[k] for k in keys]

    @cached_property
    def cumulative_pool(self) -> tuple[list[int], list[float]]:
        keys, probs = self.pool
        cum = []
        acc = 0.0
        for p in probs:
            acc += p
            cum.append(acc)
        return keys, cum


def read_trajectories(source: str | Path | Iterable[str]) -> list[Trajectory]:
    """Read a JSON Lines trajectory corpus (one trajectory per line)."""
    if isinstance(source, (str, Path)):
        with open(source, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    else:
        lines = list(source)
    out = []
    for lineno, line in enumerate(lines, 1):
        if not line.strip():
            continue
        try:
            out.append(Trajectory.from_json(json.loads(line)))
        except (ValueError, KeyError, TypeError) as exc:
            raise ValueError(f"line {lineno}: {exc}") from exc
    return out


def write_trajectories(trajectories: Iterable[Trajectory], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for t in trajectories:
            fh.write(json.dumps(t.to_json()) + "\n")
