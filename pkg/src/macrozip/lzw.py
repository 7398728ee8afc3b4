"""LZW codebook growth over trajectory corpora."""

from __future__ import annotations

import csv
import io
import math
from collections.abc import Sequence
from dataclasses import dataclass, field

from macrozip.core import Codebook, CodeEntry, MacroDistribution, Trajectory, normalize_counts


def _seq(t: Trajectory | Sequence) -> tuple:
    return t.actions if isinstance(t, Trajectory) else tuple(t)


def min_b_limit(alphabet_size: int) -> int:
    return max(1, math.ceil(math.log2(alphabet_size)))


@dataclass
class LzwCodebook:
    """Primitives first, then grown entries in the order they were added."""

    b_limit: int
    entries: list[tuple]
    alphabet_size: int
    emissions: list[int] = field(default_factory=list)
    _index: dict = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        if not self._index:
            self._index = {e: i for i, e in enumerate(self.entries)}

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, symbol: tuple) -> bool:
        return symbol in self._index

    def index(self, symbol: tuple) -> int:
        return self._index[symbol]

    @property
    def capacity(self) -> int:
        return 2**self.b_limit

    @property
    def max_length(self) -> int:
        return max(len(e) for e in self.entries)

    @property
    def grown(self) -> list[tuple]:
        return self.entries[self.alphabet_size :]

    def expand(self, codes: Sequence[int]) -> list:
        out: list = []
        for c in codes:
            out.extend(self.entries[c])
        return out

    def to_codebook(self, probs: MacroDistribution | None = None) -> Codebook:
        entries = []
        for i, sym in enumerate(self.entries):
            p = probs.get(sym, 0.0) if probs is not None else 0.0
            entries.append(
                CodeEntry(symbol=sym, code=format(i, f"0{self.b_limit}b"), prob=p, primitive=i < self.alphabet_size)
            )
        return Codebook(kind="lzw", entries=tuple(entries), b_limit=self.b_limit)


def lzw_build(
    trajectories: Sequence[Trajectory | Sequence[int]], b_limit: int, alphabet_size: int | None = None
) -> LzwCodebook:
    """Grow a codebook with standard LZW, one working string per trajectory.

    Growth stops silently once ``2 ** b_limit`` entries exist. Emitted codes
    are kept on ``emissions`` for round-trip checks.
    """
    if alphabet_size is None:
        alphabet_size = 1 + max((a for t in trajectories for a in _seq(t)), default=0)
    if 2**b_limit < alphabet_size:
        raise ValueError("codebook capacity below alphabet")
    entries: list[tuple] = [(a,) for a in range(alphabet_size)]
    index = {e: i for i, e in enumerate(entries)}
    cap = 2**b_limit
    emissions: list[int] = []
    for t in trajectories:
        w: tuple = ()
        for a in _seq(t):
            if not 0 <= a < alphabet_size:
                raise ValueError(f"action {a} outside alphabet of size {alphabet_size}")
            wa = w + (a,)
            if wa in index:
                w = wa
                continue
            emissions.append(index[w])
            if len(entries) < cap:
                index[wa] = len(entries)
                entries.append(wa)
            w = (a,)
        if w:
            emissions.append(index[w])
    return LzwCodebook(b_limit=b_limit, entries=entries, alphabet_size=alphabet_size, emissions=emissions, _index=index)


def greedy_parse(trajectory: Trajectory | Sequence[int], codebook: LzwCodebook) -> list[int]:
    """Longest-match parse with a fixed codebook; returns entry indices."""
    acts = _seq(trajectory)
    longest = codebook.max_length
    out = []
    i = 0
    n = len(acts)
    while i < n:
        for k in range(min(longest, n - i), 0, -1):
            j = codebook._index.get(acts[i : i + k])
            if j is not None:
                out.append(j)
                i += k
                break
        else:
            raise ValueError(f"action {acts[i]!r} not in codebook")
    return out


def lzw_parse_counts(trajectories: Sequence[Trajectory | Sequence[int]], codebook: LzwCodebook) -> dict[tuple, int]:
    """Match counts of every codebook entry under greedy parsing (zeros kept)."""
    counts = {e: 0 for e in codebook.entries}
    for t in trajectories:
        for j in greedy_parse(t, codebook):
            counts[codebook.entries[j]] += 1
    return counts


def lzw_encoded_bits(trajectories: Sequence[Trajectory | Sequence[int]], codebook: LzwCodebook) -> int:
    """Greedy-parse symbol count times the fixed code width."""
    return sum(len(greedy_parse(t, codebook)) for t in trajectories) * codebook.b_limit


def lzw_objective(
    trajectories: Sequence[Trajectory | Sequence[int]],
    b_limit: int,
    lam: float = 2.0,
    alphabet_size: int | None = None,
    codebook: LzwCodebook | None = None,
) -> float:
    if lam <= 0:
        raise ValueError("lambda must be > 0")
    if not trajectories:
        raise ValueError("no data")
    if codebook is None:
        codebook = lzw_build(trajectories, b_limit, alphabet_size)
    return lzw_encoded_bits(trajectories, codebook) / len(trajectories) + lam**b_limit


@dataclass
class LzwSearchResult:
    b_limit: int
    codebook: LzwCodebook
    macros: list[tuple]
    distribution: MacroDistribution
    objective_value: float
    report: list[dict] = field(default_factory=list)

    def to_codebook(self) -> Codebook:
        return self.codebook.to_codebook(self.distribution)

    def report_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=["b_limit", "mean_bits", "objective"], lineterminator="\n")
        writer.writeheader()
        writer.writerows(self.report)
        return buf.getvalue()


def search_b_limit(
    trajectories: Sequence[Trajectory | Sequence[int]],
    b_max: int,
    lam: float = 2.0,
    alphabet_size: int | None = None,
) -> LzwSearchResult:
    """Sweep code widths from the smallest feasible one; ties prefer fewer bits.

    Macros are all codebook entries, length-1 included; the distribution is
    keyed by entry tuple and built from greedy match counts.
    """
    if alphabet_size is None:
        alphabet_size = 1 + max((a for t in trajectories for a in _seq(t)), default=0)
    b_min = min_b_limit(alphabet_size)
    if b_max < b_min:
        raise ValueError(f"b_max must be >= {b_min} for an alphabet of {alphabet_size}")
    best = None
    rows = []
    for b in range(b_min, b_max + 1):
        book = lzw_build(trajectories, b, alphabet_size)
        mean_bits = lzw_encoded_bits(trajectories, book) / len(trajectories)
        objective = mean_bits + lam**b
        rows.append({"b_limit": b, "mean_bits": mean_bits, "objective": objective})
        if best is None or objective < best[0]:
            best = (objective, b, book)
    objective, b, book = best
    dist = normalize_counts(lzw_parse_counts(trajectories, book))
    return LzwSearchResult(
        b_limit=b, codebook=book, macros=list(book.entries), distribution=dist, objective_value=objective, report=rows
    )
