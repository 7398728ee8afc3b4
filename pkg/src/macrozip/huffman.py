"""Fixed-length macro extraction with Huffman codebooks.

Candidates are overlapping length-``l`` windows over the corpus. The ``n``
most frequent become macros, get a Huffman code, and primitives are grafted
below the deepest macro so their codes are always longer. The (n, l) pair
minimising mean DP-encoded bits plus ``lam ** c_max`` wins.
"""

from __future__ import annotations

import csv
import heapq
import io
import itertools
import math
from collections import Counter
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field

from macrozip.core import (
    Codebook,
    CodeEntry,
    Macro,
    MacroDistribution,
    Trajectory,
    normalize_counts,
)


def _seq(t: Trajectory | Sequence) -> tuple:
    return t.actions if isinstance(t, Trajectory) else tuple(t)


@dataclass(frozen=True)
class CandidateTable:
    length: int
    windows: dict[tuple, int]
    total_windows: int

    def __len__(self) -> int:
        return len(self.windows)


def enumerate_candidates(trajectories: Sequence[Trajectory | Sequence[int]], l: int) -> CandidateTable:
    """Count every overlapping length-``l`` window of every trajectory."""
    if l < 1:
        raise ValueError("window length must be >= 1")
    if not trajectories:
        raise ValueError("no data")
    counts: Counter = Counter()
    total = 0
    for t in trajectories:
        if isinstance(t, Trajectory) and t.is_continuous:
            raise TypeError("continuous trajectories must be symbolized first")
        acts = _seq(t)
        n = len(acts) - l + 1
        for i in range(max(0, n)):
            counts[acts[i : i + l]] += 1
        total += max(0, n)
    return CandidateTable(length=l, windows=dict(counts), total_windows=total)


def top_n_macros(table: CandidateTable, n: int) -> tuple[list[Macro], MacroDistribution]:
    """Keep the ``n`` most frequent windows; ties go to the lexicographically smaller one."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if not table.windows:
        raise ValueError("no candidates")
    ranked = sorted(table.windows.items(), key=lambda kv: (-kv[1], kv[0]))[:n]
    macros = [Macro(actions=seq, id=i) for i, (seq, _) in enumerate(ranked)]
    dist = normalize_counts({i: c for i, (_, c) in enumerate(ranked)})
    return macros, dist


def huffman_code_lengths(probs: Sequence[float]) -> list[int]:
    """Code length of every symbol in a binary Huffman tree (a lone symbol gets 0)."""
    if not probs:
        raise ValueError("need at least one symbol")
    if len(probs) == 1:
        return [0]
    counter = itertools.count()
    heap = [(p, next(counter), [i]) for i, p in enumerate(probs)]
    heapq.heapify(heap)
    lengths = [0] * len(probs)
    while len(heap) > 1:
        p1, _, s1 = heapq.heappop(heap)
        p2, _, s2 = heapq.heappop(heap)
        for i in itertools.chain(s1, s2):
            lengths[i] += 1
        heapq.heappush(heap, (p1 + p2, next(counter), s1 + s2))
    return lengths


def canonical_codes(lengths: Sequence[int]) -> list[str]:
    """Canonical prefix code for the given lengths, symbols ordered by (length, index)."""
    order = sorted(range(len(lengths)), key=lambda i: (lengths[i], i))
    codes = [""] * len(lengths)
    code = 0
    prev = None
    for i in order:
        if prev is not None:
            code = (code + 1) << (lengths[i] - prev)
        elif lengths[i]:
            code = 0
        prev = lengths[i]
        codes[i] = format(code, f"0{lengths[i]}b") if lengths[i] else ""
    return codes


def build_huffman_codebook(
    macros: Sequence[Macro | tuple],
    probs: MacroDistribution | Sequence[float],
    primitives: Iterable[int],
) -> Codebook:
    """Huffman codebook over macros with primitives grafted strictly deeper.

    The deepest macro leaf ``c`` is split: the macro moves to ``c + "0"`` and
    the primitives fill a balanced subtree under ``c + "1"`` of depth at
    least one, so every primitive code is longer than every macro code.
    Primitives that are themselves length-1 macros are not duplicated.
    """
    if not macros:
        raise ValueError("need at least one macro")
    seqs = [m.actions if isinstance(m, Macro) else tuple(m) for m in macros]
    if isinstance(probs, MacroDistribution):
        ids = [m.id if isinstance(m, Macro) else i for i, m in enumerate(macros)]
        p = [probs[i] for i in ids]
    else:
        p = list(probs)
    if len(p) != len(seqs):
        raise ValueError("one probability per macro required")

    lengths = huffman_code_lengths(p)
    codes = canonical_codes(lengths)
    macro_set = set(seqs)
    prims = [(a,) for a in dict.fromkeys(primitives) if (a,) not in macro_set]

    entries = [CodeEntry(symbol=s, code=c, prob=q) for s, c, q in zip(seqs, codes, p)]
    if prims:
        deepest = max(range(len(seqs)), key=lambda i: (lengths[i], codes[i]))
        base = codes[deepest]
        entries[deepest] = CodeEntry(symbol=seqs[deepest], code=base + "0", prob=p[deepest])
        depth = max(1, math.ceil(math.log2(len(prims))))
        for j, s in enumerate(prims):
            entries.append(CodeEntry(symbol=s, code=base + "1" + format(j, f"0{depth}b"), primitive=True))
    elif len(seqs) == 1:
        entries[0] = CodeEntry(symbol=seqs[0], code="0", prob=p[0])
    return Codebook(kind="huffman", entries=tuple(entries))


def primitive_huffman_codebook(trajectories: Sequence[Trajectory | Sequence[int]], primitives: Iterable[int]) -> Codebook:
    """Optimal prefix code over primitives alone, from their corpus frequencies."""
    prims = list(dict.fromkeys(primitives))
    counts = Counter(a for t in trajectories for a in _seq(t))
    # unseen primitives still need a code
    weights = [counts.get(a, 0) + 1e-12 for a in prims]
    total = sum(weights)
    lengths = huffman_code_lengths([w / total for w in weights])
    if len(prims) == 1:
        lengths = [1]
    codes = canonical_codes(lengths)
    entries = tuple(
        CodeEntry(symbol=(a,), code=c, prob=w / total, primitive=True) for a, c, w in zip(prims, codes, weights)
    )
    return Codebook(kind="huffman", entries=entries)


def min_bits_encoding(trajectory: Trajectory | Sequence[int], codebook: Codebook) -> tuple[int, list[tuple]]:
    """Cheapest exact decomposition of a trajectory into codebook symbols.

    ``cost[i] = min_s |code(s)| + cost[i + len(s)]`` over symbols ``s``
    matching at ``i``, with ``cost[len] = 0``.
    """
    acts = _seq(trajectory)
    lengths = codebook.code_lengths
    by_len: dict[int, dict[tuple, int]] = {}
    for sym, bits in lengths.items():
        by_len.setdefault(len(sym), {})[sym] = bits
    sizes = sorted(by_len)

    n = len(acts)
    inf = math.inf
    cost = [inf] * (n + 1)
    choice: list[tuple | None] = [None] * (n + 1)
    cost[n] = 0
    for i in range(n - 1, -1, -1):
        best = inf
        pick = None
        for k in sizes:
            if i + k > n:
                break
            sym = acts[i : i + k]
            bits = by_len[k].get(sym)
            if bits is not None and bits + cost[i + k] < best:
                best = bits + cost[i + k]
                pick = sym
        cost[i] = best
        choice[i] = pick
    if cost[0] == inf:
        raise ValueError("uncoverable trajectory")
    parse = []
    i = 0
    while i < n:
        sym = choice[i]
        parse.append(sym)
        i += len(sym)
    return int(cost[0]), parse


def mean_encoded_bits(trajectories: Sequence[Trajectory | Sequence[int]], codebook: Codebook) -> float:
    return math.fsum(min_bits_encoding(t, codebook)[0] for t in trajectories) / len(trajectories)


def huffman_objective(codebook: Codebook, trajectories: Sequence[Trajectory | Sequence[int]], lam: float) -> float:
    """Mean DP-encoded bits plus ``lam ** c_max`` (longest macro code)."""
    if lam <= 0:
        raise ValueError("lambda must be > 0")
    if not trajectories:
        raise ValueError("no data")
    return mean_encoded_bits(trajectories, codebook) + lam**codebook.max_macro_code_length


@dataclass
class HuffmanSearchResult:
    best_n: int
    best_l: int
    macros: list[Macro]
    distribution: MacroDistribution
    codebook: Codebook
    objective_value: float
    report: list[dict] = field(default_factory=list)

    def report_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=["n", "l", "mean_bits", "c_max", "objective"], lineterminator="\n")
        writer.writeheader()
        writer.writerows(self.report)
        return buf.getvalue()


def search_huffman(
    trajectories: Sequence[Trajectory | Sequence[int]],
    n_max: int,
    l_min: int,
    l_max: int,
    lam: float = 2.0,
    primitives: Iterable[int] | None = None,
) -> HuffmanSearchResult:
    """Grid search over macro count and length; ties prefer smaller l, then smaller n."""
    if not 1 <= l_min <= l_max:
        raise ValueError("need 1 <= l_min <= l_max")
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    if primitives is None:
        primitives = sorted({a for t in trajectories for a in _seq(t)})
    primitives = list(primitives)

    best: HuffmanSearchResult | None = None
    rows: list[dict] = []
    for l in range(l_min, l_max + 1):
        table = enumerate_candidates(trajectories, l)
        if not table.windows:
            continue
        for n in range(1, min(n_max, len(table)) + 1):
            macros, dist = top_n_macros(table, n)
            codebook = build_huffman_codebook(macros, dist, primitives)
            mean_bits = mean_encoded_bits(trajectories, codebook)
            c_max = codebook.max_macro_code_length
            objective = mean_bits + lam**c_max
            rows.append({"n": n, "l": l, "mean_bits": mean_bits, "c_max": c_max, "objective": objective})
            if best is None or objective < best.objective_value:
                best = HuffmanSearchResult(n, l, macros, dist, codebook, objective)
    if best is None:
        raise ValueError("no macros found")
    best.report = rows
    return best
