"""Closed-form cost bounds for both codecs and checks of measured values against them."""

from __future__ import annotations

import json
import math
from collections.abc import Sequence
from dataclasses import asdict, dataclass, field
from fractions import Fraction

from macrozip.core import Trajectory
from macrozip.huffman import HuffmanSearchResult, huffman_code_lengths, min_bits_encoding
from macrozip.lzw import LzwCodebook, lzw_encoded_bits

GOLDEN = (1 + math.sqrt(5)) / 2
GUARD = 1e-12

PREPROCESSING = "preprocessing_steps"
HUFFMAN_BITS = "huffman_bits"
LZW_BITS = "lzw_bits"
HUFFMAN_DP = "huffman_dp_vs_slots"

STEP_CONVENTION = "window lengths l_min..l_max-1 (l_delta of them) are counted"


@dataclass
class BoundReport:
    theorem: str
    bound: float | None
    measured: float | None
    holds: bool | None
    inputs: dict = field(default_factory=dict)
    note: str = ""

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, obj: dict) -> "BoundReport":
        return cls(**obj)


def preprocessing_steps(lengths: Sequence[int], l_min: int, l_max: int) -> tuple[int, int]:
    """Window-extraction step count and its ``l_delta * |T| * S`` bound.

    With ``l_delta = 0`` the single length ``l_min`` is counted and the bound
    degenerates to 0.
    """
    if l_min > l_max:
        raise ValueError("need l_min <= l_max")
    if not lengths:
        return 0, 0
    l_delta = l_max - l_min
    span = range(l_min, l_max) if l_delta else range(l_min, l_min + 1)
    measured = sum(max(0, n - l) for l in span for n in lengths)
    s = max(0, max(n - l_min for n in lengths))
    return measured, l_delta * len(lengths) * s


def huffman_bit_bound(probs: Sequence[float], lengths: Sequence[int], l: int) -> int:
    """``c * min(floor(log_phi((phi + 1) / (phi p1 + p2))), m - 1)`` with ``c = ceil(sum|tau| / l)``."""
    m = len(probs)
    if m <= 1:
        raise ValueError("theorem requires m > 1")
    p = sorted(probs)
    c = -(-sum(lengths) // l)
    depth = math.log((GOLDEN + 1) / (GOLDEN * p[0] + p[1])) / math.log(GOLDEN)
    return c * min(math.floor(depth + GUARD), m - 1)


def lzw_depth_index(n_symbols: int, alphabet: int) -> int:
    """``ceil(log_|A|(1 - N (1 - |A|) / |A|))`` evaluated exactly."""
    arg = 1 - Fraction(n_symbols * (1 - alphabet), alphabet)
    if arg <= 0:
        raise ValueError("invalid N/|A| combination")
    # arg >= 1 whenever N >= 1, so the smallest i with |A|**i >= arg is the ceiling
    i = 0
    while alphabet**i < arg:
        i += 1
    return i


def lzw_bit_bound(n_symbols: int, alphabet: int, lengths: Sequence[int], b_limit: int) -> int:
    if not n_symbols >= alphabet >= 2:
        raise ValueError("need N >= |A| >= 2")
    i = lzw_depth_index(n_symbols, alphabet)
    return (sum(lengths) - sum(alphabet**j for j in range(1, i))) * b_limit


def huffman_slot_bits(probs: Sequence[float], lengths: Sequence[int], l: int) -> int:
    """Worst-case slot-model bits: every one of the ``c`` slots pays the longest macro code."""
    c = -(-sum(lengths) // l)
    return c * max(huffman_code_lengths(list(probs)))


def verify_bounds(
    corpus: Sequence[Trajectory | Sequence[int]],
    huffman: HuffmanSearchResult | None = None,
    lzw: LzwCodebook | None = None,
    l_range: tuple[int, int] | None = None,
    alphabet_size: int | None = None,
) -> list[BoundReport]:
    """Compare measured costs with the three closed-form bounds."""
    lengths = [len(t) for t in corpus]
    reports: list[BoundReport] = []

    if l_range is not None:
        l_min, l_max = l_range
        measured, bound = preprocessing_steps(lengths, l_min, l_max)
        note = STEP_CONVENTION
        if l_max == l_min:
            note = "degenerate range: l_delta = 0 so the bound is 0; " + note
        reports.append(
            BoundReport(
                PREPROCESSING,
                bound,
                measured,
                measured <= bound if l_max > l_min else False,
                {"l_min": l_min, "l_max": l_max, "trajectories": len(lengths)},
                note,
            )
        )

    if huffman is not None:
        probs = [huffman.distribution[m.id] for m in huffman.macros]
        inputs = {"m": len(probs), "l": huffman.best_l, "total_actions": sum(lengths)}
        if len(probs) <= 1:
            reports.append(BoundReport(HUFFMAN_BITS, None, None, None, inputs, "skipped: theorem requires m > 1"))
        else:
            bound = huffman_bit_bound(probs, lengths, huffman.best_l)
            slots = huffman_slot_bits(probs, lengths, huffman.best_l)
            reports.append(BoundReport(HUFFMAN_BITS, bound, slots, slots <= bound, inputs, "slot model"))
            dp = sum(min_bits_encoding(t, huffman.codebook)[0] for t in corpus)
            reports.append(
                BoundReport(HUFFMAN_DP, slots, dp, dp <= slots, inputs, "informational: DP encoder vs slot model")
            )

    if lzw is not None:
        alphabet = alphabet_size or lzw.alphabet_size
        bound = lzw_bit_bound(len(lzw), alphabet, lengths, lzw.b_limit)
        measured = lzw_encoded_bits(corpus, lzw)
        reports.append(
            BoundReport(
                LZW_BITS,
                bound,
                measured,
                measured <= bound,
                {"N": len(lzw), "A": alphabet, "b_limit": lzw.b_limit, "total_actions": sum(lengths)},
                "",
            )
        )
    return reports


def reports_to_json(reports: Sequence[BoundReport]) -> str:
    return json.dumps([r.to_json() for r in reports], indent=2)


def reports_from_json(text: str) -> list[BoundReport]:
    return [BoundReport.from_json(o) for o in json.loads(text)]


def format_table(reports: Sequence[BoundReport]) -> str:
    lines = [f"{'check':<22}{'measured':>12}{'bound':>12}  result"]
    for r in reports:
        status = "skip" if r.holds is None else ("PASS" if r.holds else "FAIL")
        measured = "-" if r.measured is None else f"{r.measured:g}"
        bound = "-" if r.bound is None else f"{r.bound:g}"
        lines.append(f"{r.theorem:<22}{measured:>12}{bound:>12}  {status}")
    return "\n".join(lines)
