"""Macro-action discovery by compressing trajectories of solved tasks."""

from macrozip.core import (
    Codebook,
    CodeEntry,
    ExtendedActionSet,
    Macro,
    MacroDistribution,
    Trajectory,
    macro_equal_discrete,
    normalize_counts,
)

__all__ = [
    "Codebook",
    "CodeEntry",
    "ExtendedActionSet",
    "Macro",
    "MacroDistribution",
    "Trajectory",
    "macro_equal_discrete",
    "normalize_counts",
]

__version__ = "0.1.0"
