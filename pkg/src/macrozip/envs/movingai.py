"""MovingAI ``.map`` grid files.

Header: ``type octile``, ``height H``, ``width W``, ``map``, then H rows of
W glyphs. ``.`` and ``G`` are passable; ``@ O T W S`` are blocked.
"""

from __future__ import annotations

import random
from collections.abc import Sequence
from pathlib import Path

PASSABLE = frozenset(".G")
BLOCKED = frozenset("@OTWS")

Grid = list[list[bool]]


class MapParseError(ValueError):
    def __init__(self, lineno: int, msg: str):
        super().__init__(f"line {lineno}: {msg}")
        self.lineno = lineno


def _header_value(line: str, key: str, lineno: int) -> str:
    parts = line.split()
    if len(parts) != 2 or parts[0] != key:
        raise MapParseError(lineno, f"expected '{key} <value>', got {line!r}")
    return parts[1]


def _header_int(line: str, key: str, lineno: int) -> int:
    raw = _header_value(line, key, lineno)
    try:
        value = int(raw)
    except ValueError:
        raise MapParseError(lineno, f"{key} must be an integer, got {raw!r}") from None
    if value < 1:
        raise MapParseError(lineno, f"{key} must be positive")
    return value


def load_map(text: str) -> Grid:
    """Parse map text into ``grid[y][x]`` booleans (True = passable)."""
    lines = text.splitlines()
    if len(lines) < 4:
        raise MapParseError(len(lines) + 1, "truncated header")
    _header_value(lines[0], "type", 1)
    height = _header_int(lines[1], "height", 2)
    width = _header_int(lines[2], "width", 3)
    if lines[3].strip() != "map":
        raise MapParseError(4, f"expected 'map', got {lines[3]!r}")
    rows = lines[4:]
    while rows and not rows[-1].strip():
        rows.pop()
    if len(rows) != height:
        raise MapParseError(5 + min(len(rows), height), f"expected {height} rows, found {len(rows)}")
    grid: Grid = []
    for y, row in enumerate(rows):
        lineno = 5 + y
        row = row.rstrip("\r")
        if len(row) != width:
            raise MapParseError(lineno, f"expected {width} glyphs, found {len(row)}")
        cells = []
        for ch in row:
            if ch in PASSABLE:
                cells.append(True)
            elif ch in BLOCKED:
                cells.append(False)
            else:
                raise MapParseError(lineno, f"unknown glyph {ch!r}")
        grid.append(cells)
    return grid


def read_map(path: str | Path) -> Grid:
    return load_map(Path(path).read_text(encoding="utf-8"))


def dump_map(grid: Sequence[Sequence[bool]]) -> str:
    height = len(grid)
    width = len(grid[0]) if height else 0
    lines = ["type octile", f"height {height}", f"width {width}", "map"]
    lines += ["".join("." if c else "@" for c in row) for row in grid]
    return "\n".join(lines) + "\n"


def generate_maze_map(
    width: int, height: int, seed: int, pitch: int = 3, loop_fraction: float = 0.1
) -> Grid:
    """Synthetic corridor maze in the spirit of game maps.

    Junction cells sit every ``pitch`` cells and are joined by straight
    one-wide corridors carved by a randomized depth-first search; a fraction
    of the remaining walls between junctions is knocked out to add loops.
    """
    if pitch < 2:
        raise ValueError("pitch must be >= 2")
    cols = (width - 1) // pitch + 1
    rows = (height - 1) // pitch + 1
    if cols * rows < 2:
        raise ValueError("map too small for a maze")
    rng = random.Random(seed)
    grid = [[False] * width for _ in range(height)]

    def carve(c0: tuple[int, int], c1: tuple[int, int]) -> None:
        (x0, y0), (x1, y1) = c0, c1
        for k in range(pitch + 1):
            grid[y0 * pitch + (y1 - y0) * k][x0 * pitch + (x1 - x0) * k] = True

    def neighbours(c: tuple[int, int]) -> list[tuple[int, int]]:
        x, y = c
        out = []
        for dx, dy in ((1, 0), (0, 1), (-1, 0), (0, -1)):
            nx, ny = x + dx, y + dy
            if 0 <= nx < cols and 0 <= ny < rows:
                out.append((nx, ny))
        return out

    start = (rng.randrange(cols), rng.randrange(rows))
    grid[start[1] * pitch][start[0] * pitch] = True
    seen = {start}
    stack = [start]
    edges = set()
    while stack:
        cur = stack[-1]
        fresh = [n for n in neighbours(cur) if n not in seen]
        if not fresh:
            stack.pop()
            continue
        nxt = rng.choice(fresh)
        carve(cur, nxt)
        edges.add(frozenset((cur, nxt)))
        seen.add(nxt)
        stack.append(nxt)

    walls = sorted(
        {frozenset((c, n)) for c in seen for n in neighbours(c)} - edges,
        key=lambda e: sorted(e),
    )
    for e in walls:
        if rng.random() < loop_fraction:
            carve(*sorted(e))
    return grid
