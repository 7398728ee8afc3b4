"""DTW equivalence and online clustering of continuous action windows."""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from macrozip.core import Macro, Trajectory


def _as_2d(s) -> np.ndarray:
    arr = np.asarray(s, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    return arr


def dtw_distance(s1, s2, band: int | None = None) -> float:
    """Classic DTW with Euclidean local cost and match/insert/delete steps.

    ``band`` optionally restricts the warping path to ``|i - j| <= band``.
    """
    a = _as_2d(s1)
    b = _as_2d(s2)
    if len(a) == 0 or len(b) == 0:
        raise ValueError("empty signal")
    if a.shape[1] != b.shape[1]:
        raise ValueError("signals have different action dimensions")
    local = np.sqrt(((a[:, None, :] - b[None, :, :]) ** 2).sum(axis=2)).tolist()
    n, m = len(a), len(b)
    if band is not None:
        band = max(band, abs(n - m))
    inf = math.inf
    prev = [inf] * (m + 1)
    prev[0] = 0.0
    for i in range(1, n + 1):
        cur = [inf] * (m + 1)
        row = local[i - 1]
        lo, hi = 1, m
        if band is not None:
            lo, hi = max(1, i - band), min(m, i + band)
        for j in range(lo, hi + 1):
            best = prev[j - 1]
            if prev[j] < best:
                best = prev[j]
            if cur[j - 1] < best:
                best = cur[j - 1]
            cur[j] = row[j - 1] + best
        prev = cur
    return float(prev[m])


@dataclass
class Cluster:
    id: int
    count: int
    total: np.ndarray

    @property
    def mean(self) -> np.ndarray:
        return self.total / self.count


@dataclass
class ClusterRegistry:
    """Online DTW clusters; each keeps the running sum so the mean stays exact."""

    alpha: float
    window_len: int
    clusters: list[Cluster] = field(default_factory=list)
    band: int | None = None

    def __post_init__(self) -> None:
        if not self.alpha > 0:
            raise ValueError("alpha must be > 0")
        if self.window_len < 1:
            raise ValueError("window_len must be >= 1")

    def __len__(self) -> int:
        return len(self.clusters)

    def mean_macro(self, cluster_id: int, dt: float | None = None) -> Macro:
        mean = self.clusters[cluster_id].mean
        return Macro(actions=tuple(tuple(float(x) for x in row) for row in mean), id=cluster_id, dt=dt)

    def to_json(self) -> dict:
        return {
            "alpha": self.alpha,
            "window_len": self.window_len,
            "clusters": [
                {"id": c.id, "count": c.count, "mean": c.mean.tolist()} for c in self.clusters
            ],
        }


def assign_cluster(candidate, registry: ClusterRegistry) -> tuple[int, bool]:
    """Add ``candidate`` to the nearest cluster under ``alpha``, or open a new one."""
    cand = _as_2d(candidate)
    if len(cand) != registry.window_len:
        raise ValueError("window length mismatch")
    best_id, best_d = -1, math.inf
    for c in registry.clusters:
        d = dtw_distance(cand, c.mean, registry.band)
        if d < best_d:
            best_id, best_d = c.id, d
    if best_d < registry.alpha:
        c = registry.clusters[best_id]
        c.count += 1
        c.total = c.total + cand
        return best_id, False
    new_id = len(registry.clusters)
    registry.clusters.append(Cluster(id=new_id, count=1, total=cand.copy()))
    return new_id, True


def window_length(duration: float, dt: float) -> int:
    # guard against 5.0 / 1.0 landing a hair above an integer
    return max(1, math.ceil(duration / dt - 1e-9))


def symbolize(
    trajectories: Sequence[Trajectory],
    duration: float,
    alpha: float,
    registry: ClusterRegistry | None = None,
) -> tuple[list[Trajectory], ClusterRegistry]:
    """Cut continuous trajectories into non-overlapping windows and label each with its cluster id."""
    dts = {t.dt for t in trajectories}
    if len(dts) > 1:
        raise ValueError("heterogeneous sampling")
    dt = dts.pop() if dts else 1.0
    if dt is None:
        raise ValueError("symbolize needs continuous trajectories")
    if duration < dt:
        raise ValueError("window duration shorter than dt")
    wlen = window_length(duration, dt)
    if registry is None:
        registry = ClusterRegistry(alpha=alpha, window_len=wlen)
    elif registry.window_len != wlen:
        raise ValueError("window length mismatch")
    out = []
    for t in trajectories:
        acts = _as_2d(t.actions) if len(t) else np.zeros((0, 1))
        symbols = []
        for k in range(len(acts) // wlen):
            cid, _ = assign_cluster(acts[k * wlen : (k + 1) * wlen], registry)
            symbols.append(cid)
        out.append(Trajectory(actions=tuple(symbols), task_id=t.task_id))
    return out, registry


def expand_symbols(symbols: Sequence[int], registry: ClusterRegistry) -> list[tuple]:
    """Concatenate the mean macros of a symbol sequence back into continuous actions."""
    out: list[tuple] = []
    for s in symbols:
        out.extend(tuple(float(x) for x in row) for row in registry.clusters[s].mean)
    return out
