"""Percentile growth charts over educational levels and trajectory placement."""

from __future__ import annotations

import enum
import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .errors import EmptyInput, RangeError
from .model import SessionMeta
from .result import QScore

DEFAULT_PERCENTILES = (10.0, 50.0, 90.0)
DEFAULT_MIN_N = 5


class Band(str, enum.Enum):
    BELOW_LOW = "below_low"
    MID = "mid"
    ABOVE_HIGH = "above_high"


def percentile(values: Sequence[float], p: float) -> float:
    """Linear interpolation between closest ranks (rank = p/100 * (n - 1))."""
    if len(values) == 0:
        raise EmptyInput("percentile of an empty list")
    if not 0 <= p <= 100:
        raise RangeError(f"percentile must be in [0, 100], got {p}")
    v = sorted(values)
    rank = p / 100 * (len(v) - 1)
    lo = math.floor(rank)
    if lo + 1 >= len(v):
        return float(v[-1])
    return v[lo] + (rank - lo) * (v[lo + 1] - v[lo])


@dataclass(frozen=True)
class GrowthChart:
    test_id: int
    percentiles: tuple[float, ...]
    curves: Mapping[float, tuple[tuple[int, float], ...]]
    sample_counts: Mapping[int, int]
    min_n: int = DEFAULT_MIN_N

    def value_at(self, p: float, level: int) -> float | None:
        for lvl, q in self.curves[p]:
            if lvl == level:
                return q
        return None

    @property
    def levels(self) -> list[int]:
        """Levels with emitted curve points."""
        return sorted({lvl for pts in self.curves.values() for lvl, _ in pts})


def latest_per_child(scores: Iterable[tuple[SessionMeta, QScore]]) -> list[tuple[SessionMeta, QScore]]:
    """Keep only each child's latest acquisition within every group."""
    latest: dict[tuple[str, int], tuple[SessionMeta, QScore]] = {}
    for meta, score in scores:
        key = (meta.child_id, meta.group.level)
        if key not in latest or meta.acquisition_id > latest[key][0].acquisition_id:
            latest[key] = (meta, score)
    return list(latest.values())


def build_chart(
    scores: Iterable[tuple[SessionMeta, QScore]],
    test_id: int,
    percentiles: Sequence[float] = DEFAULT_PERCENTILES,
    min_n: int = DEFAULT_MIN_N,
    dedupe: bool = False,
) -> GrowthChart:
    """Per-level percentile curves of Q for one test.

    Levels with fewer than ``min_n`` scores are counted but not charted.
    """
    pcts = tuple(sorted({float(p) for p in percentiles}))
    if not pcts:
        raise EmptyInput("no percentiles requested")
    for p in pcts:
        if not 0 <= p <= 100:
            raise RangeError(f"percentile must be in [0, 100], got {p}")
    rows = [(m, s) for m, s in scores if s.test_id == test_id]
    if dedupe:
        rows = latest_per_child(rows)
    if not rows:
        raise EmptyInput(f"no scores for test {test_id}")

    by_level: dict[int, list[float]] = defaultdict(list)
    for meta, score in rows:
        by_level[meta.group.level].append(score.q)

    curves: dict[float, list[tuple[int, float]]] = {p: [] for p in pcts}
    for level in sorted(by_level):
        values = by_level[level]
        if len(values) < min_n:
            continue
        for p in pcts:
            curves[p].append((level, percentile(values, p)))
    return GrowthChart(
        test_id=test_id,
        percentiles=pcts,
        curves={p: tuple(pts) for p, pts in curves.items()},
        sample_counts={lvl: len(v) for lvl, v in sorted(by_level.items())},
        min_n=min_n,
    )


@dataclass(frozen=True)
class TrajectoryPoint:
    acquisition_id: int
    group_level: int
    q: float
    percentile_band: Band | None  # None when the chart has no curve at this level


@dataclass(frozen=True)
class Trajectory:
    child_id: str
    points: tuple[TrajectoryPoint, ...]


def classify(q: float, low: float, high: float) -> Band:
    if q < low:
        return Band.BELOW_LOW
    if q > high:
        return Band.ABOVE_HIGH
    return Band.MID


def place_trajectory(
    child_scores: Iterable[tuple[SessionMeta, QScore]], chart: GrowthChart
) -> Trajectory:
    rows = [(m, s) for m, s in child_scores if s.test_id == chart.test_id]
    if not rows:
        raise EmptyInput(f"no scores for test {chart.test_id}")
    children = {m.child_id for m, _ in rows}
    if len(children) != 1:
        raise ValueError(f"scores belong to several children: {sorted(children)}")
    rows.sort(key=lambda r: r[0].acquisition_id)
    ids = [m.acquisition_id for m, _ in rows]
    if len(set(ids)) != len(ids):
        raise ValueError(f"duplicate acquisition ids {ids}")
    levels = [m.group.level for m, _ in rows]
    if levels != sorted(levels):
        raise ValueError(f"group level goes down across acquisitions: {levels}")

    low_p, high_p = chart.percentiles[0], chart.percentiles[-1]
    points = []
    for meta, score in rows:
        level = meta.group.level
        low = chart.value_at(low_p, level)
        high = chart.value_at(high_p, level)
        band = None if low is None or high is None else classify(score.q, low, high)
        points.append(TrajectoryPoint(meta.acquisition_id, level, score.q, band))
    return Trajectory(rows[0][0].child_id, tuple(points))
