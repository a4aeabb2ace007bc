"""Spiral test (test 5): DTW against four adult templates.

A child's stylus trace is normalised into the template canvas and aligned with
each template by dynamic time warping. With ``d`` the accumulated Euclidean
cost of the optimal alignment and ``k`` its number of aligned pairs, the
per-template quality is ``exp(-d / k) * 100``; the child is credited with the
best of the four.
"""

from __future__ import annotations

import enum
import json
import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from numba import njit

from .errors import ConfigMismatch, DegenerateTrace, EmptySequence, SchemaError
from .model import StylusStroke, TestRecord
from .result import QScore

CANVAS = (100.0, 100.0)

# Template coordinates sit on this dyadic grid so that normalising a template
# reproduces it bit for bit.
_GRID = 1024.0


class TemplateId(str, enum.Enum):
    INNER_OUT_BLACK = "inner_out_black"
    INNER_OUT_WHITE = "inner_out_white"
    OUTER_IN_BLACK = "outer_in_black"
    OUTER_IN_WHITE = "outer_in_white"


@dataclass(frozen=True)
class SpiralTemplate:
    id: TemplateId
    points: np.ndarray  # (n, 2) float64, canvas units
    canvas: tuple[float, float] = CANVAS

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise SchemaError(f"template {self.id}: points must be (n, 2)")
        if len(pts) < 16:
            raise SchemaError(f"template {self.id}: needs >= 16 points, got {len(pts)}")
        if not np.all(np.isfinite(pts)):
            raise SchemaError(f"template {self.id}: non-finite coordinates")
        if np.any(np.all(pts[1:] == pts[:-1], axis=1)):
            raise SchemaError(f"template {self.id}: consecutive points must differ")
        w, h = self.canvas
        if pts.min() < 0 or np.any(pts[:, 0] > w) or np.any(pts[:, 1] > h):
            raise SchemaError(f"template {self.id}: points leave the {w}x{h} canvas")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)


@dataclass(frozen=True)
class DtwResult:
    d: float
    k: int
    template_id: TemplateId | None = None


# --- DTW -------------------------------------------------------------------------

# Predecessor codes in the pointer matrix.
_DIAG, _UP, _LEFT = 0, 1, 2


@njit(cache=True, nogil=True)
def _dtw_tables(a, b):
    n, m = a.shape[0], b.shape[0]
    acc = np.empty((n, m))
    length = np.empty((n, m), dtype=np.int64)
    ptr = np.full((n, m), -1, dtype=np.int8)
    for i in range(n):
        for j in range(m):
            dx = a[i, 0] - b[j, 0]
            dy = a[i, 1] - b[j, 1]
            cost = math.sqrt(dx * dx + dy * dy)
            if i == 0 and j == 0:
                acc[i, j] = cost
                length[i, j] = 1
                continue
            best = np.inf
            if i > 0 and j > 0:
                best = acc[i - 1, j - 1]
            if i > 0 and acc[i - 1, j] < best:
                best = acc[i - 1, j]
            if j > 0 and acc[i, j - 1] < best:
                best = acc[i, j - 1]
            # diagonal wins any tie; between the two straight steps the shorter path wins
            if i > 0 and j > 0 and acc[i - 1, j - 1] == best:
                p = _DIAG
                prev = length[i - 1, j - 1]
            else:
                up = i > 0 and acc[i - 1, j] == best
                left = j > 0 and acc[i, j - 1] == best
                if up and (not left or length[i - 1, j] <= length[i, j - 1]):
                    p = _UP
                    prev = length[i - 1, j]
                else:
                    p = _LEFT
                    prev = length[i, j - 1]
            acc[i, j] = cost + best
            length[i, j] = prev + 1
            ptr[i, j] = p
    return acc, length, ptr


def _as_points(seq, name: str) -> np.ndarray:
    arr = np.asarray(seq, dtype=np.float64)
    if arr.size == 0:
        raise EmptySequence(f"{name} is empty")
    arr = arr.reshape(-1, 2)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite coordinates")
    return np.ascontiguousarray(arr)


def dtw(a: Sequence[Sequence[float]], b: Sequence[Sequence[float]]) -> DtwResult:
    """Full-matrix DTW with Euclidean local cost and steps right, down, diagonal."""
    acc, length, _ = _dtw_tables(_as_points(a, "a"), _as_points(b, "b"))
    return DtwResult(float(acc[-1, -1]), int(length[-1, -1]))


def dtw_path(a, b) -> list[tuple[int, int]]:
    """Backtrace of the optimal alignment, from (0, 0) to the last cell."""
    _, _, ptr = _dtw_tables(_as_points(a, "a"), _as_points(b, "b"))
    i, j = ptr.shape[0] - 1, ptr.shape[1] - 1
    path = [(i, j)]
    while (i, j) != (0, 0):
        p = ptr[i, j]
        if p == _DIAG:
            i, j = i - 1, j - 1
        elif p == _UP:
            i -= 1
        else:
            j -= 1
        path.append((i, j))
    path.reverse()
    return path


def spiral_quality(d: float, k: int) -> float:
    return math.exp(-d / k) * 100


# --- trace normalisation ---------------------------------------------------------


def fit_to_canvas(points: np.ndarray, canvas: tuple[float, float] = CANVAS) -> np.ndarray:
    """Map the points' bounding box into the canvas, keeping aspect ratio, centred."""
    pts = np.asarray(points, dtype=np.float64)
    lo = pts.min(axis=0)
    extent = pts.max(axis=0) - lo
    if not np.any(extent > 0):
        raise DegenerateTrace("all trace samples coincide")
    cw, ch = canvas
    sx = cw / extent[0] if extent[0] > 0 else math.inf
    sy = ch / extent[1] if extent[1] > 0 else math.inf
    scale = min(sx, sy)
    offset = (np.array([cw, ch]) - extent * scale) / 2
    return (pts - lo) * scale + offset


def _dedupe(pts: np.ndarray) -> np.ndarray:
    keep = np.ones(len(pts), dtype=bool)
    keep[1:] = np.any(pts[1:] != pts[:-1], axis=1)
    return pts[keep]


def normalize_trace(
    strokes: Iterable[StylusStroke], canvas: tuple[float, float] = CANVAS
) -> np.ndarray:
    """Concatenate strokes in time order and fit them into the template canvas."""
    ordered = sorted(strokes, key=lambda s: s.samples[0].t)
    raw = [(s.x, s.y) for st in ordered for s in st.samples]
    if not raw:
        raise EmptySequence("no stylus samples recorded")
    return _dedupe(fit_to_canvas(np.array(raw), canvas))


# --- templates ---------------------------------------------------------------------


def archimedean_template(template_id: TemplateId | str, n_points: int = 128, turns: float = 3.0) -> SpiralTemplate:
    """Synthetic stand-in for an adult template: an Archimedean spiral ``r = b*theta``.

    The "white" variants run along the gap between the black arms (half a
    pitch further out). ``outer_in`` variants are the reversed traversal.
    """
    template_id = TemplateId(template_id)
    theta = np.linspace(0.0, 2 * math.pi * turns, n_points)
    phase = math.pi if template_id.value.endswith("white") else 0.0
    r = theta + phase
    pts = np.column_stack([r * np.cos(theta), r * np.sin(theta)])
    if template_id.value.startswith("outer_in"):
        pts = pts[::-1]
    pts = np.round(fit_to_canvas(pts) * _GRID) / _GRID
    # re-centre the minor axis exactly so the fit is a fixed point
    for axis in range(2):
        pts[:, axis] += (CANVAS[axis] - pts[:, axis].min() - pts[:, axis].max()) / 2
    return SpiralTemplate(template_id, pts)


def default_templates() -> list[SpiralTemplate]:
    return [archimedean_template(t) for t in TemplateId]


def template_to_dict(template: SpiralTemplate) -> dict:
    return {
        "id": template.id.value,
        "canvas": list(template.canvas),
        "points": template.points.tolist(),
    }


def template_from_dict(doc: dict) -> SpiralTemplate:
    try:
        return SpiralTemplate(
            TemplateId(doc["id"]),
            np.array(doc["points"], dtype=np.float64),
            tuple(float(v) for v in doc["canvas"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, SchemaError):
            raise
        raise SchemaError(f"malformed spiral template: {exc!r}") from None


def load_template_set(directory: str | os.PathLike) -> list[SpiralTemplate]:
    """Load the versioned set of exactly four templates from ``*.json`` files."""
    templates = []
    for path in sorted(Path(directory).glob("*.json")):
        with open(path, encoding="utf-8") as fh:
            templates.append(template_from_dict(json.load(fh)))
    ids = sorted(t.id.value for t in templates)
    if ids != sorted(t.value for t in TemplateId):
        raise SchemaError(f"{directory}: need one template per execution style, got {ids}")
    return sorted(templates, key=lambda t: t.id.value)


# --- scoring -----------------------------------------------------------------------


def q_spiral(record: TestRecord, templates: Sequence[SpiralTemplate]) -> QScore:
    if record.test_id != 5:
        raise ConfigMismatch(f"q_spiral scores test 5, got test {record.test_id}")
    if not templates:
        raise SchemaError("no spiral templates supplied")
    components: dict = {"t_real": record.t_real, "n_strokes": len(record.strokes)}
    if not record.strokes:
        return QScore(5, 0.0, False, components)
    per_template = {}
    best: tuple[float, str, DtwResult] | None = None
    for tpl in templates:
        try:
            trace = normalize_trace(record.strokes, tpl.canvas)
        except DegenerateTrace:
            components["degenerate"] = True
            return QScore(5, 0.0, False, components)
        res = dtw(trace, tpl.points)
        q_i = spiral_quality(res.d, res.k)
        per_template[tpl.id.value] = q_i
        key = (-q_i, tpl.id.value)
        if best is None or key < (-best[0], best[1]):
            best = (q_i, tpl.id.value, res)
    q, tid, res = best
    components.update(
        template_id=tid,
        d=res.d,
        k=res.k,
        n_points=len(trace),
        per_template=dict(sorted(per_template.items())),
    )
    return QScore(5, q, True, components)
