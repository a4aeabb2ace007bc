"""Drawing test (test 6): colour the tree, stay inside the outline.

Strokes are rasterised with a round brush onto the region mask. The score is
the painted percentage of the tree interior (R0) minus a penalty for each of
the four outer bands R1..R4, proportional to how much of that band was
painted and capped at 10/20/30/40 points respectively. Negative totals clamp
to zero.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np
from numba import njit
from PIL import Image
from scipy import ndimage

from .errors import ConfigMismatch, DimensionMismatch, MaskInvariantError, SchemaError
from .model import StylusStroke, TestRecord
from .result import QScore

REGIONS = ("R0", "R1", "R2", "R3", "R4")
OUTSIDE = 0
# Pixel values of the indexed mask raster.
LABEL_CODES = {"R0": 10, "R1": 11, "R2": 12, "R3": 13, "R4": 14}

DEFAULT_BRUSH_RADIUS = 4.0
DEFAULT_MASK_SIZE = (512, 512)
DEFAULT_BAND_WIDTHS = (16, 16, 16, 16)


@dataclass(frozen=True)
class PenaltyCaps:
    caps: Mapping[str, float] = field(
        default_factory=lambda: {"R1": 10.0, "R2": 20.0, "R3": 30.0, "R4": 40.0}
    )

    def __post_init__(self) -> None:
        values = [self.caps[r] for r in REGIONS[1:]]
        if any(b <= a for a, b in zip(values, values[1:])) or values[0] <= 0:
            raise ValueError(f"penalty caps must be positive and strictly increasing: {values}")

    def __getitem__(self, region: str) -> float:
        return self.caps[region]


@dataclass(frozen=True)
class RegionMask:
    """Per-pixel region labels (``LABEL_CODES`` values, 0 outside), row-major."""

    labels: np.ndarray

    def __post_init__(self) -> None:
        labels = np.asarray(self.labels)
        if labels.ndim != 2:
            raise SchemaError(f"mask must be 2-D, got shape {labels.shape}")
        valid = np.isin(labels, [OUTSIDE, *LABEL_CODES.values()])
        if not valid.all():
            bad = sorted(set(np.unique(labels[~valid]).tolist()))
            raise SchemaError(f"mask has unknown label values {bad}")
        labels = labels.astype(np.uint8)
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        empty = [r for r in REGIONS if self.area[r] == 0]
        if empty:
            raise MaskInvariantError(f"mask regions {empty} are empty")

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @cached_property
    def area(self) -> dict[str, int]:
        counts = np.bincount(self.labels.ravel(), minlength=256)
        return {r: int(counts[code]) for r, code in LABEL_CODES.items()}


def load_mask(path: str | os.PathLike) -> RegionMask:
    """Read an 8-bit binary PGM (P5) region mask."""
    try:
        with Image.open(path) as img:
            if img.format != "PPM" or img.mode != "L":
                raise SchemaError(f"{path}: expected an 8-bit greyscale PGM, got {img.format}/{img.mode}")
            labels = np.array(img)
    except OSError as exc:
        raise SchemaError(f"{path}: cannot read mask ({exc})") from None
    return RegionMask(labels)


def save_mask(mask: RegionMask, path: str | os.PathLike) -> None:
    Image.fromarray(mask.labels, mode="L").save(path, format="PPM")


def band_labels(outline: np.ndarray, band_widths: Sequence[int] = DEFAULT_BAND_WIDTHS) -> np.ndarray:
    """Label raster with R1..R4 grown around a binary tree mask as chessboard-distance shells.

    No region invariants are checked; bands that do not fit are simply empty.
    """
    inside = np.asarray(outline, dtype=bool)
    if len(band_widths) != 4 or any(w < 1 for w in band_widths):
        raise ValueError(f"need four band widths >= 1, got {band_widths}")
    labels = np.zeros(inside.shape, dtype=np.uint8)
    if not inside.any():
        return labels
    dist = ndimage.distance_transform_cdt(~inside, metric="chessboard")
    labels[inside] = LABEL_CODES["R0"]
    lo = 0
    for region, width in zip(REGIONS[1:], band_widths):
        shell = (dist > lo) & (dist <= lo + width)
        labels[shell] = LABEL_CODES[region]
        lo += width
    return labels


def build_bands(outline: np.ndarray, band_widths: Sequence[int] = DEFAULT_BAND_WIDTHS) -> RegionMask:
    """:func:`band_labels` as a validated mask; any empty region raises MaskInvariantError."""
    return RegionMask(band_labels(outline, band_widths))


def tree_outline(size: tuple[int, int] = DEFAULT_MASK_SIZE) -> np.ndarray:
    """A stand-in tree: triangular canopy over a rectangular trunk, pixel-centre sampled."""
    w, h = size
    ys, xs = np.mgrid[0:h, 0:w] + 0.5
    sx, sy = w / 512, h / 512
    apex_y, base_y, half_base = 80 * sy, 330 * sy, 150 * sx
    cx = w / 2
    depth = np.clip((ys - apex_y) / (base_y - apex_y), 0, None)
    canopy = (ys >= apex_y) & (ys <= base_y) & (np.abs(xs - cx) <= depth * half_base)
    trunk = (np.abs(xs - cx) <= 30 * sx) & (ys > base_y) & (ys <= 440 * sy)
    return canopy | trunk


def default_tree_mask() -> RegionMask:
    return build_bands(tree_outline())


# --- rasterisation --------------------------------------------------------------------


@njit(cache=True, nogil=True)
def _stamp_segments(out, segs, radius):
    h, w = out.shape
    r2 = radius * radius
    for s in range(segs.shape[0]):
        x0, y0, x1, y1 = segs[s, 0], segs[s, 1], segs[s, 2], segs[s, 3]
        vx, vy = x1 - x0, y1 - y0
        len2 = vx * vx + vy * vy
        col_lo = max(int(np.floor(min(x0, x1) - radius - 0.5)), 0)
        col_hi = min(int(np.ceil(max(x0, x1) + radius - 0.5)), w - 1)
        row_lo = max(int(np.floor(min(y0, y1) - radius - 0.5)), 0)
        row_hi = min(int(np.ceil(max(y0, y1) + radius - 0.5)), h - 1)
        for row in range(row_lo, row_hi + 1):
            py = row + 0.5
            for col in range(col_lo, col_hi + 1):
                if out[row, col]:
                    continue
                px = col + 0.5
                t = 0.0
                if len2 > 0:
                    t = ((px - x0) * vx + (py - y0) * vy) / len2
                    t = min(max(t, 0.0), 1.0)
                dx = px - (x0 + t * vx)
                dy = py - (y0 + t * vy)
                if dx * dx + dy * dy <= r2:
                    out[row, col] = True


def stroke_segments(
    strokes: Iterable[StylusStroke], screen: tuple[float, float], mask_dims: tuple[int, int]
) -> np.ndarray:
    """Consecutive-sample segments in mask pixel coordinates, shape (n, 4)."""
    sx = mask_dims[0] / screen[0]
    sy = mask_dims[1] / screen[1]
    xs, ys, last = [], [], []
    for st in strokes:
        n = len(st.samples)
        xs.extend(s.x for s in st.samples)
        ys.extend(s.y for s in st.samples)
        last.extend([False] * (n - 1) + [True])
    if not xs:
        return np.empty((0, 4))
    pts = np.column_stack([np.array(xs) * sx, np.array(ys) * sy])
    starts = ~np.array(last)[:-1]  # a segment starts at every sample but a stroke's last
    return np.ascontiguousarray(np.hstack([pts[:-1][starts], pts[1:][starts]]))


def rasterize(
    strokes: Iterable[StylusStroke],
    screen: tuple[float, float],
    mask_dims: tuple[int, int],
    brush_radius: float = DEFAULT_BRUSH_RADIUS,
) -> np.ndarray:
    """Boolean coverage raster of shape (height, width).

    A pixel is painted when its centre lies within ``brush_radius`` of any
    stroke segment, after scaling screen coordinates to ``mask_dims`` (w, h).
    """
    w, h = mask_dims
    if w <= 0 or h <= 0:
        raise ValueError(f"mask dimensions must be positive, got {mask_dims}")
    if brush_radius < 1:
        raise ValueError(f"brush radius must be >= 1, got {brush_radius}")
    out = np.zeros((h, w), dtype=np.bool_)
    segs = stroke_segments(strokes, screen, mask_dims)
    if len(segs):
        _stamp_segments(out, segs, float(brush_radius))
    return out


def region_fractions(coverage: np.ndarray, mask: RegionMask) -> dict[str, float]:
    if coverage.shape != mask.labels.shape:
        raise DimensionMismatch(f"coverage {coverage.shape} vs mask {mask.labels.shape}")
    painted = np.bincount(mask.labels[np.asarray(coverage, dtype=bool)], minlength=256)
    area = mask.area
    return {r: int(painted[code]) / area[r] for r, code in LABEL_CODES.items()}


def drawing_quality(fractions: Mapping[str, float], caps: PenaltyCaps = PenaltyCaps()) -> tuple[float, dict[str, float]]:
    """Clamped score and the per-band penalties for a set of painted fractions."""
    penalties = {r: fractions[r] * caps[r] for r in REGIONS[1:]}
    raw = fractions["R0"] * 100 - sum(penalties.values())
    return max(0.0, raw), penalties


def q_drawing(
    record: TestRecord,
    mask: RegionMask,
    caps: PenaltyCaps = PenaltyCaps(),
    screen: tuple[float, float] | None = None,
    brush_radius: float = DEFAULT_BRUSH_RADIUS,
) -> QScore:
    """Score test 6. ``screen`` defaults to the mask size (strokes already in mask pixels)."""
    if record.test_id != 6:
        raise ConfigMismatch(f"q_drawing scores test 6, got test {record.test_id}")
    dims = (mask.width, mask.height)
    coverage = rasterize(record.strokes, screen or dims, dims, brush_radius)
    fractions = region_fractions(coverage, mask)
    q, penalties = drawing_quality(fractions, caps)
    components = {
        "t_real": record.t_real,
        **{f"{r.lower()}_colored_fraction": fractions[r] for r in REGIONS},
        "penalties": penalties,
        "r0_term": fractions["R0"] * 100,
    }
    return QScore(6, q, bool(record.strokes), components)
