"""Seeded synthetic sessions for desk-scale testing.

Random streams come from numpy's PCG64 bit generator, seeded through
``numpy.random.SeedSequence``; the stream identifier is recorded as
:data:`RNG_VERSION`. Given the same profile, battery and seed, a session
(and its canonical JSON) is reproduced exactly.

Distributions:

* per-action latencies: normal(latency_scale, 0.3 * latency_scale) truncated to
  [0.15 s, 4 * latency_scale];
* off-target taps and pen lifts: Poisson(extra_tap_rate);
* spiral trace: a template plus i.i.d. normal jitter of ``spiral_noise_sigma``
  canvas units per coordinate;
* drawing: horizontal fill strokes over ``fill_coverage`` of each tree row, plus
  brush dabs in band Ri amounting to ``overspill[i]`` of its area.

All child ids are prefixed ``synth-`` so generated data is never mistaken for
real recordings.
"""

from __future__ import annotations

import datetime as _dt
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .drawing import LABEL_CODES, REGIONS
from .model import (
    AgeGroup,
    Development,
    EmotionalState,
    Gender,
    Handedness,
    Phase,
    SessionLog,
    SessionMeta,
    StylusSample,
    StylusStroke,
    TestRecord,
    TouchEvent,
)
from .scene import derive_completion, mole_taps
from .scoring import Battery

RNG_VERSION = "numpy-pcg64-seedsequence/1"
SYNTH_PREFIX = "synth-"

_TOUCH_BASE_COMPLETION = {1: 0.30, 2: 0.40, 3: 0.15, 4: 0.15}
_OVERSPILL_SHAPE = (0.30, 0.15, 0.08, 0.04)
_DRAW_ROW_SPACING = 5.0  # mask px between fill strokes
_DRAW_SAMPLE_STEP = 16.0  # mask px between samples along a fill stroke


@dataclass(frozen=True)
class SkillProfile:
    skill: float
    completion_prob: dict[int, float]
    latency_scale: float
    extra_tap_rate: float
    spiral_noise_sigma: float
    fill_coverage: float
    overspill: tuple[float, float, float, float]

    def __post_init__(self) -> None:
        probs = [self.skill, self.fill_coverage, *self.completion_prob.values(), *self.overspill]
        if any(not 0 <= p <= 1 for p in probs):
            raise ValueError("skill, probabilities and fractions must lie in [0, 1]")
        if self.latency_scale <= 0:
            raise ValueError("latency_scale must be positive")
        if self.extra_tap_rate < 0 or self.spiral_noise_sigma < 0:
            raise ValueError("rates and noise must be non-negative")

    @classmethod
    def from_skill(cls, skill: float) -> "SkillProfile":
        """Every parameter moves monotonically with ``skill``; skill 1 is an ideal performer."""
        if not 0 <= skill <= 1:
            raise ValueError(f"skill must be in [0, 1], got {skill}")
        lack = 1.0 - skill
        return cls(
            skill=skill,
            completion_prob={t: b + (1 - b) * skill for t, b in _TOUCH_BASE_COMPLETION.items()},
            latency_scale=0.35 + 4.65 * lack,
            extra_tap_rate=3.0 * lack,
            spiral_noise_sigma=0.01 + 6.0 * lack**1.5,
            fill_coverage=0.2 + 0.8 * skill,
            overspill=tuple(s * lack for s in _OVERSPILL_SHAPE),
        )


def skill_for_level(level: int) -> float:
    """Nominal skill of a typical child at an educational level (2..8)."""
    return (level - 1.5) / 7


def level_for_skill(skill: float) -> int:
    return int(min(8, max(2, round(2 + 6 * skill))))


def _trunc_normal(rng: np.random.Generator, mean: float, sd: float, lo: float, hi: float) -> float:
    while True:
        x = rng.normal(mean, sd)
        if lo <= x <= hi:
            return x


class _Timeline:
    """Touch events for one test, with a clock in milliseconds."""

    def __init__(self, rng: np.random.Generator, profile: SkillProfile):
        self.rng = rng
        self.profile = profile
        self.t = 0
        self.events: list[TouchEvent] = []
        self._next_pointer = 0

    def wait(self) -> None:
        s = self.profile.latency_scale
        self.t += int(round(1000 * _trunc_normal(self.rng, s, 0.3 * s, 0.15, 4 * s)))

    def pointer(self) -> int:
        pid = self._next_pointer
        self._next_pointer = (pid + 1) % 10
        return pid

    def emit(self, pid: int, phase: Phase, x: float, y: float, dt: int = 0) -> None:
        self.t += dt
        self.events.append(TouchEvent(self.t, pid, phase, round(float(x), 2), round(float(y), 2), None))

    def tap(self, x: float, y: float) -> None:
        self.wait()
        pid = self.pointer()
        self.emit(pid, Phase.DOWN, x, y)
        self.emit(pid, Phase.UP, x, y, dt=int(self.rng.integers(60, 140)))


def _point_in_circle(rng, circle, frac: float = 0.6) -> tuple[float, float]:
    ang = rng.uniform(0, 2 * math.pi)
    rad = circle.r * frac * math.sqrt(rng.uniform())
    return circle.x + rad * math.cos(ang), circle.y + rad * math.sin(ang)


def _point_outside(rng, screen, circles) -> tuple[float, float]:
    while True:
        x, y = rng.uniform(0, screen[0]), rng.uniform(0, screen[1])
        if not any(c.contains(x, y) for c in circles):
            return x, y


def _finish_touch(test_id: int, tl: _Timeline, scene) -> TestRecord:
    t_max_ms = int(scene.t_max * 1000)
    events = tuple(e for e in tl.events if e.t < t_max_ms)
    probe = TestRecord(test_id, 0, 0.0, events)
    if test_id == 1:
        done_at = mole_taps(probe, scene).completed_at
    elif derive_completion(probe, scene):
        done_at = events[-1].t
    else:
        done_at = None
    t_real = scene.t_max if done_at is None else done_at / 1000
    return TestRecord(test_id, 0, t_real, events)


def _gen_test1(rng, profile, scene, screen) -> TestRecord:
    tl = _Timeline(rng, profile)
    completes = rng.random() < profile.completion_prob[1]
    hits = 4 if completes else int(rng.integers(0, 4))
    plan = ["miss"] * int(rng.poisson(profile.extra_tap_rate)) + ["hit"] * hits
    order = list(rng.permutation(len(plan)))
    plan = [plan[i] for i in order]
    if completes:
        plan.remove("hit")
        plan.append("hit")
    done = 0
    for kind in plan:
        mole = scene.mole_positions[scene.activation[min(done, 3)]]
        if kind == "hit":
            tl.tap(*_point_in_circle(rng, mole))
            done += 1
        else:
            tl.tap(*_point_outside(rng, screen, [mole]))
    return _finish_touch(1, tl, scene)


def _drag(tl: _Timeline, start, end, steps: int = 10) -> None:
    tl.wait()
    pid = tl.pointer()
    tl.emit(pid, Phase.DOWN, *start)
    hold = tl.profile.latency_scale * 1000 / steps
    for i in range(1, steps + 1):
        f = i / steps
        tl.emit(pid, Phase.MOVE, start[0] + f * (end[0] - start[0]), start[1] + f * (end[1] - start[1]),
                dt=max(8, int(round(tl.rng.uniform(0.5, 1.0) * hold))))
    tl.emit(pid, Phase.UP, *end, dt=int(tl.rng.integers(20, 60)))


def _gen_test2(rng, profile, scene, screen) -> TestRecord:
    tl = _Timeline(rng, profile)
    carrot, rabbit = scene.carrot_region, scene.rabbit_region
    for _ in range(int(rng.poisson(profile.extra_tap_rate))):
        tl.tap(*_point_outside(rng, screen, [carrot]))
    start = _point_in_circle(rng, carrot, 0.5)
    if rng.random() < profile.completion_prob[2]:
        tx, ty = _point_in_circle(rng, rabbit, 0.5)
        _drag(tl, start, (start[0] + tx - carrot.x, start[1] + ty - carrot.y))
    elif rng.random() < 0.5:
        # gives up half-way
        f = rng.uniform(0.1, 0.5)
        gap = (rabbit.x - carrot.x, rabbit.y - carrot.y)
        _drag(tl, start, (start[0] + f * gap[0], start[1] + f * gap[1]))
    return _finish_touch(2, tl, scene)


def _gen_pinch(test_id, rng, profile, scene, screen) -> TestRecord:
    tl = _Timeline(rng, profile)
    cx, cy = scene.center
    for _ in range(int(rng.poisson(profile.extra_tap_rate))):
        tl.tap(rng.uniform(0, screen[0]), rng.uniform(0, screen[1]))
    inner, outer, r0 = scene.circle_inner_radius, scene.circle_outer_radius, scene.rabbit_initial_radius
    if rng.random() < profile.completion_prob[test_id]:
        margin = 0.1 * (outer - inner)
        target = rng.uniform(inner + margin, outer - margin)
    elif rng.random() < 0.5:  # stops short of the ring
        target = rng.uniform(r0, inner * 0.95) if test_id == 3 else rng.uniform(outer * 1.05, r0)
    else:  # overshoots it
        target = rng.uniform(outer * 1.1, outer * 1.5) if test_id == 3 else rng.uniform(inner * 0.5, inner * 0.9)

    spread0 = 160.0
    spread1 = spread0 * target / r0
    a, b = tl.pointer(), tl.pointer()
    tl.wait()
    tl.emit(a, Phase.DOWN, cx - spread0 / 2, cy)
    lag = int(rng.integers(0, int(100 + 300 * (1 - profile.skill)) + 1))
    tl.emit(b, Phase.DOWN, cx + spread0 / 2, cy, dt=lag)
    steps = 8
    for i in range(1, steps + 1):
        half = (spread0 + (spread1 - spread0) * i / steps) / 2
        dt = max(8, int(round(profile.latency_scale * 1000 / (2 * steps))))
        tl.emit(a, Phase.MOVE, cx - half, cy, dt=dt)
        tl.emit(b, Phase.MOVE, cx + half, cy, dt=dt)
    tl.emit(a, Phase.UP, cx - spread1 / 2, cy, dt=int(rng.integers(10, 40)))
    tl.emit(b, Phase.UP, cx + spread1 / 2, cy, dt=int(rng.integers(0, 40)))
    return _finish_touch(test_id, tl, scene)


def _split_points(rng, n: int, pieces: int) -> list[tuple[int, int]]:
    """Cut ``range(n)`` into at most ``pieces`` contiguous runs of at least 2 samples."""
    cuts: list[int] = []
    if pieces > 1 and n >= 4:
        for c in sorted(rng.choice(np.arange(2, n - 1), size=min(pieces - 1, n - 3), replace=False)):
            if c - (cuts[-1] if cuts else 0) >= 2 and n - c >= 2:
                cuts.append(int(c))
    bounds = [0, *cuts, n]
    return list(zip(bounds, bounds[1:]))


def _gen_spiral(rng, profile, battery, screen) -> TestRecord:
    template = battery.templates[int(rng.integers(0, len(battery.templates)))]
    pts = template.points + rng.normal(0.0, profile.spiral_noise_sigma, template.points.shape)
    side = 0.75 * min(screen)
    scale = side / max(template.canvas)
    ox, oy = (screen[0] - side) / 2, (screen[1] - side) / 2
    xs = np.round(ox + pts[:, 0] * scale, 3)
    ys = np.round(oy + pts[:, 1] * scale, 3)
    t_step = 15 + 60 * (1 - profile.skill)
    times = np.cumsum(rng.uniform(0.5, 1.5, len(pts)) * t_step).astype(np.int64)
    n_lifts = int(rng.poisson(profile.extra_tap_rate / 2))
    strokes = []
    offset = 0
    for lo, hi in _split_points(rng, len(pts), n_lifts + 1):
        offset += int(rng.integers(150, 400)) if lo else 0
        strokes.append(StylusStroke(tuple(
            StylusSample(int(times[i]) + offset, float(xs[i]), float(ys[i])) for i in range(lo, hi)
        )))
    t_real = min(strokes[-1].samples[-1].t / 1000, battery.scene[5].t_max)
    return TestRecord(5, 0, t_real, strokes=tuple(strokes))


def _gen_drawing(rng, profile, battery, screen) -> TestRecord:
    mask = battery.mask
    r = battery.brush_radius
    sx, sy = screen[0] / mask.width, screen[1] / mask.height
    speed = 150 + 350 * profile.skill  # mask px per second
    t_limit = int(battery.scene[6].t_max * 1000)
    paths: list[list[tuple[float, float]]] = []

    inside = mask.labels == LABEL_CODES["R0"]
    rows = np.flatnonzero(inside.any(axis=1))
    for y in np.arange(rows[0] + 0.5 + r / 2, rows[-1] + 1.0, _DRAW_ROW_SPACING):
        cols = np.flatnonzero(inside[int(y)])
        runs = np.split(cols, np.flatnonzero(np.diff(cols) > 1) + 1)
        for run in runs:
            x0, x1 = run[0] + 0.5, run[-1] + 0.5
            inset = min(r * 0.75, (x1 - x0) / 2)
            x0, x1 = x0 + inset, x1 - inset
            if profile.fill_coverage < 1:
                f = float(np.clip(rng.normal(profile.fill_coverage, 0.05), 0, 1))
                if f == 0:
                    continue
                x1 = x0 + f * (x1 - x0)
            n = max(2, int(math.ceil((x1 - x0) / _DRAW_SAMPLE_STEP)) + 1)
            paths.append([(float(x), float(y)) for x in np.linspace(x0, x1, n)])

    for region, spill in zip(REGIONS[1:], profile.overspill):
        ys, xs = np.nonzero(mask.labels == LABEL_CODES[region])
        dabs = int(round(spill * len(xs) / (math.pi * r * r)))
        for idx in rng.choice(len(xs), size=min(dabs, len(xs)), replace=False):
            px, py = float(xs[idx]) + 0.5, float(ys[idx]) + 0.5
            paths.append([(px, py), (px + rng.uniform(-2, 2), py + rng.uniform(-2, 2))])

    order = rng.permutation(len(paths)) if profile.skill < 1 else range(len(paths))
    strokes = []
    t = 0
    for i in order:
        path = paths[i]
        t += int(rng.integers(100, 300))
        samples = []
        for j, (x, y) in enumerate(path):
            if j:
                px, py = path[j - 1]
                t += max(1, int(round(1000 * math.hypot(x - px, y - py) / speed)))
            samples.append(StylusSample(t, round(float(x) * sx, 3), round(float(y) * sy, 3)))
        if t >= t_limit:
            break
        strokes.append(StylusStroke(tuple(samples)))
    t_real = strokes[-1].samples[-1].t / 1000 if strokes else battery.scene[6].t_max
    return TestRecord(6, 0, t_real, strokes=tuple(strokes))


def generate_session(
    profile: SkillProfile,
    battery: Battery,
    seed: int | Sequence[int],
    *,
    child_id: str | None = None,
    acquisition_id: int = 1,
    level: int | None = None,
    acquisition_date: _dt.date = _dt.date(2021, 10, 4),
    development: Development = Development.TD,
) -> SessionLog:
    """One synthetic session; deterministic in (profile, battery, seed)."""
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    screen = battery.scene.screen
    scene = battery.scene
    if child_id is None:
        tag = "-".join(str(s) for s in np.atleast_1d(seed))
        child_id = f"{SYNTH_PREFIX}{tag}"
    elif not child_id.startswith(SYNTH_PREFIX):
        child_id = SYNTH_PREFIX + child_id

    meta = SessionMeta(
        child_id=child_id,
        acquisition_id=acquisition_id,
        acquisition_date=acquisition_date,
        group=AgeGroup(level_for_skill(profile.skill) if level is None else level),
        gender=[Gender.MALE, Gender.FEMALE][int(rng.integers(0, 2))],
        handedness=[Handedness.RIGHT, Handedness.LEFT, Handedness.BOTH][
            int(rng.choice(3, p=[0.85, 0.10, 0.05]))
        ],
        emotional_state=[EmotionalState.HAPPY, EmotionalState.NORMAL, EmotionalState.SAD][
            int(rng.choice(3, p=[0.8, 0.12, 0.08]))
        ],
        development=development,
        screen=screen,
    )
    records = [
        _gen_test1(rng, profile, scene[1], screen),
        _gen_test2(rng, profile, scene[2], screen),
        _gen_pinch(3, rng, profile, scene[3], screen),
        _gen_pinch(4, rng, profile, scene[4], screen),
        _gen_spiral(rng, profile, battery, screen),
        _gen_drawing(rng, profile, battery, screen),
    ]
    # tests run back to back; t_start is relative to the session start
    start = 0
    stamped = []
    for rec in records:
        stamped.append(TestRecord(rec.test_id, start, round(rec.t_real, 3), rec.events, rec.strokes, None))
        start += int(scene[rec.test_id].t_max * 1000) + 5000
    return SessionLog(meta, tuple(stamped))


@dataclass(frozen=True)
class GeneratedSession:
    filename: str
    session: SessionLog


def generate_by_skill(
    battery: Battery, skills: Sequence[float], count: int, seed: int
) -> list[GeneratedSession]:
    """``count`` independent single-acquisition sessions for each skill level."""
    out = []
    for s_idx, skill in enumerate(skills):
        profile = SkillProfile.from_skill(skill)
        tag = f"s{int(round(skill * 1000)):04d}"
        for i in range(count):
            session = generate_session(profile, battery, (seed, s_idx, i), child_id=f"{tag}-c{i:04d}")
            out.append(GeneratedSession(f"synth-{tag}-c{i:04d}-a1.json", session))
    return out


def generate_cohort(
    battery: Battery,
    levels: Sequence[int],
    count: int,
    seed: int,
    acquisitions: int = 1,
    ntd_rate: float = 0.1,
) -> list[GeneratedSession]:
    """Longitudinal cohort: ``count`` children starting at each level, one level up per acquisition.

    Each child keeps a personal skill offset; children flagged NTD sit lower.
    """
    out = []
    for level in levels:
        for i in range(count):
            child_rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence((seed, level, i))))
            ntd = child_rng.random() < ntd_rate
            offset = child_rng.normal(0.0, 0.06) - (0.15 if ntd else 0.0)
            dev = Development.NTD if ntd else Development.TD
            child = f"g{level}-c{i:04d}"
            for a in range(1, acquisitions + 1):
                lvl = min(8, level + a - 1)
                skill = float(np.clip(skill_for_level(lvl) + offset, 0.0, 1.0))
                session = generate_session(
                    SkillProfile.from_skill(skill),
                    battery,
                    (seed, level, i, a),
                    child_id=child,
                    acquisition_id=a,
                    level=lvl,
                    acquisition_date=_dt.date(2020, 1, 15) + _dt.timedelta(days=120 * (a - 1)),
                    development=dev,
                )
                out.append(GeneratedSession(f"synth-{child}-a{a}.json", session))
    return out
