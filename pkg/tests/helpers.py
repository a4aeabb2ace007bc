"""Builders for hand-made records and session documents."""

from __future__ import annotations

import copy

from childq.model import Phase, StylusSample, StylusStroke, TestRecord, TouchEvent

SCREEN = (1280, 800)


def tap(t, x, y, pointer=0, hold=80):
    return [TouchEvent(t, pointer, Phase.DOWN, float(x), float(y)), TouchEvent(t + hold, pointer, Phase.UP, float(x), float(y))]


def touch_record(test_id, events, t_real=10.0, completed=None):
    events = sorted(events, key=lambda e: (e.t, e.pointer_id))
    return TestRecord(test_id, 0, t_real, tuple(events), (), completed)


def stroke(points, t0=0, dt=10):
    return StylusStroke(tuple(StylusSample(t0 + i * dt, float(x), float(y)) for i, (x, y) in enumerate(points)))


def stylus_record(test_id, strokes, t_real=5.0):
    return TestRecord(test_id, 0, t_real, (), tuple(strokes), None)


def taps_at(points, start=500, gap=400):
    """One single-finger tap per point, each on a fresh pointer id."""
    events = []
    for i, (x, y) in enumerate(points):
        events += tap(start + i * gap, x, y, pointer=i % 10)
    return events


def minimal_doc(**meta_overrides):
    """A valid document with empty (abandoned) records for all six tests."""
    meta = {
        "child_id": "kid-001",
        "acquisition_id": 1,
        "acquisition_date": "2021-10-04",
        "group": 4,
        "gender": "female",
        "handedness": "right",
        "emotional_state": "happy",
        "development": "TD",
        "screen": {"width": SCREEN[0], "height": SCREEN[1]},
    }
    meta.update(meta_overrides)
    tests = [
        {"test_id": i, "t_start": 1000 * i, "t_real": 30.0 if i < 6 else 120.0, "completed": None, "events": [], "strokes": []}
        for i in range(1, 7)
    ]
    return {"schema": "childci-q/1", "meta": meta, "tests": tests}


def with_test(doc, test_id, **fields):
    doc = copy.deepcopy(doc)
    for rec in doc["tests"]:
        if rec["test_id"] == test_id:
            rec.update(fields)
    return doc


def scored(child, level, q, test_id=6, acquisition=1):
    """A (meta, score) pair as read back from a score table."""
    import datetime as _dt

    from childq.model import AgeGroup, Development, EmotionalState, Gender, Handedness, SessionMeta
    from childq.result import QScore

    meta = SessionMeta(
        child_id=child,
        acquisition_id=acquisition,
        acquisition_date=_dt.date(2021, 1, 1),
        group=AgeGroup(level),
        gender=Gender.UNKNOWN,
        handedness=Handedness.UNKNOWN,
        emotional_state=EmotionalState.UNKNOWN,
        development=Development.TD,
        screen=None,
    )
    return meta, QScore(test_id, float(q), True, {})


def run_pipeline(root, seed=7, levels="2-8", count=6, acquisitions=3, child="synth-g3-c0000"):
    """generate -> score -> chart -> track into ``root``; returns each step's exit code."""
    from childq.cli import main

    root.mkdir(parents=True, exist_ok=True)
    codes = [
        main(["generate", "--levels", levels, "--count", str(count), "--acquisitions", str(acquisitions),
              "--seed", str(seed), "--out", str(root / "sessions")]),
        main(["score", str(root / "sessions"), "--out", str(root / "scores"), "--workers", "1"]),
        main(["chart", str(root / "scores" / "scores.csv"), "--test", "6", "--out", str(root / "chart")]),
        main(["track", child, str(root / "scores" / "scores.csv"), str(root / "chart" / "chart-test6.json"),
              "--out", str(root / "track")]),
    ]
    return codes


def tree_bytes(root):
    """Relative path -> file bytes for every file under ``root``."""
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}
