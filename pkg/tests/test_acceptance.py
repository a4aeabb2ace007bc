"""Acceptance criteria, one test each; every test reports a PASS/FAIL line.

Run on its own with ``pytest tests/test_acceptance.py -s`` to see the lines as
they are produced; they are also repeated in the terminal summary.
"""

from __future__ import annotations

import math
import re
import time

import numpy as np
import pytest

from childq.drawing import LABEL_CODES, RegionMask, default_tree_mask, drawing_quality, region_fractions
from childq.errors import ChildQError
from childq.model import Phase, TouchEvent, parse_session, session_to_dict
from childq.growth import percentile
from childq.scoring import score_session
from childq.spiral import default_templates, dtw, q_spiral
from childq.synth import SkillProfile, generate_session
from childq.touch import p_taps_simple, p_taps_test1, p_time, q_touch

from .helpers import run_pipeline, stroke, stylus_record, tap, touch_record, tree_bytes
from .oracles import drawing_q_oracle, dtw_exhaustive, painted_fractions, percentile_oracle, random_region_labels
from .report import check


# --- touch table ---------------------------------------------------------------


def _mole_taps(scene, hits=4, misses=0, t0=500):
    """``misses`` taps in an empty corner, then ``hits`` taps on the active moles."""
    events = []
    for i in range(misses):
        events += tap(t0 + 100 * i, 5, 5, pointer=i % 10, hold=40)
    t = t0 + 100 * misses
    for i, idx in enumerate(scene.activation[:hits]):
        m = scene.mole_positions[idx]
        events += tap(t + 300 * i, m.x, m.y, pointer=i, hold=80)
    return events


def _drag(scene, stray_taps=0):
    c, r = scene.carrot_region, scene.rabbit_region
    events = []
    for i in range(stray_taps):
        events += tap(100 + 200 * i, 640, 60, pointer=5, hold=40)
    t = 100 + 200 * stray_taps
    events += [
        TouchEvent(t, 0, Phase.DOWN, c.x, c.y),
        TouchEvent(t + 200, 0, Phase.MOVE, (c.x + r.x) / 2, r.y),
        TouchEvent(t + 400, 0, Phase.MOVE, r.x, r.y),
        TouchEvent(t + 450, 0, Phase.UP, r.x, r.y),
    ]
    return events


def _pinch(scene, target_radius, second_after=40):
    cx, cy = scene.center
    s0 = 100.0
    s1 = s0 * target_radius / scene.rabbit_initial_radius
    t = 100 + second_after
    events = [TouchEvent(100, 0, Phase.DOWN, cx - s0 / 2, cy), TouchEvent(t, 1, Phase.DOWN, cx + s0 / 2, cy)]
    for i in range(1, 5):
        s = s0 + (s1 - s0) * i / 4
        events += [TouchEvent(t + 40 * i, 0, Phase.MOVE, cx - s / 2, cy), TouchEvent(t + 40 * i, 1, Phase.MOVE, cx + s / 2, cy)]
    events += [TouchEvent(t + 250, 0, Phase.UP, cx - s1 / 2, cy), TouchEvent(t + 250, 1, Phase.UP, cx + s1 / 2, cy)]
    return events


def _touch_cases(scene):
    """(label, value computed by the library, hand-derived expectation, record or None)."""
    mid3 = (scene[3].circle_inner_radius + scene[3].circle_outer_radius) / 2
    mid4 = (scene[4].circle_inner_radius + scene[4].circle_outer_radius) / 2
    records = [
        ("test1 4 hits t=15", touch_record(1, _mole_taps(scene[1]), 15.0), 75.0),
        ("test1 4 hits 2 misses t=6", touch_record(1, _mole_taps(scene[1], misses=2), 6.0), 85.0),
        ("test1 4 hits 25 misses t=24", touch_record(1, _mole_taps(scene[1], misses=25), 24.0), 10.0),
        ("test1 3 hits", touch_record(1, _mole_taps(scene[1], hits=3), 9.0), 0.0),
        ("test1 flagged incomplete", touch_record(1, _mole_taps(scene[1]), 9.0, completed=False), 0.0),
        ("test2 ideal", touch_record(2, _drag(scene[2]), 0.0), 100.0),
        ("test2 one stray tap t=12", touch_record(2, _drag(scene[2], stray_taps=1), 12.0), 55.0),
        ("test2 nothing dragged", touch_record(2, tap(100, 640, 60), 4.0), 0.0),
        ("test3 ten missed taps", touch_record(3, sum((tap(100 + 300 * i, 50, 50, pointer=i % 4) for i in range(10)), []), 12.0), 0.0),
        ("test3 clean pinch t=3", touch_record(3, _pinch(scene[3], mid3), 3.0), 95.0),
        ("test3 slow second finger t=9", touch_record(3, _pinch(scene[3], mid3, second_after=200), 9.0), 60.0),
        ("test4 clean pinch t=30", touch_record(4, _pinch(scene[4], mid4), 30.0), 50.0),
        ("test4 flagged complete no taps t=10", touch_record(4, [], 10.0, completed=True), 100 / 3),
    ]
    cases = [
        ("p_time(0,30)", p_time(0, 30), 100.0, None),
        ("p_time(30,30)", p_time(30, 30), 0.0, None),
        ("p_time(15,30)", p_time(15, 30), 50.0, None),
        ("p_taps_test1(4,0)", p_taps_test1(4, 0), 100.0, None),
        ("p_taps_test1(4,3)", p_taps_test1(4, 3), 85.0, None),
        ("p_taps_test1(4,25)", p_taps_test1(4, 25), 0.0, None),
        ("p_taps_simple(0)", p_taps_simple(0), 0.0, None),
        ("p_taps_simple(1)", p_taps_simple(1), 100.0, None),
        ("p_taps_simple(4)", p_taps_simple(4), 25.0, None),
    ]
    for label, rec, expected in records:
        cases.append((label, q_touch(rec, scene[rec.test_id]).q, expected, rec))
    return cases


def test_touch_table(scene):
    start = time.perf_counter()
    cases = _touch_cases(scene)
    wrong = [(label, got, want) for label, got, want, _ in cases if abs(got - want) > 1e-9]
    forced = []
    for label, _, _, rec in cases:
        if rec is not None:
            off = touch_record(rec.test_id, list(rec.events), rec.t_real, completed=False)
            if q_touch(off, scene[rec.test_id]).q != 0:
                forced.append(label)
    elapsed = time.perf_counter() - start
    ok = len(cases) >= 20 and not wrong and not forced and elapsed < 1.0
    check("touch Q table", ok, f"{len(cases)} cases, mismatches={wrong}, uncompleted-nonzero={forced}, {elapsed:.2f}s")


# --- DTW ---------------------------------------------------------------------------


def test_dtw_oracle():
    rng = np.random.default_rng(20211004)
    start = time.perf_counter()
    bad = []
    for i in range(1000):
        a = [tuple(map(int, p)) for p in rng.integers(0, 5, (int(rng.integers(1, 9)), 2))]
        b = [tuple(map(int, p)) for p in rng.integers(0, 5, (int(rng.integers(1, 9)), 2))]
        d, k = dtw_exhaustive(a, b)
        res = dtw(a, b)
        if (res.d, res.k) != (d, k):
            bad.append((i, a, b, (res.d, res.k), (d, k)))
    elapsed = time.perf_counter() - start
    check("DTW exhaustive-oracle equivalence", not bad and elapsed < 30, f"1000 pairs, {len(bad)} mismatches, {elapsed:.1f}s")


# --- spiral sanity -----------------------------------------------------------------------


def test_spiral_sanity():
    start = time.perf_counter()
    templates = default_templates()
    exact = [q_spiral(stylus_record(5, [stroke(t.points.tolist())]), templates).q for t in templates]
    means = []
    for sigma in (0.5, 1.0, 2.0, 4.0):
        qs = []
        for seed in range(100):
            rng = np.random.default_rng([seed, int(sigma * 10)])
            tpl = templates[seed % 4]
            noisy = tpl.points + rng.normal(0.0, sigma, tpl.points.shape)
            qs.append(q_spiral(stylus_record(5, [stroke(noisy.tolist())]), templates).q)
        means.append(float(np.mean(qs)))
    elapsed = time.perf_counter() - start
    decreasing = all(a > b for a, b in zip(means, means[1:]))
    ok = exact == [100.0] * 4 and decreasing and elapsed < 30
    check("spiral: exact trace 100, jitter sweep decreasing", ok,
          f"exact={exact}, means={[round(m, 3) for m in means]}, {elapsed:.1f}s")


# --- drawing -----------------------------------------------------------------------------


def test_drawing_exactness():
    rng = np.random.default_rng(6)
    worst = 0.0
    for _ in range(50):
        labels = random_region_labels(rng, 64)
        coverage = rng.random((64, 64)) < rng.random()
        fr = region_fractions(coverage, RegionMask(labels))
        ref = painted_fractions(coverage, labels, LABEL_CODES)
        worst = max(worst, max(abs(fr[r] - ref[r]) for r in ref))
        worst = max(worst, abs(drawing_quality(fr)[0] - drawing_q_oracle(ref)))
    clamp = drawing_quality({"R0": 0.10, "R1": 0.0, "R2": 0.0, "R3": 0.0, "R4": 1.0})[0]
    mask = default_tree_mask()
    full = drawing_quality(region_fractions(mask.labels == LABEL_CODES["R0"], mask))[0]
    ok = worst <= 1e-9 and clamp == 0.0 and full == 100.0
    check("drawing: pixel-count oracle, clamp and full fill", ok, f"max error {worst:.2e}, clamp={clamp}, full={full}")


# --- percentiles ---------------------------------------------------------------------------


def test_percentile_oracle():
    rng = np.random.default_rng(10)
    grid = np.linspace(0, 100, 41)
    worst, non_monotone = 0.0, 0
    for _ in range(1000):
        values = (rng.random(int(rng.integers(1, 60))) * 100).tolist()
        got = [percentile(values, p) for p in grid]
        worst = max(worst, max(abs(g - percentile_oracle(values, p)) for g, p in zip(got, grid)))
        non_monotone += any(b < a for a, b in zip(got, got[1:]))
    check("percentile oracle and monotonicity", worst <= 1e-9 and non_monotone == 0,
          f"1000 lists, max error {worst:.2e}, non-monotone lists {non_monotone}")


# --- range fuzzing ------------------------------------------------------------------------------


class _Mutator:
    """Random edits that keep a session document valid."""

    T_MAX = {1: 30.0, 2: 30.0, 3: 30.0, 4: 30.0, 5: 30.0, 6: 120.0}

    def __init__(self, rng, pool):
        self.rng = rng
        self.pool = pool

    def __call__(self, doc):
        doc = {**doc, "meta": dict(doc["meta"]), "tests": list(doc["tests"])}
        for _ in range(int(self.rng.integers(1, 5))):
            idx = int(self.rng.integers(0, 6))
            rec = dict(doc["tests"][idx])
            op = self.rng.integers(0, 8)
            if op == 0:
                rec["t_real"] = float(self.rng.uniform(0, self.T_MAX[rec["test_id"]]))
            elif op == 1:
                rec["completed"] = [None, True, False][int(self.rng.integers(0, 3))]
            elif op == 2:
                other = self.pool[int(self.rng.integers(0, len(self.pool)))]["tests"][idx]
                rec["events"], rec["strokes"] = other["events"], other["strokes"]
            elif op == 3:
                rec["events"], rec["strokes"] = [], []
            elif rec["test_id"] <= 4:
                rec["events"] = self._touch(rec["events"], op)
            else:
                rec["strokes"] = self._stylus(rec["strokes"], op)
            doc["tests"][idx] = rec
        if self.rng.random() < 0.2:
            doc["meta"]["group"] = int(self.rng.integers(2, 9))
        return doc

    def _coord(self):
        return float(self.rng.choice([self.rng.uniform(-200, 1500), self.rng.uniform(-1e5, 1e5)], p=[0.9, 0.1]))

    def _touch(self, events, op):
        pids = sorted({e["pointer_id"] for e in events})
        if op == 4 and pids:  # drop one finger entirely
            pid = pids[int(self.rng.integers(0, len(pids)))]
            return [e for e in events if e["pointer_id"] != pid]
        if op == 5 and pids:  # move one finger
            pid = pids[int(self.rng.integers(0, len(pids)))]
            dx, dy = self.rng.uniform(-400, 400, 2)
            return [{**e, "x": e["x"] + dx, "y": e["y"] + dy} if e["pointer_id"] == pid else e for e in events]
        if op == 6 and pids:  # cut a finger's last gesture short (left open)
            pid = pids[int(self.rng.integers(0, len(pids)))]
            own = [i for i, e in enumerate(events) if e["pointer_id"] == pid]
            last_down = max(i for i in own if events[i]["phase"] == "down")
            cut = int(self.rng.integers(last_down, own[-1] + 1))
            return [e for i, e in enumerate(events) if e["pointer_id"] != pid or i <= cut]
        # add a stray tap on a fresh finger
        pid = max(pids, default=-1) + 1
        t = int(self.rng.integers(0, 30000))
        x, y = self._coord(), self._coord()
        return events + [
            {"t": t, "pointer_id": pid, "phase": "down", "x": x, "y": y},
            {"t": t + int(self.rng.integers(0, 500)), "pointer_id": pid, "phase": "up", "x": x, "y": y},
        ]

    def _stylus(self, strokes, op):
        if not strokes:
            t = int(self.rng.integers(0, 1000))
            n = int(self.rng.integers(2, 6))
            return [{"samples": [{"t": t + 10 * i, "x": self._coord(), "y": self._coord()} for i in range(n)]}]
        i = int(self.rng.integers(0, len(strokes)))
        st = strokes[i]["samples"]
        if op == 4:
            return strokes[:i] + strokes[i + 1:]
        if op == 5:
            noise = self.rng.normal(0, float(self.rng.choice([1.0, 30.0, 300.0])), (len(st), 2))
            new = [{**s, "x": s["x"] + float(n[0]), "y": s["y"] + float(n[1])} for s, n in zip(st, noise)]
        elif op == 6:
            new = st[: int(self.rng.integers(2, len(st) + 1))]
        else:  # collapse the stroke onto one spot
            x, y = self._coord(), self._coord()
            new = [{**s, "x": x, "y": y} for s in st]
        return strokes[:i] + [{"samples": new}] + strokes[i + 1:]


def test_range_fuzz(battery):
    start = time.perf_counter()
    rng = np.random.default_rng(99)
    pool = [
        session_to_dict(generate_session(SkillProfile.from_skill(float(s)), battery, i))
        for i, s in enumerate(np.linspace(0, 1, 120))
    ]
    mutate = _Mutator(rng, pool)
    problems = []
    for n in range(10_000):
        doc = mutate(pool[n % len(pool)])
        try:
            session = parse_session(doc, t_max=battery.scene.t_max)
            for o in score_session(session, battery):
                if o.score is None:
                    problems.append((n, o.test_id, o.error))
                elif not (0.0 <= o.score.q <= 100.0 and math.isfinite(o.score.q)):
                    problems.append((n, o.test_id, o.score.q))
        except Exception as exc:  # any crash or rejection of a valid document is a failure
            problems.append((n, type(exc).__name__, str(exc)[:120]))
    elapsed = time.perf_counter() - start
    check("range fuzzing", not problems and elapsed < 120,
          f"10000 sessions, {len(problems)} problems {problems[:3]}, {elapsed:.1f}s")


# --- trend -------------------------------------------------------------------------------------


def test_trend(battery):
    start = time.perf_counter()
    means = {}
    for s_idx, skill in enumerate((0.2, 0.5, 0.8)):
        profile = SkillProfile.from_skill(skill)
        totals = np.zeros(6)
        for i in range(200):
            for o in score_session(generate_session(profile, battery, (2021, s_idx, i)), battery):
                totals[o.test_id - 1] += o.score.q
        means[skill] = totals / 200
    elapsed = time.perf_counter() - start
    increasing = all(means[0.2][t] < means[0.5][t] < means[0.8][t] for t in range(6))
    table = "; ".join(f"T{t + 1}: " + " < ".join(f"{means[s][t]:.1f}" for s in means) for t in range(6))
    check("mean Q increases with skill on every test", increasing and elapsed < 120, f"{table}; {elapsed:.1f}s")


# --- end to end -----------------------------------------------------------------------------------


@pytest.fixture(scope="module")
def two_runs(tmp_path_factory):
    roots = [tmp_path_factory.mktemp(f"run{i}") for i in range(2)]
    codes = [run_pipeline(root, seed=7) for root in roots]
    return roots, codes


def test_end_to_end_determinism(two_runs):
    roots, codes = two_runs
    a, b = (tree_bytes(r) for r in roots)
    same = a == b
    ok = codes == [[0, 0, 0, 0]] * 2 and same and len(a) > 0
    check("end-to-end determinism", ok, f"exit codes {codes}, {len(a)} files, identical={same}")


def test_growth_chart_structure(two_runs):
    (root, _), _ = two_runs
    svg = (root / "chart" / "chart-test6.svg").read_text()
    curves = re.findall(r'<polyline class="percentile" data-percentile="([^"]+)" points="([^"]*)"', svg)
    labels = [p for p, _ in curves]
    parsed = {p: [tuple(map(float, xy.split(","))) for xy in pts.split()] for p, pts in curves}
    xs = {p: [x for x, _ in pts] for p, pts in parsed.items()}
    all_groups = len({tuple(v) for v in xs.values()}) == 1 and all(len(v) == 7 for v in xs.values())
    # screen y grows downwards, so a higher Q has a smaller y
    ordered = all(
        parsed["10"][g][1] >= parsed["50"][g][1] >= parsed["90"][g][1] for g in range(7)
    ) if all_groups else False
    ticks = svg.count('class="x-tick"')
    ok = labels == ["10", "50", "90"] and all_groups and ordered and ticks == 7
    check("test 6 growth chart structure", ok, f"curves={labels}, groups per curve={[len(v) for v in xs.values()]}, ordered={ordered}")
