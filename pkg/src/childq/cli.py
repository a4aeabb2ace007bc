"""``childq`` command line: generate, validate, score, chart, track.

Exit codes: 0 success, 2 input error, 3 internal error.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import io
import json
import logging
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Iterable, Sequence

from . import __version__
from .errors import ChildQError, EmptyInput, SchemaError, UnknownChild
from .growth import DEFAULT_MIN_N, GrowthChart, Trajectory, build_chart, place_trajectory
from .model import (
    AgeGroup,
    Development,
    EmotionalState,
    Gender,
    Handedness,
    SessionLog,
    SessionMeta,
    dumps_session,
    load_session,
    meta_to_dict,
)
from .result import QScore
from .scoring import DEFAULT_SCENE, Battery, TestOutcome, score_session
from .svg import chart_svg, pct_label
from .synth import RNG_VERSION, generate_by_skill, generate_cohort

log = logging.getLogger("childq")

EXIT_OK, EXIT_INPUT, EXIT_INTERNAL = 0, 2, 3

SCORE_SCHEMA = "childci-q/score/1"
CHART_SCHEMA = "childci-q/chart/1"
TRACK_SCHEMA = "childci-q/trajectory/1"
MANIFEST_SCHEMA = "childci-q/manifest/1"
# Version 1 of the summary and chart tables; readers check the header verbatim.
SCORES_CSV_HEADER = (
    "session_id", "child_id", "acquisition_id", "acquisition_date", "group", "gender",
    "handedness", "emotional_state", "development", "test_id", "completed", "q",
)
CHART_CSV_HEADER = ("group", "percentile", "q", "n")
DEDUPE_CHOICES = ("none", "latest-per-child-per-group")


class InputError(ChildQError):
    """Reported to the user and mapped to exit code 2."""


# --- file helpers -------------------------------------------------------------------


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dump_json(doc) -> str:
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def parse_percentiles(text: str) -> list[float]:
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad percentile list {text!r}") from None
    if not values or any(not 0 <= v <= 100 for v in values):
        raise argparse.ArgumentTypeError("percentiles must be a comma list of values in [0, 100]")
    return values


def parse_floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad number list {text!r}") from None


def parse_levels(text: str) -> list[int]:
    levels: list[int] = []
    try:
        for part in text.split(","):
            if "-" in part:
                lo, hi = part.split("-")
                levels.extend(range(int(lo), int(hi) + 1))
            elif part.strip():
                levels.append(int(part))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad level list {text!r}") from None
    if any(not 2 <= lv <= 8 for lv in levels):
        raise argparse.ArgumentTypeError("levels must lie in 2..8")
    return levels


def collect_inputs(paths: Sequence[str]) -> list[Path]:
    files: list[Path] = []
    for raw in paths:
        p = Path(raw)
        if p.is_dir():
            files.extend(sorted(q for q in p.glob("*.json") if q.name != "manifest.json"))
        elif p.is_file():
            files.append(p)
        else:
            raise InputError(f"{raw}: no such file or directory")
    return sorted(set(files), key=lambda f: (f.stem, str(f)))


def load_battery(args) -> Battery:
    try:
        return Battery.load(args.scene, args.templates, args.mask)
    except ChildQError as exc:
        raise InputError(f"cannot load battery: {exc}") from None


# --- generate --------------------------------------------------------------------


def cmd_generate(args) -> int:
    if args.count < 0:
        raise InputError("--count must be >= 0")
    battery = load_battery(args)
    if args.levels:
        generated = generate_cohort(battery, args.levels, args.count, args.seed, args.acquisitions)
    else:
        skills = args.skill or [0.5]
        if any(not 0 <= s <= 1 for s in skills):
            raise InputError("--skill values must lie in [0, 1]")
        generated = generate_by_skill(battery, skills, args.count, args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for g in generated:
        write_atomic(out / g.filename, dumps_session(g.session))
    manifest = {
        "schema": MANIFEST_SCHEMA,
        "generator": f"childq {__version__}",
        "rng": RNG_VERSION,
        "seed": args.seed,
        "battery": battery.refs,
        "files": [g.filename for g in generated],
    }
    write_atomic(out / "manifest.json", dump_json(manifest))
    log.info("wrote %d sessions to %s", len(generated), out)
    return EXIT_OK


# --- validate ---------------------------------------------------------------------


def cmd_validate(args) -> int:
    battery = load_battery(args)
    files = collect_inputs(args.inputs)
    if not files:
        raise InputError("no sessions found")
    bad = 0
    for f in files:
        try:
            load_session(f, t_max=battery.scene.t_max)
        except (ChildQError, OSError) as exc:
            bad += 1
            print(f"{f}: {type(exc).__name__}: {exc}", file=sys.stderr)
    print(f"{len(files) - bad}/{len(files)} sessions valid")
    return EXIT_INPUT if bad else EXIT_OK


# --- score --------------------------------------------------------------------------


def score_document(session_id: str, source: str, session: SessionLog, outcomes: list[TestOutcome], battery: Battery) -> dict:
    scores = []
    for o in outcomes:
        if o.score is None:
            scores.append({"test_id": o.test_id, "q": None, "completed": None, "components": None, "error": o.error})
        else:
            scores.append({
                "test_id": o.test_id,
                "q": o.score.reported_q(),
                "completed": o.score.completed,
                "components": dict(o.score.components),
                "error": None,
            })
    return {
        "schema": SCORE_SCHEMA,
        "session_id": session_id,
        "source": source,
        "meta": meta_to_dict(session.meta),
        "battery": battery.refs,
        "scores": scores,
    }


def summary_rows(session_id: str, session: SessionLog, outcomes: list[TestOutcome]) -> list[list]:
    m = session.meta
    rows = []
    for o in outcomes:
        q = "" if o.score is None else repr(o.score.reported_q())
        completed = "" if o.score is None else str(o.score.completed).lower()
        rows.append([
            session_id, m.child_id, m.acquisition_id, m.acquisition_date.isoformat(), m.group.level,
            m.gender.value, m.handedness.value, m.emotional_state.value, m.development.value,
            o.test_id, completed, q,
        ])
    return rows


def cmd_score(args) -> int:
    battery = load_battery(args)
    files = collect_inputs(args.inputs)
    if not files:
        raise InputError("no sessions found")
    stems = [f.stem for f in files]
    if len(set(stems)) != len(stems):
        raise InputError("input files must have distinct names (session ids come from file names)")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    def work(path: Path):
        try:
            session = load_session(path, t_max=battery.scene.t_max)
        except (ChildQError, OSError) as exc:
            return path, None, f"{type(exc).__name__}: {exc}"
        outcomes = score_session(session, battery)
        doc = score_document(path.stem, path.name, session, outcomes, battery)
        write_atomic(out / f"{path.stem}.score.json", dump_json(doc))
        return path, summary_rows(path.stem, session, outcomes), None

    with ThreadPoolExecutor(max_workers=max(1, args.workers)) as pool:
        results = list(pool.map(work, files))

    failed = 0
    rows: list[list] = []
    for path, session_rows, error in results:  # already in sorted session-id order
        if error is not None:
            failed += 1
            print(f"{path}: {error}", file=sys.stderr)
        else:
            rows.extend(session_rows)
    write_atomic(out / "scores.csv", csv_text(SCORES_CSV_HEADER, rows))
    log.info("scored %d/%d sessions", len(files) - failed, len(files))
    return EXIT_INPUT if failed else EXIT_OK


# --- score table reading -----------------------------------------------------------


def read_scores_csv(path: str | Path) -> list[tuple[SessionMeta, QScore]]:
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if tuple(header or ()) != SCORES_CSV_HEADER:
                raise SchemaError(f"{path}: not a childq score table (unexpected header)")
            out = []
            for lineno, row in enumerate(reader, start=2):
                if len(row) != len(SCORES_CSV_HEADER):
                    raise SchemaError(f"{path}:{lineno}: expected {len(SCORES_CSV_HEADER)} columns")
                rec = dict(zip(SCORES_CSV_HEADER, row))
                if rec["q"] == "":
                    continue
                meta = SessionMeta(
                    child_id=rec["child_id"],
                    acquisition_id=int(rec["acquisition_id"]),
                    acquisition_date=_dt.date.fromisoformat(rec["acquisition_date"]),
                    group=AgeGroup(int(rec["group"])),
                    gender=Gender(rec["gender"]),
                    handedness=Handedness(rec["handedness"]),
                    emotional_state=EmotionalState(rec["emotional_state"]),
                    development=Development(rec["development"]),
                )
                score = QScore(int(rec["test_id"]), float(rec["q"]), rec["completed"] == "true")
                out.append((meta, score))
            return out
    except OSError as exc:
        raise InputError(f"{path}: {exc}") from None
    except (ValueError, KeyError) as exc:
        if isinstance(exc, ChildQError):
            raise
        raise SchemaError(f"{path}: malformed score table ({exc})") from None


# --- chart ----------------------------------------------------------------------------


def chart_to_dict(chart: GrowthChart, dedupe: str) -> dict:
    return {
        "schema": CHART_SCHEMA,
        "test_id": chart.test_id,
        "percentiles": list(chart.percentiles),
        "min_n": chart.min_n,
        "dedupe": dedupe,
        "curves": {pct_label(p): [[lvl, q] for lvl, q in pts] for p, pts in chart.curves.items()},
        "sample_counts": {str(lvl): n for lvl, n in chart.sample_counts.items()},
    }


def chart_from_dict(doc: dict) -> GrowthChart:
    if doc.get("schema") != CHART_SCHEMA:
        raise SchemaError("not a childq chart document")
    try:
        pcts = tuple(float(p) for p in doc["percentiles"])
        return GrowthChart(
            test_id=int(doc["test_id"]),
            percentiles=pcts,
            curves={p: tuple((int(l), float(q)) for l, q in doc["curves"][pct_label(p)]) for p in pcts},
            sample_counts={int(k): int(v) for k, v in doc["sample_counts"].items()},
            min_n=int(doc["min_n"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"malformed chart document ({exc!r})") from None


def chart_csv(chart: GrowthChart) -> str:
    rows = []
    for level in chart.levels:
        for p in chart.percentiles:
            rows.append([level, pct_label(p), repr(chart.value_at(p, level)), chart.sample_counts[level]])
    return csv_text(CHART_CSV_HEADER, rows)


def cmd_chart(args) -> int:
    scores = read_scores_csv(args.scores)
    chart = build_chart(
        scores, args.test, args.percentiles, min_n=args.min_n,
        dedupe=args.dedupe == "latest-per-child-per-group",
    )
    out = Path(args.out)
    stem = f"chart-test{args.test}"
    write_atomic(out / f"{stem}.csv", chart_csv(chart))
    write_atomic(out / f"{stem}.json", dump_json(chart_to_dict(chart, args.dedupe)))
    write_atomic(out / f"{stem}.svg", chart_svg(chart))
    if not chart.levels:
        log.warning("every group is below --min-n %d; chart has no curve points", args.min_n)
    return EXIT_OK


# --- track -------------------------------------------------------------------------------


def trajectory_to_dict(traj: Trajectory, chart: GrowthChart) -> dict:
    return {
        "schema": TRACK_SCHEMA,
        "child_id": traj.child_id,
        "test_id": chart.test_id,
        "low_percentile": chart.percentiles[0],
        "high_percentile": chart.percentiles[-1],
        "points": [
            {
                "acquisition_id": pt.acquisition_id,
                "group": pt.group_level,
                "q": pt.q,
                "percentile_band": pt.percentile_band.value if pt.percentile_band else None,
            }
            for pt in traj.points
        ],
    }


def cmd_track(args) -> int:
    try:
        with open(args.chart, encoding="utf-8") as fh:
            chart = chart_from_dict(json.load(fh))
    except OSError as exc:
        raise InputError(f"{args.chart}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{args.chart}: {exc}") from None
    rows = [(m, s) for m, s in read_scores_csv(args.scores) if m.child_id == args.child_id and s.test_id == chart.test_id]
    if not rows:
        raise UnknownChild(f"no test {chart.test_id} scores for child {args.child_id!r}")
    try:
        traj = place_trajectory(rows, chart)
    except ValueError as exc:
        if isinstance(exc, ChildQError):
            raise
        raise InputError(str(exc)) from None
    out = Path(args.out)
    safe = "".join(c if c.isalnum() or c in "-_." else "_" for c in args.child_id)
    stem = f"track-{safe}-test{chart.test_id}"
    write_atomic(out / f"{stem}.json", dump_json(trajectory_to_dict(traj, chart)))
    title = f"Test {chart.test_id}: {args.child_id} against Q percentiles"
    write_atomic(out / f"{stem}.svg", chart_svg(chart, traj, title=title))
    return EXIT_OK


# --- entry point ---------------------------------------------------------------------------


def _battery_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--scene", default=DEFAULT_SCENE, help="scene config, name@version or path (default: %(default)s)")
    p.add_argument("--templates", default=None, help="spiral template set, name@version or directory (default: from scene)")
    p.add_argument("--mask", default=None, help="drawing region mask, name@version or PGM path (default: from scene)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="childq", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"childq {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write seeded synthetic session logs")
    _battery_flags(p)
    group = p.add_mutually_exclusive_group()
    group.add_argument("--skill", type=parse_floats, help="comma list of skill levels in [0, 1] (default 0.5)")
    group.add_argument("--levels", type=parse_levels, help="cohort mode: starting educational levels, e.g. 2-8")
    p.add_argument("--count", type=int, default=10, help="sessions per skill level, or children per starting level")
    p.add_argument("--acquisitions", type=int, default=1, help="cohort mode: acquisitions per child")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("validate", help="check session logs against the schema")
    _battery_flags(p)
    p.add_argument("inputs", nargs="+", help="session files or directories")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("score", help="compute Q for every test of every session")
    _battery_flags(p)
    p.add_argument("inputs", nargs="+", help="session files or directories")
    p.add_argument("--out", required=True)
    p.add_argument("--workers", type=int, default=min(4, os.cpu_count() or 1))
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("chart", help="percentile growth chart from a score table")
    p.add_argument("scores", help="scores.csv written by 'childq score'")
    p.add_argument("--test", type=int, required=True, choices=range(1, 7))
    p.add_argument("--percentiles", type=parse_percentiles, default=[10.0, 50.0, 90.0])
    p.add_argument("--min-n", type=int, default=DEFAULT_MIN_N)
    p.add_argument("--dedupe", choices=DEDUPE_CHOICES, default="none")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_chart)

    p = sub.add_parser("track", help="place one child's scores on a growth chart")
    p.add_argument("child_id")
    p.add_argument("scores", help="scores.csv written by 'childq score'")
    p.add_argument("chart", help="chart JSON written by 'childq chart'")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_track)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except EmptyInput as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ChildQError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception:  # noqa: BLE001
        log.exception("internal error")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
