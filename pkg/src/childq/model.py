"""Session-log domain types, parsing and canonical serialisation.

A session log is a JSON document::

    {"schema": "childci-q/1",
     "meta": {"child_id": ..., "acquisition_id": 1, "acquisition_date": "2021-10-04",
              "group": 3, "gender": "female", "handedness": "right",
              "emotional_state": "happy", "development": "TD",
              "screen": {"width": 1280, "height": 800}},
     "tests": [{"test_id": 1, "t_start": 0, "t_real": 12.5, "completed": null,
                "events": [{"t": 0, "pointer_id": 0, "phase": "down",
                            "x": 10.0, "y": 20.0, "pressure": null}, ...],
                "strokes": []}, ...]}

Times inside a test are integer milliseconds since the test started; ``t_real``
is in seconds.
"""

from __future__ import annotations

import datetime as _dt
import enum
import json
import math
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

from .errors import MonotonicityError, RangeError, SchemaError

SCHEMA_VERSION = "childci-q/1"

TEST_IDS = (1, 2, 3, 4, 5, 6)
TOUCH_TESTS = (1, 2, 3, 4)
STYLUS_TESTS = (5, 6)

# Battery time limits in seconds, used when no scene config is supplied.
DEFAULT_T_MAX = {1: 30.0, 2: 30.0, 3: 30.0, 4: 30.0, 5: 30.0, 6: 120.0}


class Gender(str, enum.Enum):
    MALE = "male"
    FEMALE = "female"
    UNKNOWN = "unknown"


class Handedness(str, enum.Enum):
    RIGHT = "right"
    LEFT = "left"
    BOTH = "both"
    UNKNOWN = "unknown"


class EmotionalState(str, enum.Enum):
    HAPPY = "happy"
    NORMAL = "normal"
    SAD = "sad"
    UNKNOWN = "unknown"


class Development(str, enum.Enum):
    TD = "TD"
    NTD = "NTD"
    UNKNOWN = "unknown"


class Phase(str, enum.Enum):
    DOWN = "down"
    MOVE = "move"
    UP = "up"


@dataclass(frozen=True)
class AgeGroup:
    """Educational level (2..8) and the age range it covers, in months."""

    level: int

    def __post_init__(self) -> None:
        if isinstance(self.level, bool) or not isinstance(self.level, int):
            raise SchemaError(f"group level must be an integer, got {self.level!r}")
        if not 2 <= self.level <= 8:
            raise RangeError(f"group level must be in 2..8, got {self.level}")

    @property
    def age_range(self) -> tuple[int, int]:
        if self.level == 2:
            return (18, 24)
        return ((self.level - 1) * 12, self.level * 12)

    @property
    def label(self) -> str:
        if self.level == 2:
            return "18M-2Y"
        return f"{self.level - 1}Y-{self.level}Y"


@dataclass(frozen=True)
class SessionMeta:
    child_id: str
    acquisition_id: int
    acquisition_date: _dt.date
    group: AgeGroup
    gender: Gender = Gender.UNKNOWN
    handedness: Handedness = Handedness.UNKNOWN
    emotional_state: EmotionalState = EmotionalState.UNKNOWN
    development: Development = Development.UNKNOWN
    # Raw device pixels; None only for metadata rebuilt from score tables.
    screen: tuple[int, int] | None = None


@dataclass(frozen=True)
class TouchEvent:
    t: int
    pointer_id: int
    phase: Phase
    x: float
    y: float
    pressure: float | None = None


@dataclass(frozen=True)
class StylusSample:
    t: int
    x: float
    y: float
    pressure: float | None = None


@dataclass(frozen=True)
class StylusStroke:
    samples: tuple[StylusSample, ...]

    def __post_init__(self) -> None:
        if len(self.samples) < 2:
            raise SchemaError("a stroke needs at least 2 samples")
        for prev, cur in zip(self.samples, self.samples[1:]):
            if cur.t < prev.t:
                raise MonotonicityError(
                    f"stroke timestamps decrease ({prev.t} -> {cur.t})"
                )

    @property
    def points(self) -> list[tuple[float, float]]:
        return [(s.x, s.y) for s in self.samples]


@dataclass(frozen=True)
class TestRecord:
    test_id: int
    t_start: int
    t_real: float
    events: tuple[TouchEvent, ...] = ()
    strokes: tuple[StylusStroke, ...] = ()
    completed: bool | None = None

    __test__ = False  # keep pytest from collecting this class

    @property
    def downs(self) -> list[TouchEvent]:
        return [e for e in self.events if e.phase is Phase.DOWN]


@dataclass(frozen=True)
class SessionLog:
    meta: SessionMeta
    tests: tuple[TestRecord, ...] = field(default_factory=tuple)

    def test(self, test_id: int) -> TestRecord:
        for record in self.tests:
            if record.test_id == test_id:
                return record
        raise KeyError(test_id)


# --- parsing -----------------------------------------------------------------


def _require(obj: Mapping[str, Any], key: str, where: str) -> Any:
    if not isinstance(obj, dict):
        raise SchemaError(f"{where}: expected an object, got {type(obj).__name__}")
    if key not in obj:
        raise SchemaError(f"{where}: missing required field {key!r}")
    return obj[key]


def _int(value: Any, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise SchemaError(f"{where}: expected an integer, got {value!r}")
    return value


def _number(value: Any, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(f"{where}: expected a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise SchemaError(f"{where}: value must be finite")
    return value


def _pressure(value: Any, where: str) -> float | None:
    if value is None:
        return None
    p = _number(value, where)
    if p < 0:
        raise RangeError(f"{where}: pressure must be >= 0, got {p}")
    return p


def _enum(cls: type[enum.Enum], value: Any, where: str) -> Any:
    if value is None:
        return cls("unknown")
    if not isinstance(value, str):
        raise SchemaError(f"{where}: expected a string, got {value!r}")
    for member in cls:
        if member.value.lower() == value.lower():
            return member
    allowed = ", ".join(m.value for m in cls)
    raise SchemaError(f"{where}: {value!r} is not one of {allowed}")


def _parse_meta(raw: Any) -> SessionMeta:
    where = "meta"
    child_id = _require(raw, "child_id", where)
    if not isinstance(child_id, str) or not child_id.strip():
        raise SchemaError("meta.child_id must be a non-empty string")
    acquisition_id = _int(_require(raw, "acquisition_id", where), "meta.acquisition_id")
    if acquisition_id < 1:
        raise RangeError(f"meta.acquisition_id must be >= 1, got {acquisition_id}")
    date_raw = _require(raw, "acquisition_date", where)
    try:
        acquisition_date = _dt.date.fromisoformat(date_raw)
    except (TypeError, ValueError):
        raise SchemaError(f"meta.acquisition_date: unparseable date {date_raw!r}") from None
    group = AgeGroup(_int(_require(raw, "group", where), "meta.group"))

    screen_raw = _require(raw, "screen", where)
    width = _int(_require(screen_raw, "width", "meta.screen"), "meta.screen.width")
    height = _int(_require(screen_raw, "height", "meta.screen"), "meta.screen.height")
    if width <= 0 or height <= 0:
        raise RangeError(f"meta.screen must be positive, got {width}x{height}")

    return SessionMeta(
        child_id=child_id,
        acquisition_id=acquisition_id,
        acquisition_date=acquisition_date,
        group=group,
        gender=_enum(Gender, raw.get("gender"), "meta.gender"),
        handedness=_enum(Handedness, raw.get("handedness"), "meta.handedness"),
        emotional_state=_enum(EmotionalState, raw.get("emotional_state"), "meta.emotional_state"),
        development=_enum(Development, raw.get("development"), "meta.development"),
        screen=(width, height),
    )


def _located(where: str, exc: Exception) -> Exception:
    return type(exc)(f"{where}{exc}")


def _parse_event(ev: Any) -> TouchEvent:
    t = _int(_require(ev, "t", ""), ".t")
    if t < 0:
        raise RangeError(f".t must be >= 0, got {t}")
    return TouchEvent(
        t=t,
        pointer_id=_int(_require(ev, "pointer_id", ""), ".pointer_id"),
        phase=_enum(Phase, _require(ev, "phase", ""), ".phase"),
        x=_number(_require(ev, "x", ""), ".x"),
        y=_number(_require(ev, "y", ""), ".y"),
        pressure=_pressure(ev.get("pressure"), ".pressure"),
    )


def _parse_events(raw: Any, where: str) -> tuple[TouchEvent, ...]:
    if not isinstance(raw, list):
        raise SchemaError(f"{where}: expected a list")
    events = []
    for i, ev in enumerate(raw):
        try:
            events.append(_parse_event(ev))
        except (SchemaError, RangeError) as exc:
            raise _located(f"{where}[{i}]", exc) from None
    _check_pointer_sequences(events, where)
    # Stable: equal timestamps keep document order within a pointer.
    events.sort(key=lambda e: (e.t, e.pointer_id))
    return tuple(events)


def _check_pointer_sequences(events: Sequence[TouchEvent], where: str) -> None:
    """Each pointer must follow down -> move* -> up, with time never going back.

    A sequence left open at the end of the list is allowed (test ended mid-gesture).
    """
    down_open: dict[int, bool] = {}
    last_t: dict[int, int] = {}
    for ev in events:
        pid = ev.pointer_id
        if pid in last_t and ev.t < last_t[pid]:
            raise MonotonicityError(
                f"{where}: pointer {pid} time goes back ({last_t[pid]} -> {ev.t})"
            )
        last_t[pid] = ev.t
        is_open = down_open.get(pid, False)
        if ev.phase is Phase.DOWN:
            if is_open:
                raise SchemaError(f"{where}: pointer {pid} went down twice without up")
            down_open[pid] = True
        else:
            if not is_open:
                raise SchemaError(f"{where}: pointer {pid} {ev.phase.value} without down")
            if ev.phase is Phase.UP:
                down_open[pid] = False


def _parse_sample(s: Any) -> StylusSample:
    if type(s) is dict and type(s.get("t")) is int and type(s.get("x")) in (int, float) \
            and type(s.get("y")) in (int, float) and s.get("pressure") is None:
        # fast path for the common, well-formed case
        t, x, y = s["t"], float(s["x"]), float(s["y"])
        if t >= 0 and math.isfinite(x) and math.isfinite(y):
            return StylusSample(t, x, y, None)
    t = _int(_require(s, "t", ""), ".t")
    if t < 0:
        raise RangeError(f".t must be >= 0, got {t}")
    return StylusSample(
        t=t,
        x=_number(_require(s, "x", ""), ".x"),
        y=_number(_require(s, "y", ""), ".y"),
        pressure=_pressure(s.get("pressure"), ".pressure"),
    )


def _parse_strokes(raw: Any, where: str) -> tuple[StylusStroke, ...]:
    if not isinstance(raw, list):
        raise SchemaError(f"{where}: expected a list")
    strokes = []
    for i, st in enumerate(raw):
        w = f"{where}[{i}]"
        samples_raw = _require(st, "samples", w)
        if not isinstance(samples_raw, list):
            raise SchemaError(f"{w}.samples: expected a list")
        samples = []
        for j, s in enumerate(samples_raw):
            try:
                samples.append(_parse_sample(s))
            except (SchemaError, RangeError) as exc:
                raise _located(f"{w}.samples[{j}]", exc) from None
        try:
            strokes.append(StylusStroke(tuple(samples)))
        except (SchemaError, MonotonicityError) as exc:
            raise type(exc)(f"{w}: {exc}") from None
    strokes.sort(key=lambda s: s.samples[0].t)
    return tuple(strokes)


def _parse_record(raw: Any, index: int, t_max: Mapping[int, float]) -> TestRecord:
    where = f"tests[{index}]"
    test_id = _int(_require(raw, "test_id", where), f"{where}.test_id")
    if test_id not in TEST_IDS:
        raise RangeError(f"{where}.test_id must be in 1..6, got {test_id}")
    t_start = _int(_require(raw, "t_start", where), f"{where}.t_start")
    t_real = _number(_require(raw, "t_real", where), f"{where}.t_real")
    if t_real < 0:
        raise RangeError(f"{where}.t_real must be >= 0, got {t_real}")
    if t_real > t_max[test_id]:
        raise RangeError(
            f"{where}.t_real {t_real}s exceeds the {t_max[test_id]}s limit of test {test_id}"
        )
    completed = raw.get("completed")
    if completed is not None and not isinstance(completed, bool):
        raise SchemaError(f"{where}.completed must be a boolean or null")

    events = _parse_events(raw.get("events", []), f"{where}.events")
    strokes = _parse_strokes(raw.get("strokes", []), f"{where}.strokes")
    if test_id in TOUCH_TESTS and strokes:
        raise SchemaError(f"{where}: touch test {test_id} cannot carry stylus strokes")
    if test_id in STYLUS_TESTS and events:
        raise SchemaError(f"{where}: stylus test {test_id} cannot carry touch events")
    return TestRecord(test_id, t_start, t_real, events, strokes, completed)


def parse_session(
    raw_document: Mapping[str, Any] | str | bytes,
    t_max: Mapping[int, float] | None = None,
) -> SessionLog:
    """Validate a session document and build a :class:`SessionLog`.

    ``raw_document`` may be the decoded mapping or the JSON text itself.
    ``t_max`` overrides the per-test time limits (seconds) used to bound
    ``t_real``; scene configs provide it via ``SceneConfig.t_max``.
    """
    if isinstance(raw_document, (str, bytes)):
        try:
            raw_document = json.loads(raw_document)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"not valid JSON: {exc}") from None
    limits = dict(DEFAULT_T_MAX if t_max is None else t_max)

    schema = _require(raw_document, "schema", "document")
    if schema != SCHEMA_VERSION:
        raise SchemaError(f"unsupported schema {schema!r}, expected {SCHEMA_VERSION!r}")
    meta = _parse_meta(_require(raw_document, "meta", "document"))
    tests_raw = _require(raw_document, "tests", "document")
    if not isinstance(tests_raw, list):
        raise SchemaError("document.tests must be a list")
    records = [_parse_record(r, i, limits) for i, r in enumerate(tests_raw)]
    ids = sorted(r.test_id for r in records)
    if ids != list(TEST_IDS):
        raise SchemaError(f"expected exactly one record per test 1..6, got ids {ids}")
    records.sort(key=lambda r: r.test_id)
    return SessionLog(meta, tuple(records))


def load_session(path, t_max: Mapping[int, float] | None = None) -> SessionLog:
    with open(path, "rb") as fh:
        return parse_session(fh.read(), t_max=t_max)


# --- serialisation -------------------------------------------------------------


def meta_to_dict(meta: SessionMeta) -> dict[str, Any]:
    out: dict[str, Any] = {
        "child_id": meta.child_id,
        "acquisition_id": meta.acquisition_id,
        "acquisition_date": meta.acquisition_date.isoformat(),
        "group": meta.group.level,
        "gender": meta.gender.value,
        "handedness": meta.handedness.value,
        "emotional_state": meta.emotional_state.value,
        "development": meta.development.value,
    }
    if meta.screen is not None:
        out["screen"] = {"width": meta.screen[0], "height": meta.screen[1]}
    return out


def record_to_dict(record: TestRecord) -> dict[str, Any]:
    return {
        "test_id": record.test_id,
        "t_start": record.t_start,
        "t_real": record.t_real,
        "completed": record.completed,
        "events": [
            {
                "t": e.t,
                "pointer_id": e.pointer_id,
                "phase": e.phase.value,
                "x": e.x,
                "y": e.y,
                "pressure": e.pressure,
            }
            for e in record.events
        ],
        "strokes": [
            {"samples": [{"t": s.t, "x": s.x, "y": s.y, "pressure": s.pressure} for s in st.samples]}
            for st in record.strokes
        ],
    }


def session_to_dict(session: SessionLog) -> dict[str, Any]:
    return {
        "schema": SCHEMA_VERSION,
        "meta": meta_to_dict(session.meta),
        "tests": [record_to_dict(r) for r in session.tests],
    }


def dumps_session(session: SessionLog) -> str:
    """Canonical JSON text: fixed key order, compact separators, trailing newline."""
    return json.dumps(session_to_dict(session), separators=(",", ":"), ensure_ascii=False) + "\n"
