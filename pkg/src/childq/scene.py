"""Scene configuration for the six-test battery and gesture reconstruction.

The touch tests are judged from geometry: which mole a tap landed on, where the
dragged carrot ended up, and how large the pinched rabbit became. The helpers
here replay a record's touch events against its scene to recover those
quantities; :func:`derive_completion` builds on them.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Any, Mapping, Union

from .errors import ConfigMismatch, RangeError, SchemaError
from .model import Phase, TestRecord

SCENE_SCHEMA = "childci-q/scene/1"


@dataclass(frozen=True)
class Circle:
    x: float
    y: float
    r: float

    def __post_init__(self) -> None:
        if not self.r > 0:
            raise RangeError(f"circle radius must be positive, got {self.r}")

    def contains(self, px: float, py: float) -> bool:
        dx, dy = px - self.x, py - self.y
        return dx * dx + dy * dy <= self.r * self.r

    def intersects(self, other: "Circle") -> bool:
        return math.hypot(self.x - other.x, self.y - other.y) <= self.r + other.r

    def moved_to(self, x: float, y: float) -> "Circle":
        return Circle(x, y, self.r)


@dataclass(frozen=True)
class MoleScene:
    """Test 1: six burrows, four of which light up in ``activation`` order."""

    t_max: float
    mole_positions: tuple[Circle, ...]
    activation: tuple[int, ...]
    required_taps: int = 4
    test_id: int = 1

    def __post_init__(self) -> None:
        if len(self.mole_positions) != 6:
            raise SchemaError(f"test 1 needs exactly 6 mole positions, got {len(self.mole_positions)}")
        if len(self.activation) != self.required_taps:
            raise SchemaError("test 1 activation sequence must list one burrow per required tap")
        if any(not 0 <= i < 6 for i in self.activation):
            raise RangeError("test 1 activation indices must be in 0..5")


@dataclass(frozen=True)
class DragScene:
    """Test 2: drag the carrot onto the rabbit."""

    t_max: float
    carrot_region: Circle
    rabbit_region: Circle
    test_id: int = 2

    def __post_init__(self) -> None:
        if self.carrot_region.intersects(self.rabbit_region):
            raise SchemaError("test 2 carrot must start clear of the rabbit")


@dataclass(frozen=True)
class PinchScene:
    """Tests 3 (zoom in) and 4 (zoom out): resize the rabbit between two circles."""

    test_id: int
    t_max: float
    circle_inner_radius: float
    circle_outer_radius: float
    rabbit_initial_radius: float
    center: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self) -> None:
        if self.test_id not in (3, 4):
            raise SchemaError(f"pinch scenes are tests 3 and 4, got {self.test_id}")
        if not 0 < self.circle_inner_radius < self.circle_outer_radius:
            raise RangeError("need 0 < circle_inner_radius < circle_outer_radius")
        if self.rabbit_initial_radius <= 0:
            raise RangeError("rabbit_initial_radius must be positive")


@dataclass(frozen=True)
class SpiralScene:
    t_max: float
    template_set_ref: str
    test_id: int = 5


@dataclass(frozen=True)
class DrawingScene:
    t_max: float
    region_mask_ref: str
    test_id: int = 6


TestScene = Union[MoleScene, DragScene, PinchScene, SpiralScene, DrawingScene]


@dataclass(frozen=True)
class SceneConfig:
    """One versioned battery layout: a scene per test plus the reference screen."""

    name: str
    version: int
    screen: tuple[int, int]
    scenes: Mapping[int, TestScene]

    def __post_init__(self) -> None:
        if sorted(self.scenes) != [1, 2, 3, 4, 5, 6]:
            raise SchemaError(f"scene config needs tests 1..6, got {sorted(self.scenes)}")
        for test_id, scene in self.scenes.items():
            if scene.test_id != test_id:
                raise ConfigMismatch(f"scene under key {test_id} is for test {scene.test_id}")
            if not scene.t_max > 0:
                raise RangeError(f"test {test_id}: t_max must be positive")

    @property
    def ref(self) -> str:
        return f"{self.name}@{self.version}"

    @property
    def t_max(self) -> dict[int, float]:
        return {tid: float(s.t_max) for tid, s in self.scenes.items()}

    def __getitem__(self, test_id: int) -> TestScene:
        return self.scenes[test_id]


# --- loading -----------------------------------------------------------------


def _circle(raw: Any, where: str) -> Circle:
    try:
        return Circle(float(raw["x"]), float(raw["y"]), float(raw["r"]))
    except (KeyError, TypeError, ValueError):
        raise SchemaError(f"{where}: expected a circle {{x, y, r}}, got {raw!r}") from None


def scene_from_dict(doc: Mapping[str, Any]) -> SceneConfig:
    if doc.get("schema") != SCENE_SCHEMA:
        raise SchemaError(f"scene config schema must be {SCENE_SCHEMA!r}")
    try:
        tests = doc["tests"]
        t1, t2, t5, t6 = tests["1"], tests["2"], tests["5"], tests["6"]
        scenes: dict[int, TestScene] = {
            1: MoleScene(
                t_max=float(t1["t_max"]),
                mole_positions=tuple(_circle(c, "tests.1.mole_positions") for c in t1["mole_positions"]),
                activation=tuple(int(i) for i in t1["activation"]),
                required_taps=int(t1.get("required_taps", 4)),
            ),
            2: DragScene(
                t_max=float(t2["t_max"]),
                carrot_region=_circle(t2["carrot_region"], "tests.2.carrot_region"),
                rabbit_region=_circle(t2["rabbit_region"], "tests.2.rabbit_region"),
            ),
            5: SpiralScene(t_max=float(t5["t_max"]), template_set_ref=str(t5["template_set_ref"])),
            6: DrawingScene(t_max=float(t6["t_max"]), region_mask_ref=str(t6["region_mask_ref"])),
        }
        for tid in (3, 4):
            t = tests[str(tid)]
            scenes[tid] = PinchScene(
                test_id=tid,
                t_max=float(t["t_max"]),
                circle_inner_radius=float(t["circle_inner_radius"]),
                circle_outer_radius=float(t["circle_outer_radius"]),
                rabbit_initial_radius=float(t["rabbit_initial_radius"]),
                center=(float(t["center"]["x"]), float(t["center"]["y"])),
            )
        screen = (int(doc["screen"]["width"]), int(doc["screen"]["height"]))
        return SceneConfig(str(doc["name"]), int(doc["version"]), screen, scenes)
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, SchemaError | RangeError | ConfigMismatch):
            raise
        raise SchemaError(f"malformed scene config: {exc!r}") from None


def load_scene(path) -> SceneConfig:
    with open(path, encoding="utf-8") as fh:
        return scene_from_dict(json.load(fh))


# --- gesture reconstruction -------------------------------------------------------


def _check(record: TestRecord, scene: TestScene) -> None:
    if record.test_id != scene.test_id:
        raise ConfigMismatch(f"record is test {record.test_id} but scene is test {scene.test_id}")


@dataclass(frozen=True)
class MoleTally:
    in_taps: int
    out_taps: int
    completed_at: int | None  # ms of the tap that hit the last mole


def mole_taps(record: TestRecord, scene: MoleScene) -> MoleTally:
    """Hit-test each tap (a ``down`` event) against the currently active mole only."""
    _check(record, scene)
    hits = misses = 0
    completed_at = None
    for ev in record.downs:
        if hits < len(scene.activation):
            mole = scene.mole_positions[scene.activation[hits]]
            if mole.contains(ev.x, ev.y):
                hits += 1
                if hits == len(scene.activation):
                    completed_at = ev.t
                continue
        misses += 1
    return MoleTally(hits, misses, completed_at)


def final_carrot(record: TestRecord, scene: DragScene) -> Circle:
    """Replay drags: a pointer that goes down on the carrot carries it until it lifts."""
    _check(record, scene)
    carrot = scene.carrot_region
    holder: int | None = None
    grab = (0.0, 0.0, 0.0, 0.0)  # pointer x, y and carrot x, y at grab time
    for ev in record.events:
        if ev.phase is Phase.DOWN:
            if holder is None and carrot.contains(ev.x, ev.y):
                holder = ev.pointer_id
                grab = (ev.x, ev.y, carrot.x, carrot.y)
        elif ev.pointer_id == holder:
            px, py, cx, cy = grab
            carrot = carrot.moved_to(cx + ev.x - px, cy + ev.y - py)
            if ev.phase is Phase.UP:
                holder = None
    return carrot


def final_rabbit_radius(record: TestRecord, scene: PinchScene) -> float:
    """Replay two-finger pinches; each scales the radius by current/initial finger spread.

    Only the two earliest fingers still down form the pinch. Single-finger
    contact never changes the radius.
    """
    _check(record, scene)
    radius = scene.rabbit_initial_radius
    active: dict[int, tuple[float, float]] = {}  # insertion order = down order
    pinch: tuple[int, int] | None = None
    base_spread = 0.0
    base_radius = radius

    def spread(a: int, b: int) -> float:
        (ax, ay), (bx, by) = active[a], active[b]
        return math.hypot(ax - bx, ay - by)

    for ev in record.events:
        pid = ev.pointer_id
        if ev.phase is Phase.UP:
            active.pop(pid, None)
            if pinch is not None and pid in pinch:
                pinch = None
        else:
            active[pid] = (ev.x, ev.y)
            if pinch is not None and pid in pinch:
                if base_spread > 0:
                    radius = base_radius * spread(*pinch) / base_spread
                else:
                    # fingers started on the same spot; take the first separation as baseline
                    base_spread, base_radius = spread(*pinch), radius
        if pinch is None and len(active) >= 2:
            a, b = list(active)[:2]
            pinch = (a, b)
            base_spread, base_radius = spread(a, b), radius
    return radius


def derive_completion(record: TestRecord, scene: TestScene) -> bool:
    """Whether a touch test (1-4) was completed.

    A completion flag recorded by the acquisition app wins over geometry.
    """
    _check(record, scene)
    if record.test_id not in (1, 2, 3, 4):
        raise ConfigMismatch(f"completion is only derived for touch tests, got test {record.test_id}")
    if record.completed is not None:
        return record.completed
    if isinstance(scene, MoleScene):
        return mole_taps(record, scene).in_taps >= scene.required_taps
    if isinstance(scene, DragScene):
        return final_carrot(record, scene).intersects(scene.rabbit_region)
    r = final_rabbit_radius(record, scene)
    return scene.circle_inner_radius <= r <= scene.circle_outer_radius
