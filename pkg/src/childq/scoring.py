"""Score all six tests of a session against one battery configuration."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

from .drawing import DEFAULT_BRUSH_RADIUS, PenaltyCaps, RegionMask, load_mask, q_drawing
from .errors import ChildQError
from .model import SessionLog, TestRecord
from .resources import resolve
from .result import QScore
from .scene import SceneConfig, load_scene
from .spiral import SpiralTemplate, load_template_set, q_spiral
from .touch import q_touch

log = logging.getLogger(__name__)

DEFAULT_SCENE = "default@1"


@dataclass(frozen=True)
class Battery:
    scene: SceneConfig
    templates: tuple[SpiralTemplate, ...]
    mask: RegionMask
    caps: PenaltyCaps = field(default_factory=PenaltyCaps)
    brush_radius: float = DEFAULT_BRUSH_RADIUS
    refs: dict = field(default_factory=dict, compare=False)

    @classmethod
    def load(
        cls,
        scene: str = DEFAULT_SCENE,
        templates: str | None = None,
        mask: str | None = None,
        brush_radius: float = DEFAULT_BRUSH_RADIUS,
    ) -> "Battery":
        """Resolve and load every asset up front; any failure raises before scoring."""
        scene_cfg = load_scene(resolve("scenes", scene))
        templates = templates or scene_cfg[5].template_set_ref
        mask = mask or scene_cfg[6].region_mask_ref
        return cls(
            scene=scene_cfg,
            templates=tuple(load_template_set(resolve("templates", templates))),
            mask=load_mask(resolve("masks", mask)),
            brush_radius=brush_radius,
            refs={"scene": str(scene), "templates": str(templates), "mask": str(mask)},
        )


def score_record(record: TestRecord, battery: Battery, screen: tuple[int, int] | None) -> QScore:
    if record.test_id in (1, 2, 3, 4):
        return q_touch(record, battery.scene[record.test_id])
    if record.test_id == 5:
        return q_spiral(record, battery.templates)
    return q_drawing(
        record,
        battery.mask,
        battery.caps,
        screen=screen or battery.scene.screen,
        brush_radius=battery.brush_radius,
    )


@dataclass(frozen=True)
class TestOutcome:
    test_id: int
    score: QScore | None
    error: str | None = None

    __test__ = False


def score_session(session: SessionLog, battery: Battery) -> list[TestOutcome]:
    """Score each record; a record that cannot be scored yields ``score=None`` with the reason."""
    outcomes = []
    for record in session.tests:
        try:
            outcomes.append(TestOutcome(record.test_id, score_record(record, battery, session.meta.screen)))
        except ChildQError as exc:
            log.warning("%s test %d unscorable: %s", session.meta.child_id, record.test_id, exc)
            outcomes.append(TestOutcome(record.test_id, None, f"{type(exc).__name__}: {exc}"))
    return outcomes
