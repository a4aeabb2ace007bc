"""Q for the touch tests (1-4): the mean of a time score and a tap score."""

from __future__ import annotations

from .errors import ConfigMismatch, RangeError
from .model import Phase, TestRecord
from .result import QScore
from .scene import MoleScene, TestScene, derive_completion, mole_taps

# Two finger-downs closer than this form a single pinch-tap on tests 3 and 4.
PINCH_WINDOW_MS = 150


def p_time(t_real: float, t_max: float) -> float:
    if t_max <= 0:
        raise RangeError(f"t_max must be positive, got {t_max}")
    if not 0 <= t_real <= t_max:
        raise RangeError(f"t_real must be within [0, {t_max}], got {t_real}")
    return (t_max - t_real) / t_max * 100


def p_taps_test1(in_taps: int, out_taps: int) -> float:
    """25 points per mole hit, minus 5 per missed tap, clamped to [0, 100]."""
    if not 0 <= in_taps <= 4:
        raise RangeError(f"in_taps must be in 0..4, got {in_taps}")
    if out_taps < 0:
        raise RangeError(f"out_taps must be >= 0, got {out_taps}")
    return float(min(100, max(0, in_taps * 25 - out_taps * 5)))


def p_taps_simple(n_taps: int) -> float:
    if n_taps < 0:
        raise RangeError(f"n_taps must be >= 0, got {n_taps}")
    return 0.0 if n_taps == 0 else 100 / n_taps


def count_taps(record: TestRecord, merge_pinches: bool = False) -> int:
    """Count ``down`` events.

    With ``merge_pinches``, a down followed within :data:`PINCH_WINDOW_MS` by a
    down from another finger, while the first is still touching, counts once.
    """
    if not merge_pinches:
        return len(record.downs)
    taps = 0
    touching: set[int] = set()
    pending: tuple[int, int] | None = None  # (pointer, t) of a down that can still pair
    for ev in record.events:
        if ev.phase is Phase.DOWN:
            if (
                pending is not None
                and pending[0] != ev.pointer_id
                and pending[0] in touching
                and ev.t - pending[1] <= PINCH_WINDOW_MS
            ):
                pending = None  # second finger of a pinch: already counted
            else:
                taps += 1
                pending = (ev.pointer_id, ev.t)
            touching.add(ev.pointer_id)
        elif ev.phase is Phase.UP:
            touching.discard(ev.pointer_id)
    return taps


def q_touch(record: TestRecord, scene: TestScene) -> QScore:
    if record.test_id not in (1, 2, 3, 4):
        raise ConfigMismatch(f"q_touch scores tests 1-4, got test {record.test_id}")
    completed = derive_completion(record, scene)
    t_max = float(scene.t_max)
    components: dict[str, float | int] = {"t_max": t_max, "t_real": record.t_real}

    if isinstance(scene, MoleScene):
        tally = mole_taps(record, scene)
        components["in_taps"] = tally.in_taps
        components["out_taps"] = tally.out_taps
        components["n_taps"] = tally.in_taps + tally.out_taps
        taps_score = p_taps_test1(tally.in_taps, tally.out_taps)
    else:
        n_taps = count_taps(record, merge_pinches=record.test_id in (3, 4))
        components["n_taps"] = n_taps
        taps_score = p_taps_simple(n_taps)

    components["p_time"] = p_time(record.t_real, t_max)
    components["p_taps"] = taps_score
    q = (components["p_time"] + taps_score) / 2 if completed else 0.0
    return QScore(record.test_id, q, completed, components)
