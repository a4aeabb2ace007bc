from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Mapping

from .errors import RangeError


@dataclass(frozen=True)
class QScore:
    """Quality of one test: ``q`` in percent plus the intermediates behind it.

    ``q`` is kept at full precision; :meth:`reported_q` gives the value written
    to reports.
    """

    test_id: int
    q: float
    completed: bool
    components: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not 0.0 <= self.q <= 100.0:
            raise RangeError(f"test {self.test_id}: q={self.q} outside [0, 100]")
        if not self.completed and self.test_id in (1, 2, 3, 4) and self.q != 0:
            raise RangeError(f"test {self.test_id}: uncompleted touch test must score 0")

    def reported_q(self) -> float:
        """Touch-test Q rounds half-up to 0.1; stylus-test Q is reported as is."""
        if self.test_id in (1, 2, 3, 4):
            return math.floor(self.q * 10 + 0.5) / 10
        return self.q
