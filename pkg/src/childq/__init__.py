"""Test Quality (Q) scoring for child tablet-interaction sessions.

Six tests are scored from raw touch and stylus traces: tap, drag and pinch
tests from time and tap counts, the spiral by DTW against adult templates,
and the tree drawing by painted area inside versus outside the outline.
Scores feed per-level percentile growth charts.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ChildQError,
    ConfigMismatch,
    DegenerateTrace,
    DimensionMismatch,
    EmptyInput,
    EmptySequence,
    MaskInvariantError,
    MonotonicityError,
    RangeError,
    SchemaError,
    UnknownChild,
)
from .model import SessionLog, parse_session  # noqa: E402
from .result import QScore  # noqa: E402
