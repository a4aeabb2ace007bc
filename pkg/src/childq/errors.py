"""Exception hierarchy.

Everything raised on bad input derives from :class:`ChildQError`, so callers
(the CLI in particular) can separate input problems from internal bugs.
"""


class ChildQError(Exception):
    """Base class for all typed input errors."""


class SchemaError(ChildQError, ValueError):
    """A document is missing a required field or carries a bad value."""


class MonotonicityError(ChildQError, ValueError):
    """Timestamps go backwards inside a pointer sequence or a stroke."""


class RangeError(ChildQError, ValueError):
    """A numeric field is outside its allowed range."""


class ConfigMismatch(ChildQError, ValueError):
    """A scene configuration does not belong to the record being scored."""


class EmptySequence(ChildQError, ValueError):
    pass


class DegenerateTrace(ChildQError, ValueError):
    """All trace samples coincide, so there is no bounding box to normalise."""


class DimensionMismatch(ChildQError, ValueError):
    pass


class MaskInvariantError(ChildQError, ValueError):
    """A region mask has an empty region."""


class EmptyInput(ChildQError, ValueError):
    pass


class UnknownChild(ChildQError, LookupError):
    pass
