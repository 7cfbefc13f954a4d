"""Exception types raised by the numerical core.

Everything derives from ``ValueError`` so callers that only know about
bad-argument errors keep working.
"""


class VarexpError(ValueError):
    """Base class for all toolkit errors."""


class DomainError(VarexpError):
    """A mathematical precondition does not hold at some node."""


class ConfigError(VarexpError):
    """A problem file or run option is malformed."""


class GridMismatchError(VarexpError):
    """Two objects that must share a grid do not."""


class NumericalError(VarexpError):
    """An iterative procedure broke down."""

    def __init__(self, message: str, state: dict | None = None):
        super().__init__(message)
        self.state = state or {}
