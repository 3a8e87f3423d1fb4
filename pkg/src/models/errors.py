from typing import Any, Dict, Optional


class FppError(Exception):
    """Base class for every error raised by the toolkit"""


class GraphError(FppError, ValueError):
    """Invalid graph parameters, vertex ids or edge ids"""


class WeightError(FppError, ValueError):
    """Edge lengths violating 0 < a < b"""


class ConfigValidationError(FppError, ValueError):
    pass


class ShardMismatchError(FppError, ValueError):
    pass


class InstanceTooLargeError(FppError, ValueError):
    """Exhaustive or exact computation requested on an instance past its guard"""


class DisconnectedPairError(FppError, RuntimeError):
    """Internal error: the supported graph kinds are always connected"""


class InvariantViolation(FppError, AssertionError):
    """A verified inequality or identity failed during a campaign"""

    def __init__(self, message: str, report: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.report = report


class TransitivityWarning(UserWarning):
    pass
