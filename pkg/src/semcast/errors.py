"""Exception types shared across the pipeline stages."""


class SemcastError(Exception):
    """Base class for all simulator errors."""


class ScenarioError(SemcastError):
    """Scenario file failed to parse or violated a schema invariant."""


class DimensionMismatchError(SemcastError):
    """Array shapes or image dimensions do not line up."""


class InfeasibleError(SemcastError):
    """A budget cannot carry the mandatory load even at the cheapest option."""


class InstanceTooLargeError(SemcastError):
    """Exhaustive enumeration was requested on an instance beyond its size guard."""
