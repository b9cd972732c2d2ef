"""Exception types shared across the package."""


class FeasibilityError(ValueError):
    """An assignment violates one of the problem constraints."""


class InstanceError(ValueError):
    """A topology or derived instance is malformed."""


class ScenarioError(ValueError):
    """A scenario or experiment description is invalid."""


class SizeError(ValueError):
    """An operation was requested above its supported problem size."""


class SimulationError(RuntimeError):
    """The simulator detected an internal inconsistency (e.g. a proven
    bound was exceeded), which flags an implementation bug rather than a
    bad input."""
