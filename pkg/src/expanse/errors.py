"""Exception types shared across the toolkit."""


class ExpanseError(Exception):
    pass


class StructuralError(ExpanseError, ValueError):
    """Mismatched space/map/measure variants or malformed inputs."""


class PreconditionError(ExpanseError, ValueError):
    """An estimator was called outside its admissible regime (floors, ranges)."""
