"""Exception hierarchy shared by all modules."""


class BulletsError(Exception):
    pass


class EqualSpeeds(BulletsError, ValueError):
    """Two trajectories with the same speed were compared."""


class SingularParameter(BulletsError):
    """A triple collision (or a bullet in two simultaneous collisions) occurred."""

    def __init__(self, message, patterns=None):
        super().__init__(message)
        self.patterns = patterns or []


class NotGeneric(SingularParameter):
    """The parameter contains at least one critical pattern."""


class DegenerateConstraint(BulletsError):
    """A trajectory touches the special segment at an ambiguous point."""


class DimensionMismatch(BulletsError, ValueError):
    pass


class SizeLimit(BulletsError):
    pass


class RecursionStuck(BulletsError):
    """The survivor recursion on a scheme table found no admissible partner."""


class EmptySample(BulletsError, ValueError):
    pass


class InvalidParameter(BulletsError, ValueError):
    """Raised by validation; ``field`` names the offending entry."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field
